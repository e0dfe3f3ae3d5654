"""Command-line front end.

Every command writes its outputs plus ``manifest.json`` into ``--out``.
Settings resolve as: command-line flags, then an optional ``--config`` JSON
file, then built-in defaults; the manifest echoes the resolved values.
Wall-clock timings only appear in the manifest, so all other outputs are
byte-identical across reruns with the same arguments and seed.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .pwan_core import estimate_divergence
from .instances import fish_pair
from .measures import diameter, load_points, save_points
from .primal_oracle import (InfeasibleProblem, omitted_mass,
                            solve_distance_threshold, solve_partial_mass)
from .potential_net import NetConfig
from .registration import (CoherenceConfig, FineTuneConfig, RigidDeform,
                           SmoothDeform, desk_config, gaussian_kernel,
                           nystrom_decompose, register, synthesize_case)
from .toy_discrepancies import discrepancy_sweep, rows_to_csv

DEFAULTS = {
    "gen": dict(shape="sphere", n=500, outliers=0, crop_retain=None,
                deform="none", angle=30.0, axis=[0.0, 0.0, 1.0],
                translation=[0.0, 0.0, 0.0], magnitude=0.1, centers=5,
                normalization="separate", seed=0),
    "oracle": dict(mass=None, distance=None),
    "estimate": dict(kind="mass", threshold=None, steps=5000,
                     widths=[128, 128, 128], seed=0),
    "register": dict(mode="rigid", kind="mass", threshold=None, T=800, u=10,
                     lam=0.01, rho=2.0, sigma=0.1, k=100, lr_potential=1e-3,
                     lr_transform=1e-3, finetune=True, seed=0),
    "sweep": dict(outliers=[1, 10, 1000], seeds=5, steps=5000, sets=10,
                  r=200, seed=0),
}


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _threads():
    try:
        return max(1, int(os.environ.get("TOOLKIT_THREADS", "1")))
    except ValueError:
        return 1


class RunManifest:
    def __init__(self, command, config, inputs=()):
        self.command = command
        self.config = config
        self.inputs = {str(p): _sha256(p) for p in inputs}
        self.outputs = []
        self.timings = {}
        self._t0 = time.perf_counter()

    def add_output(self, path):
        self.outputs.append(str(path))

    def write(self, out_dir):
        self.timings.setdefault("total",
                                time.perf_counter() - self._t0)
        data = {"command": self.command, "config": self.config,
                "seed": self.config.get("seed"),
                "inputs": self.inputs,
                "outputs": {p: _sha256(p) for p in self.outputs},
                "timings": self.timings, "version": __version__}
        with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _resolve(command, args):
    cfg = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg.update(json.load(fh))
    for key in DEFAULTS[command]:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _write_json(path, data, manifest):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.add_output(path)


def _write_text(path, text, manifest):
    with open(path, "w") as fh:
        fh.write(text)
    manifest.add_output(path)


def cmd_gen(args):
    cfg = _resolve("gen", args)
    if cfg["deform"] == "rigid":
        deform = RigidDeform(cfg["angle"], tuple(cfg["axis"]),
                             tuple(cfg["translation"]))
    elif cfg["deform"] == "smooth":
        deform = SmoothDeform(int(cfg["centers"]), cfg["magnitude"])
    elif cfg["deform"] == "none":
        deform = None
    else:
        raise ValueError(f"unknown deform {cfg['deform']!r}")
    norm = None if cfg["normalization"] == "none" else cfg["normalization"]
    case = synthesize_case(cfg["shape"], int(cfg["n"]), deform,
                           int(cfg["outliers"]), cfg["crop_retain"],
                           int(cfg["seed"]), norm)
    man = RunManifest("gen", cfg)
    out = args.out
    for name, pts in (("source.txt", case.source),
                      ("reference.txt", case.reference)):
        p = os.path.join(out, name)
        save_points(p, pts)
        man.add_output(p)
    _write_text(os.path.join(out, "gt.txt"),
                "".join(f"{int(g)}\n" for g in case.gt), man)
    _write_json(os.path.join(out, "case.json"), case.info, man)
    man.write(out)
    print(f"source: {len(case.source)} points, reference: "
          f"{len(case.reference)} points -> {out}")


def cmd_oracle(args):
    cfg = _resolve("oracle", args)
    alpha, beta = load_points(args.alpha), load_points(args.beta)
    if (cfg["mass"] is None) == (cfg["distance"] is None):
        raise ValueError("give exactly one of --mass or --distance")
    if cfg["mass"] is not None:
        plan = solve_partial_mass(alpha, beta, float(cfg["mass"]))
    else:
        plan = solve_distance_threshold(alpha, beta, float(cfg["distance"]))
    ra, rb = omitted_mass(plan, alpha, beta)
    man = RunManifest("oracle", cfg, [args.alpha, args.beta])
    lines = ["i,j,mass\n"] + [f"{i},{j},{w!r}\n" for i, j, w in plan.entries()]
    _write_text(os.path.join(args.out, "plan.csv"), "".join(lines), man)
    summary = {"objective": plan.objective_value,
               "total_mass": plan.total_mass,
               "transport_cost": plan.transport_cost,
               "residual_masses": [ra.mass, rb.mass]}
    _write_json(os.path.join(args.out, "summary.json"), summary, man)
    man.write(args.out)
    print(json.dumps(summary))


def cmd_estimate(args):
    cfg = _resolve("estimate", args)
    if cfg["threshold"] is None:
        raise ValueError("--threshold is required")
    alpha, beta = load_points(args.alpha), load_points(args.beta)
    net = NetConfig(alpha.dim, tuple(cfg["widths"]), ())
    t0 = time.perf_counter()
    est, trace, potential = estimate_divergence(
        alpha, beta, cfg["kind"], float(cfg["threshold"]), net,
        steps=int(cfg["steps"]), seed=int(cfg["seed"]))
    man = RunManifest("estimate", cfg, [args.alpha, args.beta])
    man.timings["estimate"] = time.perf_counter() - t0
    trace_path = os.path.join(args.out, "trace.jsonl")
    _write_text(trace_path, trace.to_json_lines(), man)
    pot_path = os.path.join(args.out, "potential.json")
    potential.save(pot_path)
    man.add_output(pot_path)
    _write_json(os.path.join(args.out, "estimate.json"),
                {"estimate": est, "trace": "trace.jsonl",
                 "potential": "potential.json"}, man)
    man.write(args.out)
    print(json.dumps({"estimate": est}))


def cmd_register(args):
    cfg = _resolve("register", args)
    src, ref = load_points(args.source), load_points(args.reference)
    Y, X = src.points, ref.points
    thr = cfg["threshold"]
    if thr is None:
        if cfg["kind"] != "mass":
            raise ValueError("--threshold is required for the distance kind")
        thr = float(min(len(X), len(Y)))
    pwan = desk_config(cfg["kind"], thr, len(X), len(Y), dim=X.shape[1],
                       T=int(cfg["T"]), u=int(cfg["u"]), seed=int(cfg["seed"]),
                       lr_potential=cfg["lr_potential"],
                       lr_transform=cfg["lr_transform"])
    coh = CoherenceConfig(cfg["lam"], cfg["rho"], cfg["sigma"],
                          min(int(cfg["k"]), len(Y)))
    ft = FineTuneConfig(kind=cfg["kind"],
                        **({"m": thr} if cfg["kind"] == "mass" else {"h": thr}))
    gt = None
    inputs = [args.source, args.reference]
    if args.gt:
        gt = {"correspondence": np.loadtxt(args.gt, dtype=np.int64, ndmin=1)}
        inputs.append(args.gt)
    if args.case:
        with open(args.case) as fh:
            info = json.load(fh)
        gt = gt or {}
        for key in ("rotation", "translation"):
            if key in info:
                gt[key] = info[key]
        inputs.append(args.case)
    transform, report = register(Y, X, cfg["mode"], pwan, coh, ft, gt,
                                 seed=int(cfg["seed"]),
                                 finetune=bool(cfg["finetune"]))
    man = RunManifest("register", cfg, inputs)
    man.timings.update(report["timings"])
    out = args.out
    aligned = os.path.join(out, "transformed.txt")
    save_points(aligned, transform.apply(Y))
    man.add_output(aligned)
    tdict = transform.to_dict()
    if cfg["mode"] == "nonrigid":
        vpath = os.path.join(out, "V.txt")
        np.savetxt(vpath, transform.V, fmt="%.17g")
        man.add_output(vpath)
        tdict["V"] = "V.txt"
    _write_json(os.path.join(out, "transform.json"), tdict, man)
    _write_text(os.path.join(out, "trace.jsonl"),
                report["trace"].to_json_lines(), man)
    keep = ("mode", "kind", "divergence_estimate", "pwan_steps",
            "stopped_early", "fine_tune_iterations", "fine_tune_noop",
            "fine_tune_objective", "mse", "rotation_error_deg",
            "translation_error")
    rep = {k: report[k] for k in keep if k in report}
    rep["config"] = cfg
    _write_json(os.path.join(out, "report.json"), rep, man)
    man.write(out)
    print(json.dumps({k: rep[k] for k in ("divergence_estimate", "mse")
                      if k in rep}))


def _oracle_vs_dual_job(job):
    seed, kind, steps = job
    alpha, beta = fish_pair(seed)
    if kind == "mass":
        thr = 0.5 * min(alpha.mass, beta.mass)
        ref = solve_partial_mass(alpha, beta, thr).objective_value
    else:
        thr = 0.3 * diameter(alpha, beta)
        ref = solve_distance_threshold(alpha, beta, thr).objective_value
    est, _, _ = estimate_divergence(alpha, beta, kind, thr, steps=steps,
                                    seed=seed)
    return seed, kind, thr, ref, est, abs(est - ref) / abs(ref)


def _nystrom_rows(n_sets, r, seed):
    rows = []
    ks = [r // 8, r // 4, r // 2, r]
    for s in range(n_sets):
        rng = np.random.default_rng(seed + s)
        Y = rng.normal(size=(r, 3))
        G = gaussian_kernel(Y, 2.0)
        for k in ks:
            Q, lam = nystrom_decompose(Y, 2.0, k, seed=seed + s)
            err = np.linalg.norm(Q * lam @ Q.T - G) / np.linalg.norm(G)
            rows.append((s, k, float(err)))
    return rows


def cmd_sweep(args):
    cfg = _resolve("sweep", args)
    man = RunManifest("sweep", dict(cfg, name=args.name))
    out = args.out
    if args.name == "fig5":
        for n in cfg["outliers"]:
            header, rows = discrepancy_sweep("fig5", n_outliers=int(n))
            _write_text(os.path.join(out, f"fig5_N{int(n)}.csv"),
                        rows_to_csv(header, rows), man)
    elif args.name == "fig12":
        header, rows = discrepancy_sweep("fig12")
        _write_text(os.path.join(out, "fig12.csv"),
                    rows_to_csv(header, rows), man)
    elif args.name == "oracle-vs-dual":
        jobs = [(s, kind, int(cfg["steps"])) for s in range(int(cfg["seeds"]))
                for kind in ("mass", "distance")]
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            results = list(pool.map(_oracle_vs_dual_job, jobs))
        lines = ["seed,kind,threshold,oracle,estimate,relative_error\n"]
        lines += [f"{s},{k},{t!r},{o!r},{e!r},{r!r}\n"
                  for s, k, t, o, e, r in results]
        mean = float(np.mean([r[-1] for r in results]))
        lines.append(f"mean,,,,,{mean!r}\n")
        _write_text(os.path.join(out, "oracle_vs_dual.csv"), "".join(lines),
                    man)
    elif args.name == "nystrom-k":
        rows = _nystrom_rows(int(cfg["sets"]), int(cfg["r"]), int(cfg["seed"]))
        lines = ["set,k,frobenius_relative_error\n"]
        lines += [f"{s},{k},{e!r}\n" for s, k, e in rows]
        for k in sorted({k for _, k, _ in rows}):
            med = float(np.median([e for _, kk, e in rows if kk == k]))
            lines.append(f"median,{k},{med!r}\n")
        _write_text(os.path.join(out, "nystrom_k.csv"), "".join(lines), man)
    else:
        raise ValueError(f"unknown sweep {args.name!r}")
    man.write(out)
    print(f"wrote {len(man.outputs)} file(s) to {out}")


def _floats(s):
    return [float(v) for v in s.split(",")]


def _ints(s):
    return [int(v) for v in s.split(",")]


def build_parser():
    p = argparse.ArgumentParser(prog="partialot",
                                description="Partial Wasserstein-1 toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--config", help="JSON file with default overrides")
        sp.add_argument("--seed", type=int)

    g = sub.add_parser("gen", help="synthesize a registration case")
    common(g)
    g.add_argument("--shape", help="sphere, helix, blob or a point file")
    g.add_argument("--n", type=int)
    g.add_argument("--outliers", type=int)
    g.add_argument("--crop-retain", dest="crop_retain", type=float)
    g.add_argument("--deform", choices=["none", "rigid", "smooth"])
    g.add_argument("--angle", type=float, help="rotation angle in degrees")
    g.add_argument("--axis", type=_floats)
    g.add_argument("--translation", type=_floats)
    g.add_argument("--magnitude", type=float)
    g.add_argument("--centers", type=int)
    g.add_argument("--normalization", choices=["separate", "joint", "none"])
    g.set_defaults(func=cmd_gen)

    o = sub.add_parser("oracle", help="solve a partial transport LP exactly")
    common(o)
    o.add_argument("alpha")
    o.add_argument("beta")
    o.add_argument("--mass", type=float)
    o.add_argument("--distance", type=float)
    o.set_defaults(func=cmd_oracle)

    e = sub.add_parser("estimate", help="neural dual estimate")
    common(e)
    e.add_argument("alpha")
    e.add_argument("beta")
    e.add_argument("--kind", choices=["mass", "distance"])
    e.add_argument("--threshold", type=float)
    e.add_argument("--steps", type=int)
    e.add_argument("--widths", type=_ints)
    e.set_defaults(func=cmd_estimate)

    r = sub.add_parser("register", help="register source onto reference")
    common(r)
    r.add_argument("source")
    r.add_argument("reference")
    r.add_argument("--gt", help="ground-truth correspondence file")
    r.add_argument("--case", help="case.json from gen, for rigid ground truth")
    r.add_argument("--mode", choices=["rigid", "nonrigid"])
    r.add_argument("--kind", choices=["mass", "distance"])
    r.add_argument("--threshold", type=float)
    r.add_argument("--T", type=int)
    r.add_argument("--u", type=int)
    r.add_argument("--lam", type=float)
    r.add_argument("--rho", type=float)
    r.add_argument("--sigma", type=float)
    r.add_argument("--k", type=int)
    r.add_argument("--lr-potential", dest="lr_potential", type=float)
    r.add_argument("--lr-transform", dest="lr_transform", type=float)
    r.add_argument("--no-finetune", dest="finetune", action="store_const",
                   const=False)
    r.set_defaults(func=cmd_register)

    s = sub.add_parser("sweep", help="emit deterministic CSV reports")
    common(s)
    s.add_argument("name", choices=["fig5", "fig12", "oracle-vs-dual",
                                    "nystrom-k"])
    s.add_argument("--outliers", type=_ints)
    s.add_argument("--seeds", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--sets", type=int)
    s.add_argument("--r", type=int)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    try:
        args.func(args)
    except (ValueError, InfeasibleProblem, FloatingPointError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
