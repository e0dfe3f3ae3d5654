"""Point-set registration built on the adversarial matching engine."""

from .coherence import (CoherenceConfig, CoherenceRegularizer,
                        coherence_energy, coherence_gradient,
                        dense_coherence_gradient, gaussian_kernel,
                        nystrom_decompose)
from .finetune import FineTuneConfig, FineTuneResult, fine_tune
from .pipeline import desk_config, make_transform, register
from .synth import (Case, RigidDeform, SmoothDeform, mse, normalize,
                    plane_crop, synthesize_case, voxel_downsample)
from .transforms import (NonRigidTransform, RigidTransform,
                         TranslationTransform, axis_angle_matrix,
                         matrix_to_quaternion, quaternion_to_matrix,
                         rotation_error_deg)
