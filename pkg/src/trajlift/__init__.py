"""trajlift: sequence-level 2D-to-3D pose lifting in trajectory space.

A motion of F frames is a linear combination of a few fixed temporal basis
vectors (cosine or data-driven); lifting a 2D joint sequence to 3D reduces
to regressing the combination coefficients for all joints at once.
"""
from .bases import (
    TrajectoryBasis,
    coefficient_magnitude_profile,
    dct_basis,
    dct_forward,
    load_basis,
    project_motion,
    reconstruct_motion,
    save_basis,
    svd_basis,
    truncation_error_profile,
)
from .errors import DimensionError, FormatError, NumericError, ParameterError
from .inference import SlidingConfig, sliding_infer, window_starts
from .io import (
    CameraModel,
    SynthConfig,
    load_pose_sequence,
    load_skeleton,
    make_lifting_dataset,
    normalize_2d,
    project_camera,
    save_pose_sequence,
    save_skeleton,
    synth_motion,
    synth_motion_corpus,
)
from .kernels import active_backend
from .metrics import EvalReport, auc, evaluate, mpjpe_p1, mpjpe_p2, pck, procrustes_align
from .motion import (
    SkeletonConfig,
    default_skeleton,
    flip_motion_matrix,
    flip_pose_sequence,
    motion_matrix_from_poses,
    poses_from_motion_matrix,
    root_align,
    root_align_sequence,
)
from .network import (
    NetworkConfig,
    NetworkParams,
    avg_pool_temporal,
    backward,
    forward,
    init_network,
    l1_loss,
)
from .training import (
    AdamState,
    TrainConfig,
    adam_step,
    load_checkpoint,
    lr_at_epoch,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
