"""
Motion Engine - DCT + all-MLP human motion forecasting with hand-written gradients.
"""
from .tensor_core import (
    Matrix,
    AffineLayer,
    LayerNormParams,
    matmul,
    transpose,
    affine_forward,
    affine_backward,
    layernorm_forward,
    layernorm_backward,
    fd_check,
    get_dtype,
    set_precision,
    precision,
)
from .dct import DctBasis, build_dct_basis, apply_dct, apply_idct
from .model import (
    SiMlpeParams,
    Prediction,
    init_params,
    forward,
    backward,
    param_count,
    count_parameters,
    last_frame_baseline,
    one_fc_config,
)
from .losses import loss_re, loss_v, total_loss, joint_distances
from .optim import AdamState, adam_step, lr_at
from .trainer import TrainResult, train
from .motion_io import MotionSequence, read_motion, write_motion, import_csv, load_motion
from .preprocess import TrainSample, WindowBank, center_on_root, subsample, make_windows
from .synthetic import generate_synthetic, generate_synthetic_corpus, train_test_corpora
from .evaluation import (
    EvalReport,
    rollout,
    mpjpe,
    evaluate,
    evaluate_last_frame,
    evaluate_predictor,
    evaluation_windows,
    horizon_frame_indices,
    format_report_table,
)
from .gradcheck import GradCheck, GradCheckRegistry, default_registry
from .report_fields import TraceField, ReportField

__all__ = [
    "Matrix",
    "AffineLayer",
    "LayerNormParams",
    "matmul",
    "transpose",
    "affine_forward",
    "affine_backward",
    "layernorm_forward",
    "layernorm_backward",
    "fd_check",
    "get_dtype",
    "set_precision",
    "precision",
    "DctBasis",
    "build_dct_basis",
    "apply_dct",
    "apply_idct",
    "SiMlpeParams",
    "Prediction",
    "init_params",
    "forward",
    "backward",
    "param_count",
    "count_parameters",
    "last_frame_baseline",
    "one_fc_config",
    "loss_re",
    "loss_v",
    "total_loss",
    "joint_distances",
    "AdamState",
    "adam_step",
    "lr_at",
    "TrainResult",
    "train",
    "MotionSequence",
    "read_motion",
    "write_motion",
    "import_csv",
    "load_motion",
    "TrainSample",
    "WindowBank",
    "center_on_root",
    "subsample",
    "make_windows",
    "generate_synthetic",
    "generate_synthetic_corpus",
    "train_test_corpora",
    "EvalReport",
    "rollout",
    "mpjpe",
    "evaluate",
    "evaluate_last_frame",
    "evaluate_predictor",
    "evaluation_windows",
    "horizon_frame_indices",
    "format_report_table",
    "GradCheck",
    "GradCheckRegistry",
    "default_registry",
    "TraceField",
    "ReportField",
]
