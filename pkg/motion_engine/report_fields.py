"""
Column names for every CSV artifact a run writes.

Plot scripts and tests read artifacts through these names, so renaming a
member here renames the column everywhere.
"""
from enum import Enum
from typing import Tuple


class TraceField(str, Enum):
    """Columns of the training loss trace."""

    STEP = "step"
    """Optimizer step the loss was measured at (before that step's update)"""

    LR = "lr"
    """Learning rate applied at that step"""

    LOSS_TOTAL = "loss_total"
    """Weighted sum w_re * loss_re + w_v * loss_v"""

    LOSS_RE = "loss_re"
    """Mean per-joint position error over the batch (mm)"""

    LOSS_V = "loss_v"
    """Mean per-joint velocity error over the batch (mm/frame)"""


class ReportField(str, Enum):
    """Columns of an evaluation report."""

    HORIZON_MS = "horizon_ms"

    FRAME_INDEX = "frame_index"
    """0-based index of the scored frame within the predicted sequence"""

    MPJPE_MM = "mpjpe_mm"


TRACE_COLUMNS: Tuple[str, ...] = tuple(f.value for f in TraceField)
REPORT_COLUMNS: Tuple[str, ...] = tuple(f.value for f in ReportField)
