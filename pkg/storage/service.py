"""
Storage service for experiment run artifacts.
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import pandas as pd

logger = logging.getLogger(__name__)


class RunStorage:
    """
    Manage one run's output directory.

    Structure:
    <out_dir>/
        checkpoint.smlp
        loss_trace.csv
        reports/
            <tag>.csv
        predictions/
            <name>.motn
        gradcheck.csv
        run_meta.json

    Artifacts never contain timestamps, so rerunning a command with the same
    config and seed reproduces them byte for byte.
    """

    CHECKPOINT = "checkpoint.smlp"
    ONE_FC_CHECKPOINT = "one_fc.smlp"
    LOSS_TRACE = "loss_trace.csv"
    GRADCHECK = "gradcheck.csv"
    RUN_META = "run_meta.json"

    def __init__(self, base_dir: Path):
        self.base_dir = Path(base_dir)
        self.base_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"[STORAGE] Using run directory: {self.base_dir}")

    def path(self, file_path: str) -> Path:
        local_path = self.base_dir / file_path
        local_path.parent.mkdir(parents=True, exist_ok=True)
        return local_path

    @property
    def checkpoint_path(self) -> Path:
        return self.path(self.CHECKPOINT)

    @property
    def one_fc_checkpoint_path(self) -> Path:
        return self.path(self.ONE_FC_CHECKPOINT)

    def save_report(self, df: pd.DataFrame, tag: str) -> Path:
        return self.save_dataframe(df, f"reports/{report_file_stem(tag)}.csv")

    def save_dataframe(self, df: pd.DataFrame, file_path: str) -> Path:
        local_path = self.path(file_path)
        df.to_csv(local_path, index=False, lineterminator="\n")
        logger.info(f"[STORAGE] Wrote {len(df)} rows to {local_path}")
        return local_path

    def save_json(self, data: Dict[str, Any], file_path: str) -> Path:
        local_path = self.path(file_path)
        with open(local_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(data, f, indent=2, sort_keys=True, default=str)
            f.write("\n")
        return local_path

    def load_json(self, file_path: str) -> Optional[Dict[str, Any]]:
        local_path = self.base_dir / file_path
        if not local_path.exists():
            return None
        with open(local_path, "r", encoding="utf-8") as f:
            return json.load(f)

    def save_run_meta(
        self,
        command: str,
        config: Dict[str, Any],
        input_files: Iterable[Path] = (),
        extra: Optional[Dict[str, Any]] = None,
    ) -> Path:
        """Record what produced this run: command, full config and input file hashes."""
        meta = {
            "command": command,
            "config": config,
            "input_files": {str(p): calculate_file_hash(Path(p)) for p in input_files},
        }
        if extra:
            meta.update(extra)
        return self.save_json(meta, self.RUN_META)


def report_file_stem(tag: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in tag.strip().lower()).strip("_") or "report"


def calculate_file_hash(file_path: Path) -> str:
    """Calculate SHA256 hash of file."""
    sha256_hash = hashlib.sha256()
    with open(file_path, "rb") as f:
        for byte_block in iter(lambda: f.read(4096), b""):
            sha256_hash.update(byte_block)
    return sha256_hash.hexdigest()
