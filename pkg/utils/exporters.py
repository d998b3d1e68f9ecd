"""
Result exporters for CSV and JSON outputs.

Tables are built as pandas DataFrames and written atomically, so every
exported file is either complete or absent.
"""

import json
from pathlib import Path
from typing import Any, Dict, Sequence

import numpy as np
import pandas as pd

from graph.state import AttentionTrace
from models import TASK_NAMES
from training.trainer import EpochRecord, EvaluationReport, Predictions
from utils.output_manager import atomic_write_text


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    return atomic_write_text(Path(path), frame.to_csv(index=False, lineterminator="\n"))


def _write_json(payload: Any, path: Path) -> Path:
    return atomic_write_text(Path(path), json.dumps(payload, indent=2, allow_nan=True) + "\n")


class ResultExporter:
    """Export training, prediction and experiment results."""

    def loss_frame(self, history: Sequence[EpochRecord]) -> pd.DataFrame:
        rows = []
        for record in history:
            row: Dict[str, Any] = {"epoch": record.epoch}
            row.update({f"L{n + 1}": loss for n, loss in enumerate(record.losses)})
            row["total"] = record.total
            row["val_total"] = record.val_total if record.val_total is not None else np.nan
            rows.append(row)
        return pd.DataFrame(rows)

    def export_loss_log(self, history: Sequence[EpochRecord], output_path: Path) -> Path:
        """Columns epoch, L1..LN, total, val_total (empty without a validation split)."""
        return _write_frame(self.loss_frame(history), output_path)

    def predictions_frame(self, predictions: Predictions) -> pd.DataFrame:
        frame = pd.DataFrame({"student_id": predictions.student_ids})
        names = TASK_NAMES if predictions.values.shape[1] == len(TASK_NAMES) else [
            f"task{n + 1}" for n in range(predictions.values.shape[1])
        ]
        for n, task in enumerate(names):
            frame[f"y_{task}"] = predictions.values[:, n]
        return frame

    def export_predictions(self, predictions: Predictions, output_path: Path) -> Path:
        return _write_frame(self.predictions_frame(predictions), output_path)

    def attention_frame(self, trace: AttentionTrace) -> pd.DataFrame:
        frame = pd.DataFrame({"student_id": trace.student_ids})
        columns = pd.DataFrame(trace.columns())
        return pd.concat([frame, columns], axis=1)

    def export_attention(self, trace: AttentionTrace, output_path: Path) -> Path:
        """student_id, alpha_1..alpha_X and one beta column per task pair and unit."""
        return _write_frame(self.attention_frame(trace), output_path)

    def export_evaluation(self, report: EvaluationReport, output_path: Path) -> Path:
        return _write_json(report.to_dict(), output_path)

    def export_report(self, report: Any, output_path: Path) -> Dict[str, Path]:
        """JSON document at ``output_path`` plus a CSV table beside it."""
        output_path = Path(output_path)
        csv_path = output_path.with_suffix(".csv")
        return {
            "report": _write_json(report.to_dict(), output_path),
            "table": _write_frame(report.to_frame(), csv_path),
        }
