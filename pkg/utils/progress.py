"""
Progress display utilities for the CLI using rich library.

Provides an epoch progress bar for training and a spinner for the other
long-running commands.
"""

from typing import List, Optional

from rich.console import Console
from rich.progress import BarColumn, Progress, ProgressColumn, SpinnerColumn, TextColumn, TimeElapsedColumn

from training.trainer import EpochRecord


class _LiveProgress:
    """Starts a rich Progress with one task on enter and stops it on exit."""

    def __init__(self, console: Console, description: str, total: Optional[int]):
        self.console = console
        self.description = description
        self.total = total
        self.progress: Optional[Progress] = None
        self.task = None

    def columns(self) -> List[ProgressColumn]:
        return [SpinnerColumn(), TextColumn("[progress.description]{task.description}"), TimeElapsedColumn()]

    def task_fields(self) -> dict:
        return {}

    def __enter__(self):
        self.progress = Progress(*self.columns(), console=self.console)
        self.progress.start()
        self.task = self.progress.add_task(self.description, total=self.total, **self.task_fields())
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.progress is not None:
            self.progress.stop()
        return False


class TrainingProgress(_LiveProgress):
    """
    Epoch progress bar showing the latest losses.

    The instance is itself the ``on_epoch`` callback for ``train``.
    """

    def __init__(self, console: Console, epochs: int, description: str = "Training"):
        super().__init__(console, description, epochs)
        self.records: List[EpochRecord] = []

    def columns(self) -> List[ProgressColumn]:
        return [
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total}"),
            TextColumn("[cyan]{task.fields[loss]}"),
            TimeElapsedColumn(),
        ]

    def task_fields(self) -> dict:
        return {"loss": ""}

    def __call__(self, record: EpochRecord) -> None:
        self.records.append(record)
        loss = f"loss {record.total:.4f}"
        if record.val_total is not None:
            loss += f"  val {record.val_total:.4f}"
        if self.progress is not None:
            self.progress.update(self.task, completed=record.epoch, loss=loss)

    @property
    def last_total(self) -> Optional[float]:
        return self.records[-1].total if self.records else None


class SimpleSpinner(_LiveProgress):
    """Indeterminate spinner for a single operation."""

    def __init__(self, console: Console, text: str):
        super().__init__(console, text, None)
