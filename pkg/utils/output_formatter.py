"""
Output formatting utilities for the CLI.

Provides user-friendly display of run results and errors.
"""

import math
from typing import Any, Dict, Optional

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from errors import (
    CheckpointError,
    ConfigError,
    DatasetFormatError,
    GradientCheckError,
    MalformedRowError,
    NonFiniteLossError,
    SampleTooSmallError,
    ScalerError,
    UnknownAblationError,
)
from models import TASK_NAMES


def _number(value: Optional[float], digits: int = 4) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return f"{value:.{digits}f}"


class OutputFormatter:
    """Format and display command outputs in a user-friendly way."""

    def __init__(self, console: Console):
        self.console = console

    def display_header(self, command: str, run_id: str) -> None:
        self.console.print(Panel(
            f"[bold cyan]Command:[/bold cyan] {command}\n"
            f"[bold cyan]Run ID:[/bold cyan] {run_id[:8]}...",
            title="DAPAMT Lab",
            border_style="cyan",
        ))
        self.console.print()

    def display_success(self, message: str, output_files: Dict[str, str]) -> None:
        """
        Display successful completion and where the outputs went.

        Args:
            message: One-line summary of what the command did
            output_files: Label to path of every written file
        """
        self.console.print()
        self.console.print(Panel(f"[bold green]✓ {message}[/bold green]", border_style="green"))
        if output_files:
            self._display_output_files(output_files)
        self.console.print()

    def display_evaluation(self, mse: Dict[str, float], students: int, split: Optional[str] = None) -> None:
        title = f"Evaluation on {students} students" + (f" ({split})" if split else "")
        self.console.print(f"[bold]📊 {title}:[/bold]")
        table = Table(show_header=False, box=None, padding=(0, 2))
        table.add_column("Task", style="cyan")
        table.add_column("MSE", style="green", justify="right")
        for task, value in mse.items():
            table.add_row(f"{task}:", _number(value))
        self.console.print(table)
        self.console.print()

    def display_experiment(self, report: Dict[str, Any]) -> None:
        """Mean MSE per model with relative improvement and p-value of the full model."""
        table = Table(show_header=True, header_style="bold cyan", border_style="cyan")
        table.add_column("Model", style="cyan")
        for task in TASK_NAMES:
            table.add_column(f"MSE {task}", justify="right")
        for task in TASK_NAMES:
            table.add_column(f"Δ% {task}", justify="right")
        table.add_column("p (wag)", justify="right")
        table.add_column("Wins", justify="right")

        seeds = len(report.get("seeds", []))
        for kind, summary in report["models"].items():
            comparison = report["comparisons"].get(kind, {})
            improvement = comparison.get("relative_improvement", {})
            row = [kind]
            row += [_number(summary["mean_mse"][task]) for task in TASK_NAMES]
            row += [_number(100.0 * improvement[task], 1) if task in improvement else "-" for task in TASK_NAMES]
            row.append(_number(comparison.get("p_values", {}).get("wag"), 3))
            row.append(f"{comparison.get('wins', 0)}/{seeds}" if comparison else "-")
            table.add_row(*row)
        self.console.print(table)
        self.console.print()

    def display_sweep(self, report: Dict[str, Any]) -> None:
        table = Table(show_header=True, header_style="bold cyan", border_style="cyan")
        table.add_column("Units", justify="right")
        for task in TASK_NAMES:
            table.add_column(f"MSE {task}", justify="right")
        for count, mse in report["units"].items():
            table.add_row(count, *[_number(mse[task]) for task in TASK_NAMES])
        self.console.print(table)
        self.console.print()

    def display_gradcheck(self, overall: float, per_param: Dict[str, float], tolerance: float) -> None:
        passed = overall < tolerance
        status = "[green]✓ Pass[/green]" if passed else "[red]✗ Fail[/red]"
        self.console.print(f"[bold]Gradient check:[/bold] {status}  max relative error {overall:.3e} "
                           f"(tolerance {tolerance:.0e})")
        table = Table(show_header=False, box=None, padding=(0, 2))
        table.add_column("Parameter", style="cyan")
        table.add_column("Error", style="yellow", justify="right")
        for name, error in sorted(per_param.items(), key=lambda item: -item[1])[:10]:
            table.add_row(name, f"{error:.3e}")
        self.console.print(table)
        self.console.print()

    def display_error(self, error: Exception) -> None:
        self.console.print()
        suggestion = self._get_error_suggestion(error)
        panel_content = "[bold red]❌ Command failed[/bold red]\n\n"
        panel_content += f"[yellow]Error:[/yellow] {error}\n"
        if suggestion:
            panel_content += f"\n[cyan]Suggestion:[/cyan] {suggestion}"
        self.console.print(Panel(panel_content, title="Error", border_style="red"))
        self.console.print()

    def _display_output_files(self, output_files: Dict[str, str]) -> None:
        self.console.print("[bold]📁 Output Files:[/bold]")
        table = Table(show_header=False, box=None, padding=(0, 2))
        table.add_column("Type", style="cyan")
        table.add_column("Path", style="green")
        for label, path in output_files.items():
            table.add_row(f"{label}:", str(path))
        self.console.print(table)

    def _get_error_suggestion(self, error: Exception) -> Optional[str]:
        if isinstance(error, ConfigError):
            return "Check the --config JSON against the fields in models.py"
        if isinstance(error, MalformedRowError):
            return f"Fix line {error.line_number} of {error.path} and rerun ingest"
        if isinstance(error, DatasetFormatError):
            return "Regenerate the dataset with gen-synth or ingest"
        if isinstance(error, ScalerError):
            return "Evaluate with the dataset file the checkpoint was trained on"
        if isinstance(error, CheckpointError):
            return "Use a checkpoint trained with the same model config and dataset widths"
        if isinstance(error, NonFiniteLossError):
            return "Lower the learning rate or check the dataset for extreme values"
        if isinstance(error, UnknownAblationError):
            return "Known variants: full, single_task, standard_lstm_gates, no_soft_attention, history_only_lstm, ha"
        if isinstance(error, SampleTooSmallError):
            return "Use more test students or more seeds"
        if isinstance(error, GradientCheckError):
            return "Try a smaller perturbation with --epsilon"
        return "Run with --debug flag for more details"
