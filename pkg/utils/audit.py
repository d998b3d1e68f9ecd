"""
Run audit trail.

A ``RunAudit`` collects timestamped phase events while a command runs and
turns them into the ``RunManifest`` written beside the command's outputs.
"""

from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from models import RunConfig, RunManifest


@dataclass
class AuditEvent:
    """Single audit event."""
    timestamp: str
    phase: str
    action: str  # 'start', 'complete', 'error'
    duration: Optional[float] = None
    data: Dict[str, Any] = field(default_factory=dict)


class RunAudit:
    """Track one command invocation for its manifest."""

    def __init__(self, command: str, run_id: str, config_path: Optional[Path] = None,
                 seed: Optional[int] = None):
        self.command = command
        self.run_id = run_id
        self.config_path = str(config_path) if config_path is not None else None
        self.seed = seed
        self.started_at = datetime.now().isoformat()
        self.inputs: Dict[str, str] = {}
        self.outputs: Dict[str, str] = {}
        self.events: List[AuditEvent] = []

    def log_event(self, phase: str, action: str, data: Optional[Dict[str, Any]] = None,
                  duration: Optional[float] = None):
        self.events.append(AuditEvent(
            timestamp=datetime.now().isoformat(),
            phase=phase,
            action=action,
            duration=duration,
            data=data or {},
        ))

    def log_phase_start(self, phase: str):
        self.log_event(phase, 'start')

    def log_phase_complete(self, phase: str, duration: Optional[float] = None, **data: Any):
        self.log_event(phase, 'complete', data, duration)

    def add_input(self, name: str, path: Path):
        self.inputs[name] = str(path)

    def add_output(self, name: str, path: Path):
        self.outputs[name] = str(path)

    def manifest(self, config: Optional[RunConfig] = None) -> RunManifest:
        return RunManifest(
            command=self.command,
            run_id=self.run_id,
            config_path=self.config_path,
            seed=self.seed,
            inputs=dict(self.inputs),
            outputs=dict(self.outputs),
            resolved_config=config.model_dump() if config is not None else {},
            started_at=self.started_at,
            completed_at=datetime.now().isoformat(),
            events=[asdict(event) for event in self.events],
        )
