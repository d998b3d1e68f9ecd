"""
Min-max scaling fitted on the training split.

``unit_interval`` maps the observed range to [0, 1] and clamps values outside
it (model inputs). ``symmetric_unit`` maps it to [-1, 1] and lets values
outside pass through (labels, so de-scaling stays exact). A feature whose
minimum equals its maximum scales to 0.
"""

from dataclasses import dataclass
from typing import Any, Dict, Literal

import numpy as np

from errors import EmptyInputError, ScalerError

ScalerKind = Literal["unit_interval", "symmetric_unit"]


@dataclass
class Scaler:
    kind: ScalerKind
    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def width(self) -> int:
        return self.minimum.size

    def _bounds(self, values: np.ndarray):
        # A single-feature scaler applies to arrays of any shape.
        if self.width == 1:
            return self.minimum[0], self.maximum[0] - self.minimum[0]
        if values.ndim == 0 or values.shape[-1] != self.width:
            raise ScalerError(
                f"Scaler fitted on {self.width} features, got values of shape {values.shape}"
            )
        return self.minimum, self.maximum - self.minimum

    def apply(self, values: Any) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        low, span = self._bounds(values)
        degenerate = span == 0
        safe_span = np.where(degenerate, 1.0, span)
        unit = np.where(degenerate, 0.0, (values - low) / safe_span)
        if self.kind == "unit_interval":
            return np.clip(unit, 0.0, 1.0)
        return np.where(degenerate, 0.0, 2.0 * unit - 1.0)

    def invert(self, values: Any) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        low, span = self._bounds(values)
        unit = values if self.kind == "unit_interval" else (values + 1.0) / 2.0
        return low + unit * span

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "minimum": self.minimum.tolist(),
            "maximum": self.maximum.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "Scaler":
        if payload.get("kind") not in ("unit_interval", "symmetric_unit"):
            raise ScalerError(f"Unknown scaler kind {payload.get('kind')!r}")
        return cls(
            kind=payload["kind"],
            minimum=np.asarray(payload["minimum"], dtype=np.float64),
            maximum=np.asarray(payload["maximum"], dtype=np.float64),
        )


def fit_scaler(values: Any, kind: ScalerKind) -> Scaler:
    """Fit per-feature min/max. 1-D input is one feature; 2-D input is (samples, features)."""
    array = np.asarray(values, dtype=np.float64)
    if array.size == 0:
        raise EmptyInputError(f"fit_scaler({kind})")
    if kind not in ("unit_interval", "symmetric_unit"):
        raise ScalerError(f"Unknown scaler kind '{kind}'")
    if array.ndim <= 1:
        array = array.reshape(-1, 1)
    return Scaler(kind=kind, minimum=array.min(axis=0), maximum=array.max(axis=0))
