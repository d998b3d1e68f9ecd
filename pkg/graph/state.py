"""
Model state shared by the layers: the parameter store and attention traces.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

import numpy as np

from autograd import GraphNode, leaf
from errors import CheckpointError


class ParameterStore:
    """
    Named float64 arrays in a fixed enumeration order.

    ``frozen`` names are bound into the graph like any other parameter but the
    optimizer leaves them untouched.
    """

    def __init__(self, arrays: Optional[Dict[str, np.ndarray]] = None,
                 frozen: Iterable[str] = ()):
        self._arrays: Dict[str, np.ndarray] = {}
        self.frozen: Set[str] = set()
        for name, array in (arrays or {}).items():
            self.add(name, array, frozen=name in set(frozen))

    def add(self, name: str, array: np.ndarray, frozen: bool = False) -> None:
        if name in self._arrays:
            raise CheckpointError(f"Duplicate parameter name '{name}'")
        array = np.array(array, dtype=np.float64)
        if not np.all(np.isfinite(array)):
            raise CheckpointError(f"Parameter '{name}' has non-finite entries")
        self._arrays[name] = array
        if frozen:
            self.frozen.add(name)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __setitem__(self, name: str, array: np.ndarray) -> None:
        if name not in self._arrays:
            raise KeyError(name)
        if np.shape(array) != self._arrays[name].shape:
            raise CheckpointError(
                f"Parameter '{name}' expects shape {self._arrays[name].shape}, got {np.shape(array)}"
            )
        self._arrays[name] = np.array(array, dtype=np.float64)

    def __contains__(self, name: object) -> bool:
        return name in self._arrays

    def __len__(self) -> int:
        return len(self._arrays)

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def names(self) -> List[str]:
        return list(self._arrays)

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        """The live arrays; callers may perturb them in place."""
        return iter(self._arrays.items())

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: array.shape for name, array in self._arrays.items()}

    def trainable(self) -> List[str]:
        return [name for name in self._arrays if name not in self.frozen]

    @property
    def size(self) -> int:
        return int(sum(array.size for array in self._arrays.values()))

    def bind(self) -> Dict[str, GraphNode]:
        """Fresh graph leaves for one forward pass."""
        return {name: leaf(array, name=name) for name, array in self._arrays.items()}

    def copy(self) -> "ParameterStore":
        return ParameterStore({name: array.copy() for name, array in self._arrays.items()},
                              frozen=self.frozen)

    def equals(self, other: "ParameterStore") -> bool:
        """Bitwise equality of names, order, shapes and values."""
        if self.names() != other.names():
            return False
        return all(np.array_equal(self[name], other[name]) for name in self.names())


@dataclass
class AttentionTrace:
    """
    Soft-attention weights per day and co-attention weights per unit for a batch.

    ``betas[l][(i, j)]`` holds beta_ij of unit l+1 for every student (tasks
    0-indexed, i < j).
    """
    student_ids: List[str]
    alpha: np.ndarray                                            # (students, days)
    betas: List[Dict[Tuple[int, int], np.ndarray]] = field(default_factory=list)

    def columns(self) -> Dict[str, np.ndarray]:
        """Flat columns alpha_1..alpha_X then beta{i}{j}_u{l} in unit order."""
        columns = {f"alpha_{x + 1}": self.alpha[:, x] for x in range(self.alpha.shape[1])}
        for unit, pairs in enumerate(self.betas, start=1):
            for (i, j), values in sorted(pairs.items()):
                columns[f"beta{i + 1}{j + 1}_u{unit}"] = values
        return columns

    @classmethod
    def concatenate(cls, traces: List["AttentionTrace"]) -> "AttentionTrace":
        if not traces:
            return cls(student_ids=[], alpha=np.zeros((0, 0)))
        betas = []
        for unit in range(len(traces[0].betas)):
            betas.append({
                pair: np.concatenate([t.betas[unit][pair] for t in traces])
                for pair in traces[0].betas[unit]
            })
        return cls(
            student_ids=[sid for t in traces for sid in t.student_ids],
            alpha=np.concatenate([t.alpha for t in traces]),
            betas=betas,
        )
