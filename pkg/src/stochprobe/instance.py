"""Probing instances: weighted elements with activity probabilities plus an
inner (commit) and outer (probe) independence system."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constraints import ConstraintSystem, ConstraintError


@dataclass(frozen=True)
class Element:
    weight: float
    p: float
    deadline: Optional[int] = None

    def __post_init__(self):
        if not (self.weight >= 0 and np.isfinite(self.weight)):
            raise ConstraintError(f"weight must be finite and non-negative, got {self.weight}")
        if not (0.0 <= self.p <= 1.0):
            raise ConstraintError(f"probability must lie in [0,1], got {self.p}")
        if self.deadline is not None:
            if not isinstance(self.deadline, int) or self.deadline < 1:
                raise ConstraintError(f"deadline must be an integer >= 1, got {self.deadline}")


@dataclass(frozen=True)
class ProbingInstance:
    elements: tuple[Element, ...]
    inner: ConstraintSystem
    outer: ConstraintSystem

    def __post_init__(self):
        n = len(self.elements)
        if self.inner.universe_size != n or self.outer.universe_size != n:
            raise ConstraintError(
                "inner/outer universe sizes must match the element count "
                f"({self.inner.universe_size}, {self.outer.universe_size} vs {n})"
            )

    @property
    def n(self) -> int:
        return len(self.elements)

    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.elements])

    def probabilities(self) -> np.ndarray:
        return np.array([e.p for e in self.elements])

    def deadlines(self) -> tuple[Optional[int], ...]:
        return tuple(e.deadline for e in self.elements)

    def has_deadlines(self) -> bool:
        return any(e.deadline is not None for e in self.elements)


def make_instance(
    weights, probabilities, inner: ConstraintSystem, outer: ConstraintSystem, deadlines=None
) -> ProbingInstance:
    """Convenience constructor from parallel sequences."""
    if deadlines is None:
        deadlines = [None] * len(weights)
    if not (len(weights) == len(probabilities) == len(deadlines)):
        raise ConstraintError("weights, probabilities, deadlines must have equal length")
    elements = tuple(
        Element(weight=float(w), p=float(p), deadline=d)
        for w, p, d in zip(weights, probabilities, deadlines)
    )
    return ProbingInstance(elements=elements, inner=inner, outer=outer)
