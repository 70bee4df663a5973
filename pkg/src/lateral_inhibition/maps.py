from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class StaticMap:
    """Scalar map with its analytic derivative; both accept numpy arrays."""

    value: ArrayFn
    derivative: ArrayFn
    name: str = ""

    def __call__(self, z):
        return self.value(z)

    def then(self, outer: "StaticMap") -> "StaticMap":
        """``outer(self(z))`` with the chain-rule derivative."""
        inner = self

        def value(z):
            return outer.value(inner.value(z))

        def derivative(z):
            return outer.derivative(inner.value(z)) * inner.derivative(z)

        return StaticMap(value, derivative, f"{outer.name}({inner.name})")


def central_difference(f: ArrayFn, z, rel_step: float = 1e-5) -> np.ndarray:
    """Fourth-order central difference, step proportional to |z|."""
    z = np.asarray(z, dtype=float)
    h = rel_step * np.abs(z)
    return (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12 * h)
