"""Scalar fields on the cracked domain whose value may depend on the element
from which a point is approached."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import MissingGradient

ValueFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SideAwareFunction:
    """``value(points, elements)`` evaluates at ``points[k]`` seen from ``elements[k]``.

    ``gradient`` has the same signature and returns (m, d) arrays; it is optional
    and only required for H1 error computations.
    """

    value: ValueFn
    gradient: Optional[ValueFn] = None
    smoothness: str = "broken-H1"

    def __call__(self, points, elements) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        elements = np.broadcast_to(np.asarray(elements), (points.shape[0],))
        out = np.asarray(self.value(points, elements), dtype=float)
        return np.broadcast_to(out, (points.shape[0],)).copy()

    def grad(self, points, elements) -> np.ndarray:
        if self.gradient is None:
            raise MissingGradient("this function carries no gradient")
        points = np.asarray(points, dtype=float)
        elements = np.broadcast_to(np.asarray(elements), (points.shape[0],))
        out = np.asarray(self.gradient(points, elements), dtype=float)
        return np.broadcast_to(out, points.shape).copy()

    @classmethod
    def from_global(cls, f, grad=None, smoothness: str = "smooth") -> "SideAwareFunction":
        """Wrap a field of the coordinates only; the element context is ignored."""
        return cls(
            value=lambda x, e: f(x),
            gradient=None if grad is None else (lambda x, e: grad(x)),
            smoothness=smoothness,
        )

    @classmethod
    def from_regions(cls, element_region, funcs, grads=None) -> "SideAwareFunction":
        """Piecewise field: ``funcs[r]`` on elements with ``element_region[k] == r``."""
        element_region = np.asarray(element_region)

        def pick(table):
            def ev(x, e):
                reg = element_region[e]
                out = np.zeros(x.shape[0]) if table is funcs else np.zeros_like(x)
                for r, fn in enumerate(table):
                    mask = reg == r
                    if mask.any():
                        out[mask] = fn(x[mask])
                return out
            return ev

        return cls(value=pick(funcs), gradient=None if grads is None else pick(grads),
                   smoothness="piecewise")

    def __add__(self, other: "SideAwareFunction") -> "SideAwareFunction":
        grad = None
        if self.gradient is not None and other.gradient is not None:
            grad = lambda x, e: self.grad(x, e) + other.grad(x, e)  # noqa: E731
        return SideAwareFunction(lambda x, e: self(x, e) + other(x, e), grad, "broken-H1")

    def scaled(self, c: float) -> "SideAwareFunction":
        grad = None if self.gradient is None else (lambda x, e: c * self.grad(x, e))
        return SideAwareFunction(lambda x, e: c * self(x, e), grad, self.smoothness)


def indicator(element_region, region: int) -> SideAwareFunction:
    element_region = np.asarray(element_region)
    return SideAwareFunction(
        value=lambda x, e: (element_region[e] == region).astype(float),
        gradient=lambda x, e: np.zeros_like(x),
        smoothness="piecewise-constant",
    )


ZERO = SideAwareFunction(lambda x, e: np.zeros(x.shape[0]), lambda x, e: np.zeros_like(x), "smooth")
