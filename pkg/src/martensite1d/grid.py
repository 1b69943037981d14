"""Uniform node-centred grid on a bounded interval."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Grid1D:
    """
    Uniform grid on ``[a, d]`` with ``n`` nodes, both endpoints included.

    Examples
    --------
    >>> g = Grid1D(0.0, 1.0, 5)
    >>> g.dx
    0.25
    """

    a: float
    d: float
    n: int
    x: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.a < self.d:
            raise ValueError(f"need a < d, got a={self.a}, d={self.d}")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"need at least 3 nodes, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        x = np.linspace(self.a, self.d, self.n)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def dx(self) -> float:
        return (self.d - self.a) / (self.n - 1)

    @property
    def length(self) -> float:
        return self.d - self.a

    def refined(self) -> "Grid1D":
        """Grid with halved spacing whose even nodes coincide with this one."""
        return Grid1D(self.a, self.d, 2 * self.n - 1)

    def zeros(self, *trailing) -> np.ndarray:
        return np.zeros((self.n,) + trailing)
