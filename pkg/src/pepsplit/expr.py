"""Symbolic vectors and the scalar forms they induce.

A :class:`LinearExpr` is a linear combination of atoms (abstract vectors
indexed by integers). Inner products of two expressions are linear in the
Gram matrix of the atoms, so every scalar the PEP needs is a
:class:`ScalarForm`: an affine function of Gram entries and of scalar value
variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np


def _clean(d: Mapping) -> Dict:
    return {k: v for k, v in d.items() if v != 0.0}


@dataclass(frozen=True)
class LinearExpr:
    coeffs: Mapping[int, float] = field(default_factory=dict)

    @classmethod
    def atom(cls, idx: int) -> "LinearExpr":
        return cls({idx: 1.0})

    def __add__(self, other: "LinearExpr") -> "LinearExpr":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return LinearExpr(_clean(out))

    def __neg__(self) -> "LinearExpr":
        return LinearExpr({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "LinearExpr") -> "LinearExpr":
        return self + (-other)

    def __mul__(self, c: float) -> "LinearExpr":
        return LinearExpr(_clean({k: float(c) * v for k, v in self.coeffs.items()}))

    __rmul__ = __mul__

    def atoms(self) -> Tuple[int, ...]:
        return tuple(sorted(self.coeffs))

    def vector(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for k, v in self.coeffs.items():
            out[k] = v
        return out

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Concrete vector given atom coordinates ``X`` (one row per atom)."""
        return self.vector(X.shape[0]) @ X


@dataclass(frozen=True)
class ScalarForm:
    """``sum quad[i,j] G[i,j] + sum lin[k] F[k] + const`` with i <= j.

    Off-diagonal coefficients multiply ``G[i,j]`` once; by symmetry of G the
    same form reads ``<A, G>`` with ``A[i,j] = A[j,i] = quad[i,j] / 2``.
    """

    quad: Mapping[Tuple[int, int], float] = field(default_factory=dict)
    lin: Mapping[int, float] = field(default_factory=dict)
    const: float = 0.0

    @classmethod
    def value(cls, vid: int) -> "ScalarForm":
        return cls(lin={vid: 1.0})

    @classmethod
    def constant(cls, c: float) -> "ScalarForm":
        return cls(const=float(c))

    def __add__(self, other: "ScalarForm") -> "ScalarForm":
        if not isinstance(other, ScalarForm):
            other = ScalarForm.constant(other)
        quad = dict(self.quad)
        for k, v in other.quad.items():
            quad[k] = quad.get(k, 0.0) + v
        lin = dict(self.lin)
        for k, v in other.lin.items():
            lin[k] = lin.get(k, 0.0) + v
        return ScalarForm(_clean(quad), _clean(lin), self.const + other.const)

    __radd__ = __add__

    def __mul__(self, c: float) -> "ScalarForm":
        c = float(c)
        return ScalarForm(_clean({k: c * v for k, v in self.quad.items()}),
                          _clean({k: c * v for k, v in self.lin.items()}),
                          c * self.const)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarForm":
        return self * -1.0

    def __sub__(self, other: "ScalarForm") -> "ScalarForm":
        if not isinstance(other, ScalarForm):
            other = ScalarForm.constant(other)
        return self + (-other)

    def gram_matrix(self, n: int) -> np.ndarray:
        """Symmetric A with ``<A, G>`` equal to the quadratic part."""
        A = np.zeros((n, n))
        for (i, j), v in self.quad.items():
            if i == j:
                A[i, i] += v
            else:
                A[i, j] += v / 2
                A[j, i] += v / 2
        return A

    def lin_vector(self, m: int) -> np.ndarray:
        out = np.zeros(m)
        for k, v in self.lin.items():
            out[k] = v
        return out

    def evaluate_gram(self, G: np.ndarray, F: np.ndarray) -> float:
        total = self.const
        for (i, j), v in self.quad.items():
            total += v * G[i, j]
        for k, v in self.lin.items():
            total += v * F[k]
        return float(total)

    def evaluate(self, X: np.ndarray, F: np.ndarray) -> float:
        """Value at atom coordinates ``X`` (rows) and value variables ``F``."""
        return self.evaluate_gram(X @ X.T, F)


def inner(a: LinearExpr, b: LinearExpr) -> ScalarForm:
    quad: Dict[Tuple[int, int], float] = {}
    for i, ci in a.coeffs.items():
        for j, cj in b.coeffs.items():
            key = (i, j) if i <= j else (j, i)
            quad[key] = quad.get(key, 0.0) + ci * cj
    return ScalarForm(_clean(quad))


def sqnorm(a: LinearExpr) -> ScalarForm:
    return inner(a, a)
