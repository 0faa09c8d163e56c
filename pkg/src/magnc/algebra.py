"""Exact arithmetic on finitely supported elements of the magnetic algebra.

An element A = sum a_{j,k} Y_{j->k} is stored through its operator block
M[k, j] = a_{j,k} acting on the Landau-level index (Y_{j->k} maps level j to
level k and is diagonal in the degeneracy index).  Products, adjoints, the
trace, the two spatial derivations and all norms are finite exact
computations on that block.
"""

from __future__ import annotations

import json
from math import sqrt

import numpy as np
import scipy.linalg

from .basis import MagneticLength, number_ladders

__all__ = [
    "MagneticElement",
    "UnitalElement",
    "upsilon",
    "landau_projection",
    "projection_sum",
    "zero_element",
    "compose",
    "adjoint",
    "trace_int",
    "spatial_derivative",
    "norms",
    "random_element",
    "hermitize",
    "conjugated_projection",
    "is_projection",
    "element_to_records",
    "element_from_records",
]


def _lb_of(lb) -> float:
    if isinstance(lb, MagneticLength):
        return lb.lb
    lb = float(lb)
    if lb <= 0:
        raise ValueError("magnetic length must be positive")
    return lb


class MagneticElement:
    """Finitely supported element of the magnetic algebra.

    Immutable by convention: no method mutates ``block``.
    """

    __slots__ = ("block", "lb")

    def __init__(self, block, lb=1.0):
        block = np.atleast_2d(np.asarray(block, dtype=complex))
        if block.ndim != 2 or block.shape[0] != block.shape[1]:
            raise ValueError("coefficient block must be square")
        if not np.all(np.isfinite(block)):
            raise ValueError("coefficients must be finite")
        self.block = block
        self.lb = _lb_of(lb)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_coeffs(cls, coeffs: dict, lb=1.0) -> "MagneticElement":
        """Build from a map (j, k) -> a_{j,k}."""
        if not coeffs:
            return cls(np.zeros((1, 1), dtype=complex), lb)
        size = 1 + max(max(j, k) for (j, k) in coeffs)
        block = np.zeros((size, size), dtype=complex)
        for (j, k), a in coeffs.items():
            if j < 0 or k < 0:
                raise ValueError("support indices must be nonnegative")
            block[k, j] += a
        return cls(block, lb)

    # -- views -------------------------------------------------------------

    @property
    def support_bound(self) -> int:
        """K(A): one plus the largest index carrying a nonzero coefficient."""
        nz = np.nonzero(self.block)
        if len(nz[0]) == 0:
            return 0
        return int(max(nz[0].max(), nz[1].max())) + 1

    def coeff(self, j: int, k: int) -> complex:
        """a_{j,k}, zero outside the stored block."""
        if j >= self.block.shape[1] or k >= self.block.shape[0]:
            return 0j
        return complex(self.block[k, j])

    def coeffs(self) -> dict:
        ks, js = np.nonzero(self.block)
        return {(int(j), int(k)): complex(self.block[k, j]) for k, j in zip(ks, js)}

    def padded(self, size: int) -> np.ndarray:
        """Dense block grown (or kept) to at least ``size`` rows/columns."""
        s = max(size, self.block.shape[0])
        out = np.zeros((s, s), dtype=complex)
        out[: self.block.shape[0], : self.block.shape[0]] = self.block
        return out

    def trimmed(self) -> "MagneticElement":
        k = max(self.support_bound, 1)
        return MagneticElement(self.block[:k, :k], self.lb)

    # -- algebra -----------------------------------------------------------

    def _check_same_lb(self, other: "MagneticElement"):
        if abs(self.lb - other.lb) > 1e-15 * max(self.lb, other.lb):
            raise ValueError("elements live at different magnetic lengths")

    def __add__(self, other):
        if isinstance(other, MagneticElement):
            self._check_same_lb(other)
            s = max(self.block.shape[0], other.block.shape[0])
            return MagneticElement(self.padded(s) + other.padded(s), self.lb)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, MagneticElement):
            return self + (-1.0) * other
        return NotImplemented

    def __mul__(self, c):
        if np.isscalar(c):
            return MagneticElement(self.block * c, self.lb)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __matmul__(self, other):
        if isinstance(other, MagneticElement):
            return compose(self, other)
        return NotImplemented

    def adjoint(self) -> "MagneticElement":
        return MagneticElement(self.block.conj().T, self.lb)

    def __repr__(self):
        return f"MagneticElement(support={self.support_bound}, lb={self.lb})"

    def allclose(self, other: "MagneticElement", tol: float = 1e-12) -> bool:
        s = max(self.block.shape[0], other.block.shape[0])
        return bool(np.allclose(self.padded(s), other.padded(s), atol=tol, rtol=tol))


def upsilon(j: int, k: int, lb=1.0) -> MagneticElement:
    """The transition operator Y_{j->k} as an element."""
    return MagneticElement.from_coeffs({(j, k): 1.0}, lb)


def landau_projection(j: int, lb=1.0) -> MagneticElement:
    """Projection onto the j-th Landau level, Pi_j = Y_{j->j}."""
    return upsilon(j, j, lb)


def projection_sum(js, lb=1.0) -> MagneticElement:
    """Sum of Landau projections Pi_j over the given levels."""
    return MagneticElement.from_coeffs({(j, j): 1.0 for j in js}, lb)


def zero_element(lb=1.0) -> MagneticElement:
    return MagneticElement(np.zeros((1, 1), dtype=complex), lb)


def compose(a: MagneticElement, b: MagneticElement) -> MagneticElement:
    """Operator product AB, (AB)_{m,k} = sum_j a_{j,k} b_{m,j}."""
    a._check_same_lb(b)
    s = max(a.block.shape[0], b.block.shape[0])
    return MagneticElement(a.padded(s) @ b.padded(s), a.lb)


def adjoint(a: MagneticElement) -> MagneticElement:
    return a.adjoint()


def trace_int(a: MagneticElement) -> complex:
    """The algebra trace: sum of the diagonal coefficients."""
    return complex(np.trace(a.block))


_K_CACHE: dict = {}


def _k_ladders(size: int):
    got = _K_CACHE.get(size)
    if got is None:
        got = (
            number_ladders(size, "K1").toarray(),
            number_ladders(size, "K2").toarray(),
        )
        _K_CACHE[size] = got
    return got


def spatial_derivative(a: MagneticElement, axis: int) -> MagneticElement:
    """The derivation along one coordinate, realized through K-commutators.

    With x1 = l (K2 - G1) and x2 = l (G2 - K1), and the G's commuting with
    the algebra, -i[x1, A] = -i l [K2, A] and -i[x2, A] = +i l [K1, A].
    Support grows by at most one level.
    """
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    s = a.support_bound + 1
    k1, k2 = _k_ladders(max(s, 2))
    m = a.padded(max(s, 2))
    if axis == 1:
        out = -1j * a.lb * (k2 @ m - m @ k2)
    else:
        out = 1j * a.lb * (k1 @ m - m @ k1)
    return MagneticElement(out, a.lb)


def norms(a: MagneticElement) -> dict:
    """Operator (spectral), Hilbert-Schmidt and summed-coefficient norms."""
    op = float(np.linalg.norm(a.block, 2)) if a.block.size else 0.0
    hs = float(np.linalg.norm(a.block))
    l1 = float(np.abs(a.block).sum())
    return {"operator_norm": op, "hs_norm": hs, "l1_norm": l1}


def random_element(seed: int, support_bound: int, magnitude: float = 1.0,
                   lb=1.0) -> MagneticElement:
    """Deterministic pseudo-random element supported below ``support_bound``."""
    if support_bound < 1:
        raise ValueError("support bound must be >= 1")
    rng = np.random.default_rng(seed)
    block = rng.standard_normal((support_bound, support_bound))
    block = block + 1j * rng.standard_normal((support_bound, support_bound))
    return MagneticElement(magnitude * block / sqrt(2.0), lb)


def hermitize(a: MagneticElement) -> MagneticElement:
    return 0.5 * (a + a.adjoint())


def is_projection(p: MagneticElement, tol: float = 1e-10) -> bool:
    s = p.block.shape[0]
    m = p.padded(s)
    herm = np.abs(m - m.conj().T).max() if m.size else 0.0
    idem = np.abs((p @ p).padded(s) - m).max()
    return bool(herm <= tol and idem <= tol)


def conjugated_projection(seed: int, size: int, lb=1.0,
                          strength: float = 1.0) -> MagneticElement:
    """U Pi_0 U* with U = exp(i H), H a seeded Hermitian block.

    U is unitary on the block and the identity outside, so the conjugation
    stays finitely supported and is an exact projection.
    """
    if size < 1:
        raise ValueError("block size must be >= 1")
    h = hermitize(random_element(seed, size, strength, lb))
    u = scipy.linalg.expm(1j * h.padded(size))
    p0 = np.zeros((size, size), dtype=complex)
    p0[0, 0] = 1.0
    return MagneticElement(u @ p0 @ u.conj().T, lb)


# ---------------------------------------------------------------------------
# Unitization: c*1 + A.
# ---------------------------------------------------------------------------

class UnitalElement:
    """Element c*1 + A of the unitized algebra."""

    __slots__ = ("scalar", "element")

    def __init__(self, scalar, element: MagneticElement):
        self.scalar = complex(scalar)
        self.element = element

    @classmethod
    def lift(cls, a) -> "UnitalElement":
        if isinstance(a, UnitalElement):
            return a
        if isinstance(a, MagneticElement):
            return cls(0.0, a)
        raise TypeError(f"cannot lift {type(a)!r} into the unitization")

    @classmethod
    def unit(cls, lb=1.0) -> "UnitalElement":
        return cls(1.0, zero_element(lb))

    @property
    def lb(self) -> float:
        return self.element.lb

    def __add__(self, other):
        other = UnitalElement.lift(other)
        return UnitalElement(self.scalar + other.scalar, self.element + other.element)

    def __mul__(self, c):
        if np.isscalar(c):
            return UnitalElement(c * self.scalar, c * self.element)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = UnitalElement.lift(other)
        prod = (
            compose(self.element, other.element)
            + self.scalar * other.element
            + other.scalar * self.element
        )
        return UnitalElement(self.scalar * other.scalar, prod)

    def adjoint(self) -> "UnitalElement":
        return UnitalElement(np.conj(self.scalar), self.element.adjoint())

    def derivative(self, axis: int) -> MagneticElement:
        """The unit part is annihilated by both derivations."""
        return spatial_derivative(self.element, axis)

    def __repr__(self):
        return f"UnitalElement({self.scalar!r} * 1 + {self.element!r})"


# ---------------------------------------------------------------------------
# Serialization: list of (j, k, re, im) records.
# ---------------------------------------------------------------------------

def element_to_records(a: MagneticElement) -> list[dict]:
    return [
        {"j": j, "k": k, "re": float(v.real), "im": float(v.imag)}
        for (j, k), v in sorted(a.coeffs().items())
    ]


def element_from_records(records, lb=1.0) -> MagneticElement:
    coeffs = {}
    for r in records:
        j, k = int(r["j"]), int(r["k"])
        coeffs[(j, k)] = coeffs.get((j, k), 0j) + complex(r["re"], r.get("im", 0.0))
    return MagneticElement.from_coeffs(coeffs, lb)


def save_element(a: MagneticElement, path):
    with open(path, "w") as fh:
        json.dump(element_to_records(a), fh, indent=1)


def load_element(path, lb=1.0) -> MagneticElement:
    with open(path) as fh:
        return element_from_records(json.load(fh), lb)
