"""Haar sampling and actions for sign flips, permutations and rotations.

Each group is available two ways: element-level samplers returning immutable
``SignVector`` / ``Permutation`` / ``Rotation`` values that act on a single
vector through :func:`apply`, and group objects (``SignFlipGroup`` and friends)
that draw a whole block of transformed copies of ``x`` at once. The
randomization engine in :mod:`randinv.stats` uses the latter.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import SeededStream

__all__ = [
    "SignVector",
    "Permutation",
    "Rotation",
    "GroupElement",
    "sample_signs",
    "sample_permutation",
    "sample_rotation",
    "sample_rotations",
    "apply",
    "enumerate_signs",
    "SignEnumeration",
    "CapacityError",
    "SignFlipGroup",
    "PermutationGroup",
    "RotationGroup",
    "MAX_ENUMERATION_DIM",
]

MAX_ENUMERATION_DIM = 20
_MAX_PERMUTATION_ENUMERATION = 10
_ORTHO_TOL = 1e-10


class CapacityError(ValueError):
    """Requested exact enumeration is too large."""


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SignVector:
    signs: np.ndarray

    def __post_init__(self):
        s = _frozen(self.signs, np.int8)
        if s.ndim != 1 or s.size == 0 or not np.all(np.abs(s) == 1):
            raise ValueError("a sign vector is a nonempty 1-d array of +1/-1 entries")
        object.__setattr__(self, "signs", s)

    @property
    def dim(self) -> int:
        return self.signs.size

    def __eq__(self, other):
        return isinstance(other, SignVector) and np.array_equal(self.signs, other.signs)

    def __hash__(self):
        return hash(self.signs.tobytes())


@dataclass(frozen=True, eq=False)
class Permutation:
    mapping: np.ndarray

    def __post_init__(self):
        p = _frozen(self.mapping, np.intp)
        if p.ndim != 1 or p.size == 0 or not np.array_equal(np.sort(p), np.arange(p.size)):
            raise ValueError("mapping must be a bijection of 0..n-1")
        object.__setattr__(self, "mapping", p)

    @property
    def dim(self) -> int:
        return self.mapping.size

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.mapping, other.mapping)

    def __hash__(self):
        return hash(self.mapping.tobytes())


@dataclass(frozen=True, eq=False)
class Rotation:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix, float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError("rotation matrix must be square and nonempty")
        n = m.shape[0]
        if np.max(np.abs(m.T @ m - np.eye(n))) > _ORTHO_TOL:
            raise ValueError("matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > _ORTHO_TOL:
            raise ValueError("matrix does not have determinant +1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


GroupElement = Union[SignVector, Permutation, Rotation]


def _check_dim(n: int) -> None:
    if n < 1:
        raise ValueError(f"dimension must be at least 1, got {n}")


def _sign_block(n: int, size, stream: SeededStream) -> np.ndarray:
    bits = stream.rng.integers(0, 2, size=size, dtype=np.int8)
    return (1 - 2 * bits).astype(np.int8)


def sample_signs(n: int, stream: SeededStream) -> SignVector:
    """Haar draw from {-1, +1}^n: independent fair signs."""
    _check_dim(n)
    return SignVector(_sign_block(n, n, stream))


def sample_permutation(n: int, stream: SeededStream) -> Permutation:
    """Uniform draw from the symmetric group on n letters."""
    _check_dim(n)
    # Generator.permutation is a Fisher-Yates shuffle with unbiased bounded draws
    return Permutation(stream.rng.permutation(n))


def _haar_orthogonal(n: int, size: int, stream: SeededStream) -> np.ndarray:
    g = stream.rng.standard_normal((size, n, n))
    q, r = np.linalg.qr(g)
    d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    q = q * d[:, None, :]
    det = np.linalg.det(q)
    q[det < 0, :, 0] *= -1.0
    return q


def sample_rotation(n: int, stream: SeededStream) -> Rotation:
    """Haar draw from SO(n).

    Gaussian matrix -> QR -> columns of Q scaled by sign(diag R), which is Haar
    on O(n); the first column is negated when the determinant is -1.
    """
    _check_dim(n)
    return Rotation(_haar_orthogonal(n, 1, stream)[0])


def sample_rotations(n: int, count: int, stream: SeededStream) -> np.ndarray:
    """``count`` Haar rotations stacked as an array of shape (count, n, n)."""
    _check_dim(n)
    return _haar_orthogonal(n, count, stream)


def apply(g: GroupElement, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != g.dim:
        raise ValueError(f"group element of dimension {g.dim} cannot act on shape {x.shape}")
    if isinstance(g, SignVector):
        return g.signs * x
    if isinstance(g, Permutation):
        return x[g.mapping]
    if isinstance(g, Rotation):
        return g.matrix @ x
    raise TypeError(f"not a group element: {type(g).__name__}")


def _sign_matrix(n: int) -> np.ndarray:
    # row k has a -1 in coordinate i exactly when bit (n-1-i) of k is set,
    # so row 0 is all +1 and the order matches itertools.product((1, -1), ...)
    k = np.arange(2**n, dtype=np.int64)[:, None]
    bits = (k >> np.arange(n - 1, -1, -1, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


class SignEnumeration(Sequence):
    """All 2**n sign vectors in a fixed order, materialized lazily as a matrix."""

    def __init__(self, n: int):
        _check_dim(n)
        if n > MAX_ENUMERATION_DIM:
            raise CapacityError(f"refusing to enumerate 2**{n} sign vectors (limit n <= {MAX_ENUMERATION_DIM})")
        self.n = n
        self._matrix = None

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = _sign_matrix(self.n)
            self._matrix.setflags(write=False)
        return self._matrix

    def __len__(self):
        return 2**self.n

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        return SignVector(self.matrix[i])


def enumerate_signs(n: int) -> SignEnumeration:
    return SignEnumeration(n)


class SignFlipGroup:
    """{-1, +1}^n acting by coordinatewise sign changes."""

    def __init__(self, n: int):
        _check_dim(n)
        self.n = n

    @property
    def enumerable(self) -> bool:
        return self.n <= MAX_ENUMERATION_DIM

    @property
    def order(self) -> int:
        return 2**self.n

    def sample(self, stream: SeededStream) -> SignVector:
        return sample_signs(self.n, stream)

    def orbit_sample(self, x, r: int, stream: SeededStream) -> np.ndarray:
        """``r`` independent Haar images of x, shape (r, n)."""
        return _sign_block(self.n, (r, self.n), stream) * np.asarray(x, dtype=float)

    def orbit(self, x, chunk: int = 1 << 16):
        """Every image of x, yielded in blocks of at most ``chunk`` rows."""
        signs = enumerate_signs(self.n).matrix
        x = np.asarray(x, dtype=float)
        for start in range(0, signs.shape[0], chunk):
            yield signs[start:start + chunk] * x


class PermutationGroup:
    """Symmetric group on n letters acting by coordinate relabelling."""

    def __init__(self, n: int):
        _check_dim(n)
        self.n = n

    @property
    def enumerable(self) -> bool:
        return self.n <= _MAX_PERMUTATION_ENUMERATION

    @property
    def order(self) -> int:
        return math.factorial(self.n)

    def sample(self, stream: SeededStream) -> Permutation:
        return sample_permutation(self.n, stream)

    def orbit_sample(self, x, r: int, stream: SeededStream) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return stream.rng.permuted(np.broadcast_to(x, (r, self.n)), axis=1)

    def orbit(self, x, chunk: int = 1 << 16):
        if not self.enumerable:
            raise CapacityError(f"refusing to enumerate {self.n}! permutations")
        x = np.asarray(x, dtype=float)
        perms = itertools.permutations(range(self.n))
        while True:
            block = np.array(list(itertools.islice(perms, chunk)), dtype=np.intp)
            if block.size == 0:
                return
            yield x[block]


class RotationGroup:
    """SO(n) acting by matrix multiplication. Not enumerable."""

    enumerable = False

    def __init__(self, n: int):
        _check_dim(n)
        self.n = n

    def sample(self, stream: SeededStream) -> Rotation:
        return sample_rotation(self.n, stream)

    def orbit_sample(self, x, r: int, stream: SeededStream) -> np.ndarray:
        m = _haar_orthogonal(self.n, r, stream)
        return m @ np.asarray(x, dtype=float)

    def orbit(self, x, chunk: int = 1 << 16):
        raise CapacityError("SO(n) is not a finite group")
