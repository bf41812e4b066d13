"""Simplicial homology with GF(2) coefficients.

Boundary columns are packed into Python integers (bit i set means face i is
present), so elimination is a sequence of big-integer XORs.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence


class ComplexError(ValueError):
    """Malformed complex (not face-closed, bad simplex, out-of-range dimension)."""


def simplex(vertices: Iterable[int]) -> tuple:
    """Canonical simplex: sorted tuple of distinct vertex ids."""
    s = tuple(sorted(int(v) for v in vertices))
    if not s or len(set(s)) != len(s):
        raise ComplexError(f"invalid simplex {s}")
    return s


class SimplicialComplex:
    """Finite abstract simplicial complex stored per dimension in lexicographic order."""

    def __init__(self, simplices: Iterable[Sequence[int]] = (), close: bool = False):
        by_dim: dict[int, set] = {}
        for s in simplices:
            s = simplex(s)
            by_dim.setdefault(len(s) - 1, set()).add(s)
        if close and by_dim:
            for k in range(max(by_dim), 0, -1):
                faces = by_dim.setdefault(k - 1, set())
                for s in by_dim[k]:
                    faces.update(combinations(s, k))
        top = max(by_dim) if by_dim else -1
        self._simplices = [sorted(by_dim.get(k, ())) for k in range(top + 1)]
        self._index = [None] * (top + 1)
        if not close:
            self.validate()

    @classmethod
    def from_layers(cls, layers, validate: bool = False) -> "SimplicialComplex":
        """Build from per-dimension lists that are already sorted and face-closed."""
        K = cls.__new__(cls)
        K._simplices = [list(layer) for layer in layers]
        while K._simplices and not K._simplices[-1]:
            K._simplices.pop()
        K._index = [None] * len(K._simplices)
        if validate:
            K.validate()
        return K

    @classmethod
    def from_maximal(cls, simplices: Iterable[Sequence[int]]) -> "SimplicialComplex":
        return cls(simplices, close=True)

    @property
    def max_dim(self) -> int:
        return len(self._simplices) - 1

    def simplices(self, k: int) -> list:
        return self._simplices[k] if 0 <= k <= self.max_dim else []

    def count(self, k: int) -> int:
        return len(self.simplices(k))

    def counts(self) -> list:
        return [len(s) for s in self._simplices]

    def index(self, k: int) -> dict:
        if not 0 <= k <= self.max_dim:
            return {}
        if self._index[k] is None:
            self._index[k] = {s: i for i, s in enumerate(self._simplices[k])}
        return self._index[k]

    def all_simplices(self) -> list:
        return [s for level in self._simplices for s in level]

    def __contains__(self, s) -> bool:
        s = simplex(s)
        return s in self.index(len(s) - 1)

    def __len__(self) -> int:
        return sum(self.counts())

    def __eq__(self, other) -> bool:
        return isinstance(other, SimplicialComplex) and self._simplices == other._simplices

    def issubset(self, other: "SimplicialComplex") -> bool:
        return all(set(self.simplices(k)) <= set(other.simplices(k))
                   for k in range(self.max_dim + 1))

    def vertices(self) -> list:
        return [s[0] for s in self.simplices(0)]

    def validate(self) -> None:
        for k in range(1, self.max_dim + 1):
            lower = self.index(k - 1)
            for s in self._simplices[k]:
                for f in combinations(s, k):
                    if f not in lower:
                        raise ComplexError(f"face {f} of {s} is missing")

    def relabel(self, mapping) -> "SimplicialComplex":
        return SimplicialComplex([[mapping[v] for v in s] for s in self.all_simplices()])

    def skeleton(self, k: int) -> "SimplicialComplex":
        return SimplicialComplex([s for s in self.all_simplices() if len(s) <= k + 1])

    def __repr__(self):
        return f"SimplicialComplex(counts={self.counts()})"


@dataclass(frozen=True)
class GF2Matrix:
    """Sparse-ish GF(2) matrix; ``bits[j]`` packs column j (bit i = row i)."""

    rows: int
    cols: int
    bits: tuple

    def entry(self, i: int, j: int) -> int:
        return (self.bits[j] >> i) & 1

    def to_dense(self) -> list:
        return [[self.entry(i, j) for j in range(self.cols)] for i in range(self.rows)]

    def transpose(self) -> "GF2Matrix":
        out = [0] * self.rows
        for j, col in enumerate(self.bits):
            while col:
                low = col & -col
                out[low.bit_length() - 1] |= 1 << j
                col ^= low
        return GF2Matrix(self.cols, self.rows, tuple(out))

    def __matmul__(self, other: "GF2Matrix") -> "GF2Matrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = []
        for col in other.bits:
            acc = 0
            while col:
                low = col & -col
                acc ^= self.bits[low.bit_length() - 1]
                col ^= low
            out.append(acc)
        return GF2Matrix(self.rows, other.cols, tuple(out))

    def is_zero(self) -> bool:
        return not any(self.bits)

    def rank(self) -> int:
        return gf2_rank(self.bits)


def gf2_rank(vectors: Iterable[int]) -> int:
    """Rank of packed GF(2) vectors by leading-bit elimination."""
    pivots: dict[int, int] = {}
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            p = pivots.get(top)
            if p is None:
                pivots[top] = v
                break
            v ^= p
    return len(pivots)


def boundary_matrix(K: SimplicialComplex, k: int) -> GF2Matrix:
    """Matrix of the boundary map from k-chains to (k-1)-chains."""
    if not 1 <= k <= K.max_dim:
        raise ComplexError(f"boundary dimension {k} out of range 1..{K.max_dim}")
    lower = K.index(k - 1)
    cols = []
    for s in K.simplices(k):
        col = 0
        for f in combinations(s, k):
            col |= 1 << lower[f]
        cols.append(col)
    return GF2Matrix(K.count(k - 1), K.count(k), tuple(cols))


def _boundary_rank(K: SimplicialComplex, k: int) -> int:
    if not 1 <= k <= K.max_dim or K.count(k) == 0:
        return 0
    # columns stay short (one bit per face); lexicographic order keeps fill-in low
    return boundary_matrix(K, k).rank()


@dataclass(frozen=True)
class BettiVector:
    betti: tuple
    euler: int

    def __getitem__(self, k):
        return self.betti[k]

    def __len__(self):
        return len(self.betti)

    def __iter__(self):
        return iter(self.betti)

    def truncated(self, top: int) -> tuple:
        """Betti numbers beta_0..beta_top (zero-padded)."""
        return tuple(self.betti[k] if k < len(self.betti) else 0 for k in range(top + 1))


def betti_numbers(K: SimplicialComplex, max_dim: int | None = None) -> BettiVector:
    """beta_k = |K^k| - rank d_k - rank d_{k+1} for k = 0..top, plus the Euler check."""
    top = K.max_dim if max_dim is None else min(max_dim, K.max_dim)
    if K.max_dim < 0:
        return BettiVector((), 0)
    ranks = [0] + [_boundary_rank(K, k) for k in range(1, top + 2)]
    betti = tuple(K.count(k) - ranks[k] - ranks[k + 1] for k in range(top + 1))
    euler = sum((-1) ** k * b for k, b in enumerate(betti))
    if top == K.max_dim:
        chi = sum((-1) ** k * c for k, c in enumerate(K.counts()))
        if chi != euler:
            raise ArithmeticError(f"Euler identity failed: {chi} != {euler}")
    return BettiVector(betti, euler)


def topological_complexity(K: SimplicialComplex, manifold_dim: int | None = None) -> int:
    """Sum of Betti numbers.

    Without ``manifold_dim`` every computed beta_k is summed.  Given the
    manifold dimension d, only beta_0..beta_{d-1} are summed.
    """
    b = betti_numbers(K)
    if manifold_dim is None:
        return sum(b.betti)
    return sum(b.betti[:manifold_dim])


def read_complex(path) -> SimplicialComplex:
    """One maximal simplex per line (vertex ids separated by whitespace)."""
    with open(path) as fh:
        rows = [line.split() for line in fh if line.strip() and not line.startswith("#")]
    return SimplicialComplex.from_maximal([int(v) for v in row] for row in rows)


def write_complex(K: SimplicialComplex, path) -> None:
    with open(path, "w") as fh:
        for s in maximal_simplices(K):
            fh.write(" ".join(map(str, s)) + "\n")


def maximal_simplices(K: SimplicialComplex) -> list:
    covered = set()
    out = []
    for k in range(K.max_dim, -1, -1):
        for s in K.simplices(k):
            if s not in covered:
                out.append(s)
            if k > 0:
                covered.update(combinations(s, k))
    return sorted(out)
