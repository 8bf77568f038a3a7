"""Exact and float numeric kernel shared by the rest of the package.

Every routine here runs in one of two modes.  Exact mode keeps scalars as
`fractions.Fraction` and decides signs and singularity without rounding.
Float mode works in double precision and replaces each sign decision with a
tolerance test controlled by a :class:`ToleranceContext`.

The mode is carried by the context, not by a scalar wrapper type: routines
coerce their input entries to the representation the context asks for
(floats are converted to exact binary rationals in exact mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

Scalar = Fraction | int | float

__all__ = [
    "Scalar",
    "HankelshiftError",
    "InputError",
    "InsufficientMomentsError",
    "PreconditionError",
    "InternalConsistencyError",
    "ToleranceContext",
    "EXACT",
    "FLOAT",
    "SymMatrix",
    "Interval",
    "QuadRoots",
    "det_bareiss",
    "char_poly",
    "is_psd",
    "is_pd",
    "psd_with_margin",
    "solve_quadratic",
    "solve_vandermonde",
    "solve_linear_exact",
    "hadamard_bound",
    "fmt_scalar",
]


class HankelshiftError(Exception):
    """Base class for all library errors."""


class InputError(HankelshiftError):
    """Malformed user input: bad file, bad literal, mixed representations."""


class InsufficientMomentsError(HankelshiftError):
    """The requested block or scan needs moments beyond the horizon."""

    def __init__(self, required_index: int, horizon: int):
        self.required_index = required_index
        self.horizon = horizon
        super().__init__(
            f"needs moment index {required_index} but the horizon is {horizon}"
        )


class PreconditionError(HankelshiftError):
    """An operation's precondition does not hold for the given data."""


class InternalConsistencyError(HankelshiftError):
    """Two independent computations of the same quantity disagreed."""


@dataclass(frozen=True)
class ToleranceContext:
    """Computation mode plus the float-mode tolerance policy.

    A float quantity x is treated as zero iff |x| <= zero_eps + rel_eps*scale,
    where scale is a magnitude representative of the matrix or sequence under
    test.  psd_floor scales the eigenvalue threshold of the PSD/PD tests.
    All three are ignored in exact mode.
    """

    mode: str = "exact"
    zero_eps: float = 1e-12
    rel_eps: float = 1e-10
    psd_floor: float = 1e-10

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "float"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "float":
            if self.zero_eps <= 0 or self.rel_eps <= 0 or self.psd_floor <= 0:
                raise ValueError("float-mode tolerances must be positive")

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"

    def band(self, scale: float = 0.0) -> float:
        return self.zero_eps + self.rel_eps * abs(scale)

    def is_zero(self, x: Scalar, scale: float = 0.0) -> bool:
        if self.is_exact:
            return x == 0
        return abs(x) <= self.band(scale)

    def nonneg(self, x: Scalar, scale: float = 0.0) -> bool:
        if self.is_exact:
            return x >= 0
        return x >= -self.band(scale)


EXACT = ToleranceContext(mode="exact")
FLOAT = ToleranceContext(mode="float")


def _as_rows(matrix: "SymMatrix | Sequence[Sequence[Scalar]]") -> list[list[Scalar]]:
    if isinstance(matrix, SymMatrix):
        return [list(row) for row in matrix.rows]
    return [list(row) for row in matrix]


def _has_float(rows: Sequence[Sequence[Scalar]]) -> bool:
    return any(isinstance(x, float) for row in rows for x in row)


def _exact_rows(rows: Sequence[Sequence[Scalar]]) -> list[list[Fraction]]:
    # Fraction(float) is the exact binary value, so this is lossless.
    return [[Fraction(x) for x in row] for row in rows]


def _float_array(matrix: "SymMatrix | Sequence[Sequence[Scalar]]") -> np.ndarray:
    rows = _as_rows(matrix)
    n = len(rows)
    return np.array([[float(x) for x in row] for row in rows], dtype=float).reshape(n, n)


@dataclass(frozen=True)
class SymMatrix:
    """A square symmetric matrix with scalar entries, immutable.

    Symmetry is validated on construction; all builders in this package fill
    mirrored entries from the same expression, so the check is exact even in
    float mode.
    """

    rows: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.rows)
        for row in self.rows:
            if len(row) != n:
                raise ValueError("matrix is not square")
        for i in range(n):
            for j in range(i + 1, n):
                if self.rows[i][j] != self.rows[j][i]:
                    raise ValueError(f"matrix is not symmetric at ({i}, {j})")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Scalar]]) -> "SymMatrix":
        return cls(tuple(tuple(row) for row in rows))

    @property
    def order(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> Scalar:
        return self.rows[i][j]

    def max_abs(self) -> float:
        if not self.rows:
            return 0.0
        return max(abs(float(x)) for row in self.rows for x in row)

    def to_numpy(self) -> np.ndarray:
        return _float_array(self)


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; the empty interval is a distinct sentinel."""

    lo: Scalar
    hi: Scalar
    empty: bool = False

    def __post_init__(self) -> None:
        if not self.empty and self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: {self.lo} > {self.hi}")

    @classmethod
    def empty_interval(cls) -> "Interval":
        return cls(0, 0, empty=True)

    def contains(self, x: Scalar) -> bool:
        return (not self.empty) and self.lo <= x <= self.hi

    def width(self) -> Scalar:
        return 0 if self.empty else self.hi - self.lo

    def intersect(self, other: "Interval") -> "Interval":
        if self.empty or other.empty:
            return Interval.empty_interval()
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return Interval.empty_interval()
        return Interval(lo, hi)


def det_bareiss(matrix: SymMatrix | Sequence[Sequence[Scalar]]) -> Scalar:
    """Determinant by fraction-free single-step Bareiss elimination.

    Exact over rationals (every division is exact); also usable on float
    entries where it degrades to ordinary elimination.  The order-0 matrix
    has determinant 1 by convention.
    """
    rows = _as_rows(matrix)
    n = len(rows)
    if n == 0:
        return 1
    if not _has_float(rows):
        rows = _exact_rows(rows)
    sign = 1
    prev: Scalar = 1
    for k in range(n - 1):
        if rows[k][k] == 0:
            pivot_row = next((r for r in range(k + 1, n) if rows[r][k] != 0), None)
            if pivot_row is None:
                return rows[0][0] * 0
            rows[k], rows[pivot_row] = rows[pivot_row], rows[k]
            sign = -sign
        pivot = rows[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                rows[i][j] = (rows[i][j] * pivot - rows[i][k] * rows[k][j]) / prev
        prev = pivot
    return sign * rows[n - 1][n - 1]


def char_poly(matrix: SymMatrix | Sequence[Sequence[Scalar]]) -> tuple[Scalar, ...]:
    """Coefficients (c_0..c_m) of p(x) = det(x*I + M), c_0 = 1.

    Exact entries go through Faddeev-LeVerrier, whose only divisions are by
    the step index and therefore exact over rationals.  Float entries go
    through the eigenvalue route.
    """
    rows = _as_rows(matrix)
    m = len(rows)
    if m == 0:
        return (1,)
    if _has_float(rows):
        coeffs = np.poly(-_float_array(rows))
        return tuple(float(c) for c in coeffs)
    a = [[-x for x in row] for row in _exact_rows(rows)]
    coeffs: list[Fraction] = [Fraction(1)]
    work = [[Fraction(1) if i == j else Fraction(0) for j in range(m)] for i in range(m)]
    for step in range(1, m + 1):
        prod = [
            [sum(a[i][r] * work[r][j] for r in range(m)) for j in range(m)]
            for i in range(m)
        ]
        ck = -sum(prod[i][i] for i in range(m)) / step
        coeffs.append(ck)
        for i in range(m):
            prod[i][i] += ck
        work = prod
    return tuple(coeffs)


def _leading_minors_positive(rows: list[list[Fraction]]) -> bool:
    # Bareiss pass; after eliminating column k the (k+1, k+1) entry holds the
    # order-(k+2) leading principal minor.  Stops at the first minor <= 0,
    # which also keeps every division exact (previous pivots are nonzero).
    n = len(rows)
    prev = Fraction(1)
    for k in range(n):
        pivot = rows[k][k]
        if pivot <= 0:
            return False
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                rows[i][j] = (rows[i][j] * pivot - rows[i][k] * rows[k][j]) / prev
        prev = pivot
    return True


def _eig_min(matrix: SymMatrix | Sequence[Sequence[Scalar]]) -> tuple[float, float]:
    arr = _float_array(matrix)
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    lam_min = float(np.linalg.eigvalsh(arr)[0]) if arr.size else 0.0
    return lam_min, scale


def psd_with_margin(matrix: SymMatrix, ctx: ToleranceContext = EXACT) -> tuple[bool, bool]:
    """(is PSD, verdict is marginal).

    Float mode flags marginal when the smallest eigenvalue sits inside the
    tolerance band around zero, i.e. the verdict would flip under a
    band-sized perturbation.  Exact mode flags exactly singular PSD blocks.
    """
    if matrix.order == 0:
        return True, False
    if ctx.is_exact:
        coeffs = char_poly(matrix)
        holds = all(c >= 0 for c in coeffs)
        return holds, holds and coeffs[-1] == 0
    lam_min, scale = _eig_min(matrix)
    floor = ctx.psd_floor * (1.0 + scale)
    return lam_min >= -floor, abs(lam_min) <= floor


def is_psd(matrix: SymMatrix, ctx: ToleranceContext = EXACT) -> bool:
    """PSD test: exact mode by the char-poly coefficient signs of det(xI + M)
    (all >= 0 iff the real symmetric spectrum is >= 0), float mode by the
    smallest eigenvalue against the scaled floor."""
    return psd_with_margin(matrix, ctx)[0]


def is_pd(matrix: SymMatrix, ctx: ToleranceContext = EXACT) -> bool:
    """PD test: exact mode by strict positivity of all leading principal
    minors (Sylvester), float mode by the strict version of the PSD floor."""
    if matrix.order == 0:
        return True
    if ctx.is_exact:
        return _leading_minors_positive(_exact_rows(_as_rows(matrix)))
    lam_min, scale = _eig_min(matrix)
    return lam_min > ctx.psd_floor * (1.0 + scale)


class QuadRoots(NamedTuple):
    roots: tuple[Scalar, ...]
    discriminant: Scalar
    exact: bool


def _fraction_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def solve_quadratic(a: Scalar, b: Scalar, c: Scalar) -> QuadRoots:
    """Real roots of a*t^2 + b*t + c in ascending order.

    With rational input the roots are exact when the discriminant is a
    rational square; otherwise float enclosures are returned together with
    the exact discriminant (whose sign is therefore certified).
    """
    if a == 0:
        raise PreconditionError("quadratic solver requires a nonzero leading coefficient")
    if isinstance(a, float) or isinstance(b, float) or isinstance(c, float):
        af, bf, cf = float(a), float(b), float(c)
        disc = bf * bf - 4.0 * af * cf
        if disc < 0:
            return QuadRoots((), disc, False)
        if disc == 0:
            return QuadRoots((-bf / (2.0 * af),), disc, False)
        q = -(bf + math.copysign(math.sqrt(disc), bf)) / 2.0
        r1, r2 = q / af, cf / q
        return QuadRoots(tuple(sorted((r1, r2))), disc, False)
    a, b, c = Fraction(a), Fraction(b), Fraction(c)
    disc = b * b - 4 * a * c
    if disc < 0:
        return QuadRoots((), disc, True)
    root = _fraction_sqrt(disc)
    if root is not None:
        r1 = (-b - root) / (2 * a)
        r2 = (-b + root) / (2 * a)
        lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
        if lo == hi:
            return QuadRoots((lo,), disc, True)
        return QuadRoots((lo, hi), disc, True)
    sf = math.sqrt(float(disc))
    af, bf = float(a), float(b)
    r1 = (-bf - sf) / (2.0 * af)
    r2 = (-bf + sf) / (2.0 * af)
    return QuadRoots(tuple(sorted((r1, r2))), disc, False)


def solve_linear_exact(
    rows: Sequence[Sequence[Scalar]], rhs: Sequence[Scalar]
) -> tuple[Fraction, ...] | None:
    """One exact solution of A x = b with free variables set to zero, or
    None when the system is inconsistent.  The candidate is re-verified by
    substitution, so the answer is sound regardless of pivoting order."""
    m = len(rows)
    ncols = len(rows[0]) if m else 0
    aug = [
        [Fraction(x) for x in row] + [Fraction(v)]
        for row, v in zip(rows, rhs, strict=True)
    ]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == m:
            break
        pr = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if pr is None:
            continue
        aug[r], aug[pr] = aug[pr], aug[r]
        pv = aug[r][c]
        aug[r] = [x / pv for x in aug[r]]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
    x = [Fraction(0)] * ncols
    for row_idx, c in enumerate(pivots):
        x[c] = aug[row_idx][ncols]
    for row, v in zip(rows, rhs, strict=True):
        if sum(Fraction(a) * xi for a, xi in zip(row, x)) != Fraction(v):
            return None
    return tuple(x)


def solve_vandermonde(
    nodes: Sequence[Scalar], rhs: Sequence[Scalar], ctx: ToleranceContext = EXACT
) -> tuple[Scalar, ...]:
    """Solve sum_j rho_j * nodes_j^i = rhs_i for i = 0..m-1."""
    m = len(nodes)
    if len(rhs) != m:
        raise PreconditionError("nodes and rhs must have equal length")
    for i in range(m):
        for j in range(i + 1, m):
            if nodes[i] == nodes[j]:
                raise PreconditionError(f"repeated node {nodes[i]}")
    if m == 0:
        return ()
    if ctx.is_exact and not any(isinstance(x, float) for x in list(nodes) + list(rhs)):
        rows = [[Fraction(x) ** i for x in nodes] for i in range(m)]
        sol = solve_linear_exact(rows, rhs)
        if sol is None:
            raise InternalConsistencyError("distinct-node Vandermonde system unsolvable")
        return sol
    arr = np.array(
        [[float(x) ** i for x in nodes] for i in range(m)], dtype=float
    )
    sol = np.linalg.solve(arr, np.array([float(v) for v in rhs], dtype=float))
    return tuple(float(v) for v in sol)


def hadamard_bound(matrix: SymMatrix | Sequence[Sequence[Scalar]]) -> float:
    """Product of row 2-norms: a cheap a-priori bound on |det|, used to scale
    float-mode zero-determinant tests."""
    arr = _float_array(matrix)
    if arr.size == 0:
        return 1.0
    norms = np.sqrt((arr * arr).sum(axis=1))
    return float(np.prod(norms))


def fmt_scalar(x: Scalar) -> str:
    """Stable display form: integers bare, rationals as p/q, floats as repr."""
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))
