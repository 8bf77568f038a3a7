"""Hankel moment blocks: positivity scans, determinant tables by
condensation, and the vanishing-determinant propagation check.

A moment sequence gamma_0..gamma_N indexes the symmetric blocks
block(gamma, n, k) with entry (i, j) = gamma_{n+i+j}; a sequence is
k-positive (up to the horizon) when every feasible block of order k is PSD.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .numkit import (
    EXACT,
    InsufficientMomentsError,
    PreconditionError,
    Scalar,
    SymMatrix,
    ToleranceContext,
    det_bareiss,
    hadamard_bound,
    psd_with_margin,
)

__all__ = [
    "MomentSequence",
    "BlockIndex",
    "DetTable",
    "PositivityVerdict",
    "PropagationReport",
    "block",
    "is_k_positive",
    "log_convexity",
    "zero_moment_collapse",
    "det_sequence",
    "propagation_report",
]


@dataclass(frozen=True)
class MomentSequence:
    """Finite prefix gamma_0..gamma_N of a moment sequence.

    gamma_0 must be positive and every entry nonnegative; operations that
    divide by moments additionally require strict positivity and say so.
    """

    values: tuple[Scalar, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("a moment sequence needs at least gamma_0")
        if not self.values[0] > 0:
            raise ValueError("gamma_0 must be positive")
        for n, v in enumerate(self.values):
            if v < 0:
                raise ValueError(f"gamma_{n} is negative")

    @classmethod
    def of(cls, values: Iterable[Scalar]) -> "MomentSequence":
        return cls(tuple(values))

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int) -> Scalar:
        return self.values[n]

    @property
    def strictly_positive(self) -> bool:
        return all(v > 0 for v in self.values)

    def max_abs(self) -> float:
        return max(abs(float(v)) for v in self.values)


class BlockIndex(NamedTuple):
    n: int
    k: int


@dataclass(frozen=True)
class PositivityVerdict:
    k: int
    holds: bool
    horizon: int
    first_failure: Optional[BlockIndex] = None
    witness: Optional[SymMatrix] = None
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class DetTable:
    """Determinants of all feasible order-k blocks, anchors n = 0..N-2k.

    methods[n] records how dets[n] was produced: "condensation" when the
    two-order recurrence applied, "direct" when the entry fell back to a
    standalone determinant (zero or near-zero divisor, or base order).
    """

    k: int
    horizon: int
    dets: tuple[Scalar, ...]
    methods: tuple[str, ...]

    def anchors(self) -> range:
        return range(self.horizon - 2 * self.k + 1)


@dataclass(frozen=True)
class PropagationReport:
    """Outcome of the vanishing-determinant propagation check at order k-1
    for a k-positive sequence: one vanishing anchor forces vanishing at every
    anchor n >= 1, while the n = 0 determinant may legitimately stay nonzero."""

    k: int
    table: DetTable
    vanishing_found: bool
    first_zero_anchor: Optional[int]
    conclusion_verified: Optional[bool]
    anchor_zero_allowed_nonzero: bool


def block(gamma: MomentSequence, n: int, k: int) -> SymMatrix:
    """The (k+1)x(k+1) block with entry (i, j) = gamma_{n+i+j}."""
    if n < 0 or k < 0:
        raise PreconditionError(f"block indices must be nonnegative, got n={n}, k={k}")
    if n + 2 * k > gamma.horizon:
        raise InsufficientMomentsError(n + 2 * k, gamma.horizon)
    rows = tuple(
        tuple(gamma[n + i + j] for j in range(k + 1)) for i in range(k + 1)
    )
    return SymMatrix(rows)


def is_k_positive(
    gamma: MomentSequence, k: int, ctx: ToleranceContext = EXACT
) -> PositivityVerdict:
    """Scan all feasible anchors n <= N - 2k for PSD order-k blocks.

    The verdict certifies positivity only up to the recorded horizon.  Float
    mode flags anchors whose smallest eigenvalue sits inside the tolerance
    band (the verdict there is tolerance-limited); exact mode flags exactly
    singular blocks.
    """
    if k < 1:
        raise PreconditionError("k-positivity needs k >= 1")
    n_max = gamma.horizon - 2 * k
    if n_max < 0:
        raise InsufficientMomentsError(2 * k, gamma.horizon)
    flags: list[str] = []
    for n in range(n_max + 1):
        mat = block(gamma, n, k)
        holds, marginal = psd_with_margin(mat, ctx)
        if marginal:
            kind = "singular" if ctx.is_exact else "marginal"
            flags.append(f"{kind} block at anchor {n}")
        if not holds:
            return PositivityVerdict(
                k=k,
                holds=False,
                horizon=gamma.horizon,
                first_failure=BlockIndex(n, k),
                witness=mat,
                flags=tuple(flags),
            )
    return PositivityVerdict(k=k, holds=True, horizon=gamma.horizon, flags=tuple(flags))


def log_convexity(gamma: MomentSequence, ctx: ToleranceContext = EXACT) -> bool:
    """True iff gamma_n * gamma_{n+2} >= gamma_{n+1}^2 for every n <= N-2.

    For nonnegative sequences this coincides with 1-positivity.
    """
    for n in range(len(gamma) - 2):
        lhs = gamma[n] * gamma[n + 2]
        rhs = gamma[n + 1] * gamma[n + 1]
        scale = max(abs(float(lhs)), abs(float(rhs)))
        if not ctx.nonneg(lhs - rhs, scale):
            return False
    return True


def zero_moment_collapse(gamma: MomentSequence, ctx: ToleranceContext = EXACT) -> bool:
    """Zero-tail sanity rule for 1-positive sequences: if any moment
    vanishes, every moment with index >= 1 must vanish.  Returns True when
    the rule holds on the data (vacuously when no moment vanishes)."""
    scale = gamma.max_abs()
    if not any(ctx.is_zero(v, scale) for v in gamma.values):
        return True
    return all(ctx.is_zero(gamma[n], scale) for n in range(1, len(gamma)))


def _direct_det(gamma: MomentSequence, n: int, k: int, ctx: ToleranceContext) -> Scalar:
    mat = block(gamma, n, k)
    if ctx.is_exact:
        return det_bareiss(mat)
    return float(np.linalg.det(mat.to_numpy())) if k > 0 else float(mat.entry(0, 0))


def det_sequence(
    gamma: MomentSequence, k: int, ctx: ToleranceContext = EXACT
) -> DetTable:
    """Determinants of every feasible order-k block.

    Built bottom-up through the two-order condensation identity

        d_k(n) * d_{k-2}(n+2) = d_{k-1}(n) * d_{k-1}(n+2) - d_{k-1}(n+1)^2,

    with the order-(-1) table identically 1 and the order-0 table equal to
    gamma itself.  Entries whose divisor d_{k-2}(n+2) is zero (exact) or
    inside the tolerance band (float) fall back to a direct determinant.
    """
    if k < 0:
        raise PreconditionError("determinant table order must be >= 0")
    horizon = gamma.horizon
    if horizon < 2 * k:
        raise InsufficientMomentsError(2 * k, horizon)
    minus_one = [1] * (horizon + 3)
    zero = list(gamma.values)
    if k == 0:
        return DetTable(
            k=0,
            horizon=horizon,
            dets=tuple(zero),
            methods=tuple("direct" for _ in zero),
        )
    prev2: list[Scalar] = minus_one
    prev1: list[Scalar] = zero
    table: list[Scalar] = []
    methods: list[str] = []
    for order in range(1, k + 1):
        table = []
        methods = []
        for n in range(horizon - 2 * order + 1):
            divisor = prev2[n + 2]
            if ctx.is_exact:
                degenerate = divisor == 0
            else:
                scale = (
                    hadamard_bound(block(gamma, n + 2, order - 2))
                    if order >= 2
                    else abs(float(divisor))
                )
                degenerate = ctx.is_zero(divisor, scale)
            if degenerate:
                table.append(_direct_det(gamma, n, order, ctx))
                methods.append("direct")
            else:
                num = prev1[n] * prev1[n + 2] - prev1[n + 1] * prev1[n + 1]
                table.append(num / divisor)
                methods.append("condensation")
        prev2, prev1 = prev1, table
    return DetTable(k=k, horizon=horizon, dets=tuple(table), methods=tuple(methods))


def det_is_zero(
    gamma: MomentSequence, n: int, k: int, value: Scalar, ctx: ToleranceContext
) -> bool:
    """Zero test for a block determinant, scaled by the Hadamard bound of the
    block in float mode."""
    if ctx.is_exact:
        return value == 0
    return ctx.is_zero(value, hadamard_bound(block(gamma, n, k)))


def propagation_report(
    gamma: MomentSequence, k: int, ctx: ToleranceContext = EXACT
) -> PropagationReport:
    """For a k-positive sequence, scan the order-(k-1) determinants.

    One vanishing determinant at any anchor forces vanishing at every anchor
    n >= 1; the anchor-0 determinant is exempt and its nonzero value is
    reported, not flagged (flat shifts with a free leading weight realize
    it).  conclusion_verified is None when no determinant vanishes.
    """
    if k < 1:
        raise PreconditionError("propagation check needs k >= 1")
    verdict = is_k_positive(gamma, k, ctx)
    if not verdict.holds:
        raise PreconditionError(
            f"sequence is not {k}-positive on the horizon; "
            f"first failure at block {verdict.first_failure}"
        )
    table = det_sequence(gamma, k - 1, ctx)
    zero = [
        det_is_zero(gamma, n, k - 1, table.dets[n], ctx) for n in table.anchors()
    ]
    vanishing_found = any(zero)
    first_zero = zero.index(True) if vanishing_found else None
    conclusion: Optional[bool] = None
    exception = False
    if vanishing_found:
        conclusion = all(zero[1:])
        exception = bool(conclusion) and not zero[0]
    return PropagationReport(
        k=k,
        table=table,
        vanishing_found=vanishing_found,
        first_zero_anchor=first_zero,
        conclusion_verified=conclusion,
        anchor_zero_allowed_nonzero=exception,
    )
