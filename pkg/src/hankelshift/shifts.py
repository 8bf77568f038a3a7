"""Weighted-shift layer: weight/moment conversion, the k-hyponormality
ladder, and the flatness and determinant-propagation consequences.

Weights are stored and exchanged as squared weights: every formula below
consumes moment ratios, which are squares, so the exact pipeline stays
closed over the rationals.  Plain weights appear only in float display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .hankel import (
    BlockIndex,
    MomentSequence,
    PropagationReport,
    is_k_positive,
    propagation_report,
)
from .numkit import (
    EXACT,
    InsufficientMomentsError,
    PreconditionError,
    Scalar,
    ToleranceContext,
)

__all__ = [
    "WeightSequence",
    "HyponormalityVerdict",
    "FlatnessReport",
    "ShiftPropagationReport",
    "weights_to_moments",
    "moments_to_weights",
    "is_hyponormal",
    "is_k_hyponormal",
    "flatness_check",
    "propagation_for_shift",
]


@dataclass(frozen=True)
class WeightSequence:
    """Squared weights sq[n] = alpha_n^2 > 0 for n = 0..N-1."""

    sq: tuple[Scalar, ...]

    def __post_init__(self) -> None:
        if not self.sq:
            raise ValueError("a weight sequence needs at least one weight")
        for n, v in enumerate(self.sq):
            if not v > 0:
                raise ValueError(f"squared weight at index {n} is not positive")

    @classmethod
    def from_squared(cls, values: Iterable[Scalar]) -> "WeightSequence":
        return cls(tuple(values))

    @classmethod
    def from_alphas(cls, alphas: Iterable[float]) -> "WeightSequence":
        return cls(tuple(float(a) ** 2 for a in alphas))

    def __len__(self) -> int:
        return len(self.sq)

    def alphas(self) -> tuple[float, ...]:
        """Float display form; exact computations never take square roots."""
        return tuple(math.sqrt(float(v)) for v in self.sq)

    @property
    def sq_sup(self) -> Scalar:
        """Max squared weight over the prefix: the norm surrogate for the
        shift the prefix determines."""
        return max(self.sq)


@dataclass(frozen=True)
class HyponormalityVerdict:
    k: int
    holds: bool
    horizon: int
    first_failure: Optional[BlockIndex] = None
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class FlatnessReport:
    """Consequence of an equal adjacent weight pair under 2-hyponormality:
    the weights are constant from index 1 on; alpha_0 may differ."""

    k: int
    flat_pair_found: bool
    pair_index: Optional[int]
    propagation_verified: Optional[bool]
    alpha0_exception: bool


@dataclass(frozen=True)
class ShiftPropagationReport:
    """Shift-side wrapper of the moment-side propagation check, plus the
    finite shadow of the subnormality consequence: PSD blocks at every
    order the horizon supports."""

    k: int
    p: int
    base: PropagationReport
    orders_checked: tuple[int, ...]
    orders_all_hold: bool
    flags: tuple[str, ...] = ()


def weights_to_moments(alpha: WeightSequence) -> MomentSequence:
    """gamma_0 = 1, gamma_{n+1} = alpha_n^2 * gamma_n."""
    values: list[Scalar] = [1]
    acc: Scalar = Fraction(1) if not any(isinstance(v, float) for v in alpha.sq) else 1.0
    for v in alpha.sq:
        acc = acc * v
        values.append(acc)
    return MomentSequence(tuple(values))


def moments_to_weights(gamma: MomentSequence) -> WeightSequence:
    """Squared weights alpha_n^2 = gamma_{n+1}/gamma_n; requires strictly
    positive moments."""
    if len(gamma) < 2:
        raise PreconditionError("need at least gamma_0 and gamma_1 to form a weight")
    for n, v in enumerate(gamma.values):
        if v == 0:
            raise PreconditionError(
                f"gamma_{n} = 0: a vanishing moment collapses every later moment "
                "to zero, so no positive weight sequence generates this prefix"
            )
    if any(isinstance(v, float) for v in gamma.values):
        sq = tuple(float(gamma[n + 1]) / float(gamma[n]) for n in range(len(gamma) - 1))
    else:
        sq = tuple(
            Fraction(gamma[n + 1]) / Fraction(gamma[n]) for n in range(len(gamma) - 1)
        )
    return WeightSequence(sq)


def is_hyponormal(alpha: WeightSequence, ctx: ToleranceContext = EXACT) -> bool:
    """Nondecreasing weights; squared weights order the same way."""
    scale = max(abs(float(v)) for v in alpha.sq)
    return all(
        ctx.nonneg(alpha.sq[n + 1] - alpha.sq[n], scale) for n in range(len(alpha) - 1)
    )


def is_k_hyponormal(
    alpha: WeightSequence, k: int, ctx: ToleranceContext = EXACT
) -> HyponormalityVerdict:
    """k-hyponormality of the shift equals k-positivity of its moments."""
    gamma = weights_to_moments(alpha)
    if gamma.horizon < 2 * k:
        raise InsufficientMomentsError(2 * k, gamma.horizon)
    verdict = is_k_positive(gamma, k, ctx)
    return HyponormalityVerdict(
        k=k,
        holds=verdict.holds,
        horizon=verdict.horizon,
        first_failure=verdict.first_failure,
        flags=verdict.flags,
    )


def _weights_equal(a: Scalar, b: Scalar, scale: float, ctx: ToleranceContext) -> bool:
    return ctx.is_zero(a - b, scale)


def flatness_check(
    alpha: WeightSequence, k: int, ctx: ToleranceContext = EXACT
) -> FlatnessReport:
    """Under k-hyponormality (k >= 2), one equal adjacent pair forces the
    weights to be constant from index 1 on.  Reports the first pair found,
    whether the constancy holds on the data, and whether alpha_0 sits
    outside the constant tail."""
    if k < 2:
        raise PreconditionError("flatness needs k >= 2")
    verdict = is_k_hyponormal(alpha, k, ctx)
    if not verdict.holds:
        raise PreconditionError(
            f"shift is not {k}-hyponormal on the horizon; "
            f"first failure at block {verdict.first_failure}"
        )
    scale = max(abs(float(v)) for v in alpha.sq)
    pair = next(
        (
            n
            for n in range(len(alpha) - 1)
            if _weights_equal(alpha.sq[n], alpha.sq[n + 1], scale, ctx)
        ),
        None,
    )
    if pair is None:
        return FlatnessReport(
            k=k,
            flat_pair_found=False,
            pair_index=None,
            propagation_verified=None,
            alpha0_exception=False,
        )
    level = alpha.sq[pair]
    verified = all(
        _weights_equal(alpha.sq[n], level, scale, ctx) for n in range(1, len(alpha))
    )
    exception = len(alpha) > 1 and not _weights_equal(alpha.sq[0], level, scale, ctx)
    return FlatnessReport(
        k=k,
        flat_pair_found=True,
        pair_index=pair,
        propagation_verified=verified,
        alpha0_exception=exception,
    )


def propagation_for_shift(
    alpha: WeightSequence, k: int, p: int, ctx: ToleranceContext = EXACT
) -> ShiftPropagationReport:
    """Vanishing order-p determinant propagation for a k-hyponormal shift.

    Requires p < k: the certified positivity order must exceed the order of
    the determinants whose zeros propagate.  Delegates to the moment-side
    check at order p (k-hyponormality implies (p+1)-positivity on the full
    horizon, every small block being a principal submatrix of a feasible
    large one).  Also certifies PSD blocks at every order the horizon
    supports, the finite shadow of the subnormality consequence.
    """
    if p < 1:
        raise PreconditionError("propagation order p must be >= 1")
    if p >= k:
        raise PreconditionError(
            f"propagation order p={p} must be strictly below the certified "
            f"hyponormality order k={k}"
        )
    verdict = is_k_hyponormal(alpha, k, ctx)
    if not verdict.holds:
        raise PreconditionError(
            f"shift is not {k}-hyponormal on the horizon; "
            f"first failure at block {verdict.first_failure}"
        )
    gamma = weights_to_moments(alpha)
    base = propagation_report(gamma, p + 1, ctx)
    orders = tuple(range(p, gamma.horizon // 2 + 1))
    all_hold = True
    flags: list[str] = []
    for order in orders:
        if not is_k_positive(gamma, order, ctx).holds:
            all_hold = False
            flags.append(f"order {order} blocks not all PSD on horizon")
            break
    return ShiftPropagationReport(
        k=k,
        p=p,
        base=base,
        orders_checked=orders,
        orders_all_hold=all_hold,
        flags=tuple(flags),
    )
