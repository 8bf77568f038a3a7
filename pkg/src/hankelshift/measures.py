"""Moment-side layer: moments of finite atomic measures, detection of
linear moment recursions, the finite-mass (vanishing-determinant) test,
and recovery of atoms and densities from a detected recursion.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .hankel import (
    BlockIndex,
    MomentSequence,
    block,
    det_is_zero,
    det_sequence,
)
from .numkit import (
    EXACT,
    FLOAT,
    HankelshiftError,
    InternalConsistencyError,
    PreconditionError,
    Scalar,
    ToleranceContext,
    is_psd,
    solve_linear_exact,
    solve_vandermonde,
)
from .shifts import WeightSequence, weights_to_moments

__all__ = [
    "AtomicMeasure",
    "Recursion",
    "FiniteMassReport",
    "NotAtomicError",
    "NotStieltjesError",
    "moments_of",
    "detect_recursion",
    "is_finite_mass",
    "recover_atoms",
    "measure_represents_weights",
]


class NotAtomicError(HankelshiftError):
    """The given recursion does not describe a finite positive atomic measure
    on the half line (complex, negative or repeated characteristic roots, or
    nonpositive densities).  A verdict about the input, not a usage error."""


class NotStieltjesError(PreconditionError):
    """Input failed the double Hankel positivity screen, so it is not the
    moment sequence of a positive measure on the half line."""


@dataclass(frozen=True)
class AtomicMeasure:
    """mu = sum_j densities[j] * delta_{atoms[j]}, atoms strictly increasing
    and nonnegative, densities strictly positive."""

    atoms: tuple[Scalar, ...]
    densities: tuple[Scalar, ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("an atomic measure needs at least one atom")
        if len(self.atoms) != len(self.densities):
            raise ValueError("atoms and densities must have equal length")
        if self.atoms[0] < 0:
            raise ValueError("atoms must be nonnegative")
        for i in range(len(self.atoms) - 1):
            if not self.atoms[i] < self.atoms[i + 1]:
                raise ValueError("atoms must be strictly increasing")
        for rho in self.densities:
            if not rho > 0:
                raise ValueError("densities must be strictly positive")

    @property
    def mass(self) -> Scalar:
        return sum(self.densities)


@dataclass(frozen=True)
class Recursion:
    """gamma_{p+order} = coeffs[order-1]*gamma_{p+order-1} + ... +
    coeffs[0]*gamma_p for every p >= valid_from on the horizon."""

    order: int
    coeffs: tuple[Scalar, ...]
    valid_from: int = 0

    def __post_init__(self) -> None:
        if self.order < 1 or len(self.coeffs) != self.order:
            raise ValueError("recursion needs exactly `order` coefficients")

    def holds_on(self, gamma: MomentSequence, ctx: ToleranceContext = EXACT) -> bool:
        r = self.order
        scale = gamma.max_abs()
        for p in range(self.valid_from, len(gamma) - r):
            predicted = sum(self.coeffs[i] * gamma[p + i] for i in range(r))
            if not ctx.is_zero(gamma[p + r] - predicted, scale):
                return False
        return True


@dataclass(frozen=True)
class FiniteMassReport:
    finite: bool
    witness: Optional[BlockIndex] = None


def moments_of(mu: AtomicMeasure, horizon: int) -> MomentSequence:
    """gamma_n = sum_j rho_j * x_j^n for n = 0..horizon."""
    if horizon < 0:
        raise PreconditionError("horizon must be >= 0")
    exact = not any(
        isinstance(v, float) for v in list(mu.atoms) + list(mu.densities)
    )
    if exact:
        atoms = [Fraction(x) for x in mu.atoms]
        dens = [Fraction(r) for r in mu.densities]
    else:
        atoms = [float(x) for x in mu.atoms]
        dens = [float(r) for r in mu.densities]
    values: list[Scalar] = []
    powers = list(dens)
    for n in range(horizon + 1):
        values.append(sum(powers))
        powers = [p * x for p, x in zip(powers, atoms)]
    return MomentSequence(tuple(values))


def detect_recursion(
    gamma: MomentSequence, max_order: int, ctx: ToleranceContext = EXACT
) -> Optional[Recursion]:
    """Minimal-order linear recursion fitting every feasible index, or None.

    Orders are capped at horizon//2 so the fitted system always has more
    equations than unknowns.  Exact mode demands an exact fit; float mode
    accepts a least-squares fit whose residual is within rel_eps of the
    sequence scale.
    """
    if max_order < 1:
        return None
    cap = min(max_order, gamma.horizon // 2)
    n = len(gamma)
    for r in range(1, cap + 1):
        rows = [[gamma[p + i] for i in range(r)] for p in range(n - r)]
        rhs = [gamma[p + r] for p in range(n - r)]
        if ctx.is_exact:
            sol = solve_linear_exact(rows, rhs)
            if sol is not None:
                return Recursion(order=r, coeffs=tuple(sol), valid_from=0)
        else:
            a = np.array([[float(x) for x in row] for row in rows], dtype=float)
            b = np.array([float(v) for v in rhs], dtype=float)
            x, *_ = np.linalg.lstsq(a, b, rcond=None)
            residual = float(np.max(np.abs(a @ x - b)))
            if residual <= ctx.rel_eps * gamma.max_abs():
                return Recursion(
                    order=r, coeffs=tuple(float(v) for v in x), valid_from=0
                )
    return None


def _stieltjes_screen(gamma: MomentSequence, ctx: ToleranceContext) -> None:
    # Every feasible block of (gamma_{i+j}) is a principal submatrix of the
    # maximal even-anchor block, and every (gamma_{i+j+1}) block of the
    # maximal odd-anchor one, so two PSD checks cover the whole family.
    n = gamma.horizon
    even = block(gamma, 0, n // 2)
    if not is_psd(even, ctx):
        raise NotStieltjesError(
            "moment blocks anchored at even indices are not all PSD; "
            "not a moment sequence of a positive measure"
        )
    if n >= 1:
        odd = block(gamma, 1, (n - 1) // 2)
        if not is_psd(odd, ctx):
            raise NotStieltjesError(
                "shifted moment blocks (anchored at odd indices) are not all "
                "PSD; no representing positive measure lives on the half line"
            )


def is_finite_mass(
    gamma: MomentSequence, ctx: ToleranceContext = EXACT
) -> FiniteMassReport:
    """Finite atomic character: some feasible block determinant vanishes.

    Requires the double Hankel positivity screen to pass first; scans
    (order, anchor) lexicographically and reports the first vanishing
    determinant as the witness.
    """
    _stieltjes_screen(gamma, ctx)
    n = gamma.horizon
    for k in range(0, n // 2 + 1):
        table = det_sequence(gamma, k, ctx)
        for p in table.anchors():
            if det_is_zero(gamma, p, k, table.dets[p], ctx):
                return FiniteMassReport(finite=True, witness=BlockIndex(p, k))
    return FiniteMassReport(finite=False, witness=None)


# Polynomials below are coefficient lists in descending degree, exact.


def _poly_eval(poly: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in poly:
        acc = acc * x + c
    return acc


def _poly_deriv(poly: Sequence[Fraction]) -> list[Fraction]:
    d = len(poly) - 1
    return [c * (d - i) for i, c in enumerate(poly[:-1])]


def _poly_divmod_linear(poly: Sequence[Fraction], root: Fraction) -> list[Fraction]:
    # poly / (t - root), exact when root is a root.
    out: list[Fraction] = []
    acc = Fraction(0)
    for c in poly[:-1]:
        acc = acc * root + c
        out.append(acc)
    return out


def _poly_mod(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    # Leading-aligned long division remainder; b must have a nonzero lead.
    rem = list(a)
    db = len(b) - 1
    while len(rem) - 1 >= db:
        if rem[0] == 0:
            rem.pop(0)
            continue
        factor = rem[0] / b[0]
        for i in range(len(b)):
            rem[i] -= factor * b[i]
        rem.pop(0)
    while rem and rem[0] == 0:
        rem.pop(0)
    return rem


def _has_repeated_root(poly: list[Fraction]) -> bool:
    # Nontrivial gcd with the derivative signals a repeated root.
    a, b = poly, _poly_deriv(poly)
    while b:
        a, b = b, _poly_mod(a, b)
    return len(a) - 1 >= 1


def _characteristic(rec: Recursion) -> list[Fraction]:
    # h(t) = t^r - a_{r-1} t^{r-1} - ... - a_0
    return [Fraction(1)] + [-Fraction(a) for a in reversed(rec.coeffs)]


def _float_roots(poly: Sequence[Fraction]) -> list[complex]:
    return list(np.roots([float(c) for c in poly]))


def _extract_rational_roots(
    poly: list[Fraction],
) -> tuple[list[Fraction], list[Fraction]]:
    """Deflate all rational roots recoverable from float estimates.

    Each candidate is verified exactly before deflation, so the returned
    roots are certain; the leftover factor has no easily representable
    rational root.
    """
    roots: list[Fraction] = []
    remaining = list(poly)
    progress = True
    while progress and len(remaining) - 1 >= 1:
        progress = False
        for z in _float_roots(remaining):
            if abs(z.imag) > 1e-6 * (1.0 + abs(z)):
                continue
            for den in (1, 100, 10**4, 10**6, 10**9, 10**12):
                cand = Fraction(z.real).limit_denominator(den)
                if _poly_eval(remaining, cand) == 0:
                    roots.append(cand)
                    remaining = _poly_divmod_linear(remaining, cand)
                    progress = True
                    break
            if progress:
                break
    return roots, remaining


def _certified_enclosures(
    poly: list[Fraction],
) -> Optional[list[tuple[Fraction, Fraction]]]:
    """Disjoint rational intervals with an exact sign change of poly at the
    endpoints, one per float root estimate; None when certification fails
    (complex or tightly clustered roots)."""
    degree = len(poly) - 1
    estimates = sorted(
        {round(z.real, 12) for z in _float_roots(poly) if abs(z.imag) < 1e-9}
    )
    if len(estimates) != degree:
        return None
    enclosures: list[tuple[Fraction, Fraction]] = []
    for est in estimates:
        center = Fraction(est).limit_denominator(10**12)
        width = Fraction(1, 10**9) * max(1, abs(center))
        found = None
        for _ in range(60):
            lo, hi = center - width, center + width
            if _poly_eval(poly, lo) * _poly_eval(poly, hi) < 0:
                found = (lo, hi)
                break
            width *= 2
        if found is None:
            return None
        enclosures.append(found)
    for (alo, ahi), (blo, bhi) in zip(enclosures, enclosures[1:]):
        if not ahi < blo:
            return None
    return enclosures


def _shrink_enclosure(
    poly: list[Fraction], lo: Fraction, hi: Fraction, passes: int = 60
) -> tuple[Fraction, Fraction]:
    flo = _poly_eval(poly, lo)
    for _ in range(passes):
        mid = (lo + hi) / 2
        fmid = _poly_eval(poly, mid)
        if fmid == 0:
            return mid, mid
        if (flo < 0) == (fmid < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return lo, hi


def recover_atoms(
    rec: Recursion, gamma: MomentSequence, ctx: ToleranceContext = EXACT
) -> AtomicMeasure:
    """Atoms are the roots of the recursion's characteristic polynomial,
    densities solve the Vandermonde system against gamma_0..gamma_{r-1}.

    All roots must be real, distinct and nonnegative and all densities
    strictly positive, else the input is not a finite positive atomic
    measure on the half line.  The recovered measure is re-verified against
    every moment on the horizon before it is returned (exactly when the
    atoms are rational, within tolerance otherwise).
    """
    if rec.valid_from != 0:
        raise PreconditionError("recursion must be valid from index 0")
    if not rec.holds_on(gamma, ctx):
        raise PreconditionError("recursion does not fit the sequence it came with")
    r = rec.order
    if gamma.horizon < r - 1:
        raise PreconditionError("horizon too short to solve for densities")
    poly = _characteristic(rec)

    rational_roots, remaining = _extract_rational_roots(poly)
    dup = next(
        (c for i, c in enumerate(rational_roots) if c in rational_roots[:i]), None
    )
    if dup is not None:
        raise NotAtomicError(f"repeated characteristic root {dup}")
    for c in rational_roots:
        if c < 0:
            raise NotAtomicError(f"negative characteristic root {c}")

    atoms: list[Scalar] = list(rational_roots)
    exact_atoms = True
    if len(remaining) - 1 >= 1:
        if _has_repeated_root(remaining):
            raise NotAtomicError(
                "repeated characteristic root (nontrivial gcd with derivative)"
            )
        enclosures = _certified_enclosures(remaining)
        if enclosures is None:
            raise NotAtomicError(
                "characteristic roots could not be certified real and "
                f"distinct; estimates {sorted(_float_roots(remaining), key=lambda z: z.real)}"
            )
        for lo, hi in enclosures:
            lo, hi = _shrink_enclosure(remaining, lo, hi)
            if hi < 0:
                raise NotAtomicError(
                    f"negative characteristic root in ({lo}, {hi})"
                )
            if lo < 0:
                raise NotAtomicError(
                    f"characteristic root in ({lo}, {hi}) could not be "
                    "certified nonnegative"
                )
            for c in rational_roots:
                if lo <= c <= hi:
                    raise InternalConsistencyError(
                        "enclosure overlaps an already extracted rational root"
                    )
            atoms.append(float((lo + hi) / 2))
        exact_atoms = False

    if len(atoms) != r:
        raise InternalConsistencyError(
            f"expected {r} characteristic roots, assembled {len(atoms)}"
        )
    atoms.sort(key=float)

    vctx = ctx if (ctx.is_exact and exact_atoms) else FLOAT
    densities = solve_vandermonde(atoms, [gamma[i] for i in range(r)], vctx)
    for x, rho in zip(atoms, densities):
        if not rho > 0:
            raise NotAtomicError(f"density {rho} at atom {x} is not positive")
    mu = AtomicMeasure(atoms=tuple(atoms), densities=tuple(densities))

    check = moments_of(mu, gamma.horizon)
    scale = gamma.max_abs()
    for n in range(len(gamma)):
        diff = check[n] - gamma[n]
        ok = diff == 0 if (ctx.is_exact and exact_atoms) else FLOAT.is_zero(
            float(diff), scale
        )
        if not ok:
            raise InternalConsistencyError(
                f"recovered measure mismatches gamma_{n}: {check[n]} != {gamma[n]}"
            )
    return mu


def measure_represents_weights(
    alpha: WeightSequence, mu: AtomicMeasure, ctx: ToleranceContext = EXACT
) -> bool:
    """True iff the measure's moments reproduce the shift's moments on the
    whole prefix and the largest atom respects the squared-weight norm
    surrogate (support bound)."""
    gamma = weights_to_moments(alpha)
    mg = moments_of(mu, gamma.horizon)
    scale = gamma.max_abs()
    for n in range(len(gamma)):
        if not ctx.is_zero(mg[n] - gamma[n], scale):
            return False
    sup = alpha.sq_sup
    return bool(ctx.nonneg(sup - max(mu.atoms), float(sup)))
