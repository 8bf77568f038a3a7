"""Kernel tests: exact determinants, characteristic polynomials, PSD
verdicts, solvers, intervals, formatting."""

from __future__ import annotations

import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from hankelshift import (
    EXACT,
    FLOAT,
    Interval,
    SymMatrix,
    ToleranceContext,
    char_poly,
    det_bareiss,
    fmt_scalar,
    hadamard_bound,
    is_pd,
    is_psd,
    psd_with_margin,
    solve_linear_exact,
    solve_quadratic,
    solve_vandermonde,
)


def hilbert(n: int) -> SymMatrix:
    return SymMatrix.from_rows(
        [[F(1, i + j + 1) for j in range(n)] for i in range(n)]
    )


class TestDetBareiss:
    def test_hilbert3_exact(self):
        # oracle: 3x3 Hilbert determinant
        assert det_bareiss(hilbert(3)) == F(1, 2160)

    def test_order_zero(self):
        assert det_bareiss(SymMatrix.from_rows([[F(7, 3)]])) == F(7, 3)

    def test_empty_is_one(self):
        assert det_bareiss(SymMatrix.from_rows([])) == 1

    def test_matches_numpy_on_random_rationals(self):
        rng = random.Random(20240801)
        for _ in range(40):
            n = rng.randint(1, 5)
            rows = [[F(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(n)] for _ in range(n)]
            for i in range(n):
                for j in range(i):
                    rows[i][j] = rows[j][i]
            m = SymMatrix.from_rows(rows)
            exact = det_bareiss(m)
            approx = np.linalg.det(m.to_numpy())
            assert math.isclose(float(exact), approx, rel_tol=1e-9, abs_tol=1e-9)

    def test_singular(self):
        m = SymMatrix.from_rows([[F(1), F(2)], [F(2), F(4)]])
        assert det_bareiss(m) == 0

    def test_float_rows(self):
        m = SymMatrix.from_rows([[2.0, 1.0], [1.0, 2.0]])
        assert det_bareiss(m) == pytest.approx(3.0)


class TestCharPoly:
    def test_psd_example(self):
        # det(xI + M) for [[2,1],[1,2]] is x^2 + 4x + 3
        m = SymMatrix.from_rows([[F(2), F(1)], [F(1), F(2)]])
        assert char_poly(m) == (1, 4, 3)

    def test_indefinite_example(self):
        m = SymMatrix.from_rows([[F(1), F(2)], [F(2), F(1)]])
        assert char_poly(m) == (1, 2, -3)

    def test_leading_coefficient_is_one(self):
        rng = random.Random(7)
        for _ in range(20):
            n = rng.randint(1, 4)
            rows = [[F(rng.randint(-5, 5)) for _ in range(n)] for _ in range(n)]
            for i in range(n):
                for j in range(i):
                    rows[i][j] = rows[j][i]
            coeffs = char_poly(SymMatrix.from_rows(rows))
            assert coeffs[0] == 1
            assert len(coeffs) == n + 1

    def test_constant_term_is_det(self):
        m = hilbert(4)
        assert char_poly(m)[-1] == det_bareiss(m)


class TestPsd:
    def test_exact_psd_pd_marginal(self):
        pd = SymMatrix.from_rows([[F(2), F(1)], [F(1), F(2)]])
        marginal = SymMatrix.from_rows([[F(1), F(1)], [F(1), F(1)]])
        neg = SymMatrix.from_rows([[F(1), F(2)], [F(2), F(1)]])
        assert is_psd(pd, EXACT) and is_pd(pd, EXACT)
        assert is_psd(marginal, EXACT) and not is_pd(marginal, EXACT)
        assert not is_psd(neg, EXACT)

    def test_exact_marginal_margin(self):
        marginal = SymMatrix.from_rows([[F(1), F(1)], [F(1), F(1)]])
        ok, is_marginal = psd_with_margin(marginal, EXACT)
        assert ok and is_marginal

    def test_float_agrees_with_exact_away_from_singularity(self):
        rng = random.Random(99)
        for _ in range(30):
            n = rng.randint(1, 4)
            a = np.array([[rng.uniform(-1, 1) for _ in range(n)] for _ in range(n)])
            g = a @ a.T  # PSD by construction
            m = SymMatrix.from_rows(g.tolist())
            assert is_psd(m, FLOAT)

    def test_float_negative(self):
        m = SymMatrix.from_rows([[1.0, 2.0], [2.0, 1.0]])
        assert not is_psd(m, FLOAT)

    def test_float_marginal_flagged(self):
        m = SymMatrix.from_rows([[1.0, 1.0], [1.0, 1.0 + 1e-14]])
        ok, marginal = psd_with_margin(m, FLOAT)
        assert ok and marginal


class TestSolveQuadratic:
    def test_rational_roots_exact(self):
        out = solve_quadratic(F(2), F(-3), F(1))
        assert out.exact
        assert sorted(out.roots) == [F(1, 2), F(1)]
        assert out.discriminant == 1

    def test_irrational_roots_enclosed(self):
        out = solve_quadratic(F(1), F(0), F(-2))
        assert not out.exact
        assert out.discriminant == 8
        lo, hi = sorted(out.roots)
        assert lo == pytest.approx(-math.sqrt(2), abs=1e-12)
        assert hi == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_double_root(self):
        out = solve_quadratic(F(1), F(-2), F(1))
        assert out.exact and out.roots == (F(1),)
        assert out.discriminant == 0

    def test_negative_discriminant(self):
        out = solve_quadratic(F(1), F(0), F(1))
        assert out.roots == ()
        assert out.discriminant == -4

    def test_float_coefficients_stable(self):
        # large b: naive formula would cancel catastrophically
        out = solve_quadratic(1.0, -1e8, 1.0)
        small = min(out.roots)
        assert small == pytest.approx(1e-8, rel=1e-9)

    def test_rational_root_with_irrational_partner_is_impossible(self):
        # a quadratic with rational coefficients has either two rational
        # roots or none; any root equal to 1 must come back exact
        rng = random.Random(3)
        for _ in range(200):
            a = F(rng.randint(1, 9), rng.randint(1, 9))
            r = F(rng.randint(-9, 9), rng.randint(1, 9))
            b = -a * (r + 1)
            c = a * r
            out = solve_quadratic(a, b, c)  # roots r and 1
            assert out.exact
            assert F(1) in out.roots


class TestLinearSolvers:
    def test_solve_linear_exact(self):
        a = [[F(2), F(1)], [F(1), F(3)]]
        b = [F(5), F(10)]
        x = solve_linear_exact(a, b)
        assert x == (F(1), F(3))

    def test_solve_linear_exact_inconsistent(self):
        a = [[F(1), F(1)], [F(1), F(1)]]
        assert solve_linear_exact(a, [F(1), F(2)]) is None

    def test_solve_linear_exact_underdetermined(self):
        # free variables pinned at zero, solution still verified
        a = [[F(1), F(1)], [F(2), F(2)]]
        x = solve_linear_exact(a, [F(3), F(6)])
        assert x is not None
        assert x[0] + x[1] == F(3)

    def test_vandermonde_two_nodes(self):
        # densities 1/2, 1/2 at nodes 1 and 4 give first moments 1, 5/2
        dens = solve_vandermonde((F(1), F(4)), (F(1), F(5, 2)), EXACT)
        assert dens == (F(1, 2), F(1, 2))

    def test_vandermonde_float(self):
        dens = solve_vandermonde((0.5, 2.5), (1.0, 1.5), FLOAT)
        assert sum(dens) == pytest.approx(1.0)
        assert 0.5 * dens[0] + 2.5 * dens[1] == pytest.approx(1.5)


class TestIntervalAndMisc:
    def test_interval_ops(self):
        a = Interval(F(0), F(2))
        b = Interval(F(1), F(3))
        c = a.intersect(b)
        assert (c.lo, c.hi) == (F(1), F(2))
        assert c.contains(F(3, 2)) and not c.contains(F(5, 2))
        assert c.width() == 1

    def test_interval_empty(self):
        a = Interval(F(0), F(1))
        b = Interval(F(2), F(3))
        assert a.intersect(b).empty
        assert not Interval.empty_interval().contains(F(1))

    def test_interval_rejects_inverted(self):
        with pytest.raises(ValueError):
            Interval(F(2), F(1))

    def test_hadamard_bound_dominates(self):
        rng = random.Random(11)
        for _ in range(25):
            n = rng.randint(1, 4)
            rows = [[F(rng.randint(-6, 6), rng.randint(1, 5)) for _ in range(n)] for _ in range(n)]
            for i in range(n):
                for j in range(i):
                    rows[i][j] = rows[j][i]
            m = SymMatrix.from_rows(rows)
            assert hadamard_bound(m) >= abs(float(det_bareiss(m))) - 1e-9

    def test_fmt_scalar(self):
        assert fmt_scalar(3) == "3"
        assert fmt_scalar(F(1, 3)) == "1/3"
        assert fmt_scalar(F(4, 2)) == "2"
        assert fmt_scalar(0.25) == "0.25"

    def test_tolerance_is_zero(self):
        ctx = ToleranceContext(mode="float", zero_eps=1e-12, rel_eps=1e-10)
        assert ctx.is_zero(5e-13)
        assert ctx.is_zero(5e-7, scale=1e4)
        assert not ctx.is_zero(1e-3)
        assert EXACT.is_zero(0) and not EXACT.is_zero(F(1, 10**30))

    def test_symmetry_enforced(self):
        with pytest.raises(ValueError):
            SymMatrix.from_rows([[F(1), F(2)], [F(3), F(4)]])
