import math

import numpy as np
import pytest
from scipy import integrate, special

from minorkern import orthopoly as op
from minorkern import scaling
from minorkern.scaling import (
    BULK,
    HARD_EDGE,
    SOFT_DRIFT,
    SOFT_FIXED,
    LimitQuery,
    airy_kernel,
    bead_kernel,
    bead_kernel_alt,
    convergence_report,
    extended_airy,
    hard_edge_kernel,
    limit_kernel,
    realized_offsets,
    scaled_finite_kernel,
)

GAUSS = op.EnsembleSpec(op.GAUSSIAN)
LAG0 = op.EnsembleSpec(op.LAGUERRE, a=0.0)


class TestAiryKernel:
    def test_diagonal_value(self):
        assert airy_kernel(0.0, 0.0) == pytest.approx(0.06698748377966, abs=1e-10)
        ai, aip = op.airy(0.0)
        assert airy_kernel(0.0, 0.0) == pytest.approx(aip**2, abs=1e-10)

    def test_symmetry(self):
        assert airy_kernel(1.0, 2.0) == pytest.approx(airy_kernel(2.0, 1.0), rel=1e-13)

    def test_ratio_vs_integral_forms(self):
        f = lambda u: special.airy(1.0 + u)[0] * special.airy(2.0 + u)[0]
        ref, _ = integrate.quad(f, 0, np.inf, epsabs=1e-14)
        assert airy_kernel(1.0, 2.0) == pytest.approx(ref, abs=1e-9)

    def test_near_diagonal_branch_consistency(self):
        a = airy_kernel(0.5, 0.5 + 9e-5)   # integral branch
        b = airy_kernel(0.5, 0.5 + 2e-4)   # ratio branch
        assert a == pytest.approx(b, abs=5e-5)

    def test_range_check(self):
        with pytest.raises(ValueError):
            airy_kernel(25.0, 0.0)


class TestExtendedAiry:
    def test_zero_offset_reduces_to_airy(self):
        for x, y in [(0.0, 0.0), (-1.0, 0.7), (1.3, 2.0)]:
            assert extended_airy(0.4, x, 0.4, y) == pytest.approx(airy_kernel(x, y), abs=1e-10)

    def test_symmetry_in_positions(self):
        assert extended_airy(0.0, 0.2, 1.0, 0.8) == pytest.approx(
            extended_airy(0.0, 0.8, 1.0, 0.2), rel=1e-10)

    def test_forward_value_dual_quadrature(self):
        got = extended_airy(0.0, 0.0, 1.0, 0.0)
        ref, _ = integrate.quad(lambda u: math.exp(-u) * special.airy(u)[0] ** 2, 0, 50)
        assert got == pytest.approx(ref, abs=1e-9)

    def test_backward_branch_finite(self):
        v = extended_airy(1.0, 0.3, 0.0, -0.2)
        assert math.isfinite(v) and v != 0.0

    def test_offset_range(self):
        with pytest.raises(ValueError):
            extended_airy(0.0, 0.0, 6.0, 0.0)


class TestBeadKernel:
    def test_equal_species_diagonal(self):
        assert bead_kernel(2, 0.7, 2, 0.7) == pytest.approx(1.0, rel=1e-12)

    def test_equal_species_sine(self):
        u = 0.37
        assert bead_kernel(0, 0.9, 0, 0.9 - u) == pytest.approx(
            math.sin(math.pi * u) / (math.pi * u), rel=1e-12)

    def test_adjacent_equal_positions_vanish(self):
        assert bead_kernel(0, 0.4, 1, 0.4) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("m", [1, 3, 6])
    def test_closed_form_vs_quadrature(self, m):
        u = 0.37
        f = lambda s: s**m * math.cos(math.pi * u * s - math.pi * m / 2)
        ref, _ = integrate.quad(f, 0, 1, epsabs=1e-14)
        assert bead_kernel(0, u, m, 0.0) == pytest.approx(ref, abs=1e-12)

    @pytest.mark.parametrize("m", [-2, -5])
    def test_negative_branch_vs_quadrature(self, m):
        u = 0.61
        f = lambda s: s ** float(m) * math.cos(math.pi * u * s - math.pi * m / 2)
        ref, _ = integrate.quad(f, 1, 3000, limit=3000)
        assert bead_kernel(0, u, m, 0.0) == pytest.approx(-ref, abs=5e-7)

    def test_large_offset_quadrature_path(self):
        v = bead_kernel(0, 0.3, 8, -0.2)
        f = lambda s: s**8 * np.cos(math.pi * 0.5 * s - math.pi * 4)
        ref, _ = integrate.quad(f, 0, 1)
        assert v == pytest.approx(ref, abs=1e-10)


class TestBeadAlt:
    def test_equal_species_equal_positions(self):
        assert bead_kernel_alt(1, 0.4, 1, 0.4) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("r", [2, 3])
    def test_determinant_equality(self, r):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(40):
            cs = rng.integers(-3, 4, r)
            xs = rng.uniform(-2.0, 2.0, r)
            m1 = np.array([[bead_kernel(int(cs[i]), xs[i], int(cs[j]), xs[j])
                            for j in range(r)] for i in range(r)])
            m2 = np.array([[bead_kernel_alt(int(cs[i]), xs[i], int(cs[j]), xs[j])
                            for j in range(r)] for i in range(r)])
            worst = max(worst, abs(np.linalg.det(m1) - np.linalg.det(m2)))
        assert worst < (1e-8 if r == 2 else 1e-7)


class TestHardEdge:
    def test_origin_value(self):
        assert hard_edge_kernel(0.0, 0, 0.0, 0, 0.0) == pytest.approx(0.25, rel=1e-12)

    def test_equal_species_christoffel_darboux(self):
        a, x, y = 0.0, 1.0, 4.0
        cd = (special.jv(a, math.sqrt(x)) * math.sqrt(y) * special.jvp(a, math.sqrt(y))
              - special.jv(a, math.sqrt(y)) * math.sqrt(x) * special.jvp(a, math.sqrt(x))) / (2 * (x - y))
        assert hard_edge_kernel(a, 0, x, 0, y) == pytest.approx(cd, abs=1e-8)

    def test_symmetry_equal_species(self):
        assert hard_edge_kernel(0.5, 1, 2.0, 1, 5.0) == pytest.approx(
            hard_edge_kernel(0.5, 1, 5.0, 1, 2.0), rel=1e-10)

    def test_negative_branch_vs_oscillatory_oracle(self):
        import mpmath

        a, x, y = 0.0, 2.0, 3.0
        period = 2 * math.pi / (math.sqrt(x) + math.sqrt(y))
        f = lambda v: 2 * mpmath.besselj(1, v * math.sqrt(x)) * mpmath.besselj(0, v * math.sqrt(y))
        ref = float(mpmath.quadosc(f, [1, mpmath.inf], period=period))
        assert hard_edge_kernel(a, 1, x, 0, y) == pytest.approx(-0.25 * ref, abs=1e-7)

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            hard_edge_kernel(-1.5, 0, 1.0, 0, 1.0)
        with pytest.raises(ValueError):
            hard_edge_kernel(0.0, -1, 1.0, 0, 1.0)
        with pytest.raises(ValueError):
            hard_edge_kernel(0.0, 0, -1.0, 0, 1.0)


class TestScaledFinite:
    def test_soft_edge_gaussian_sequence(self):
        lim = airy_kernel(0.0, 0.0)
        errs = []
        for N in (25, 50, 100):
            q = LimitQuery(SOFT_FIXED, GAUSS, N, (0,), (0.0,))
            errs.append(abs(scaled_finite_kernel(q, 0, 0) - lim))
        assert errs[0] > errs[1] > errs[2]

    def test_bulk_density_near_one(self):
        q = LimitQuery(BULK, GAUSS, 100, (0,), (0.0,))
        assert scaled_finite_kernel(q, 0, 0) == pytest.approx(1.0, abs=0.01)

    def test_hard_edge_diagonal_exact_quarter(self):
        q = LimitQuery(HARD_EDGE, LAG0, 60, (0,), (0.0,))
        assert scaled_finite_kernel(q, 0, 0) == pytest.approx(0.25, abs=1e-10)

    def test_out_of_model_species(self):
        with pytest.raises(ValueError):
            q = LimitQuery(SOFT_FIXED, GAUSS, 20, (25,), (0.0,))
            scaled_finite_kernel(q, 0, 0)

    def test_regime_validation(self):
        with pytest.raises(ValueError):
            LimitQuery("weird", GAUSS, 50, (0,), (0.0,))
        with pytest.raises(ValueError):
            LimitQuery(HARD_EDGE, GAUSS, 50, (0,), (0.0,))
        with pytest.raises(ValueError):
            LimitQuery(BULK, LAG0, 50, (0,), (0.0,))

    def test_realized_offsets_roundtrip(self):
        q = LimitQuery(SOFT_DRIFT, LAG0, 200, (0.0, 0.5), (0.0, 0.3))
        rc = realized_offsets(q)
        assert rc[0] == 0.0
        assert rc[1] == pytest.approx(0.5, abs=0.01)


class TestConvergenceReport:
    def test_soft_edge_report(self):
        rep = convergence_report(SOFT_FIXED, GAUSS, (25, 50, 100), (0,), (0.0,))
        assert rep["converged"]
        assert rep["errors"][0] > rep["errors"][-1]
        assert rep["order_estimate"] is not None

    def test_requires_three_sizes(self):
        with pytest.raises(ValueError):
            convergence_report(SOFT_FIXED, GAUSS, (50, 100), (0,), (0.0,))

    def test_flags_non_convergence(self, monkeypatch):
        # bug-injection fixture: a constant offset never converges
        orig = scaling.scaled_finite_kernel

        def broken(q, j, k):
            return orig(q, j, k) + 0.5

        monkeypatch.setattr(scaling, "scaled_finite_kernel", broken)
        rep = convergence_report(SOFT_FIXED, GAUSS, (25, 50, 100), (0,), (0.0,))
        assert not rep["converged"]

    def test_json_and_csv_writers(self):
        rep = convergence_report(SOFT_FIXED, GAUSS, (25, 50, 100), (0,), (0.0,))
        text = scaling.report_to_json(rep)
        assert '"regime"' in text
        csv = scaling.report_to_csv(rep)
        assert csv.splitlines()[0].startswith("N,max_error")
        assert len(csv.strip().splitlines()) == 4
