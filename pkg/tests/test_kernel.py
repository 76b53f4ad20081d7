import math

import numpy as np
import pytest
from scipy import integrate

from minorkern import orthopoly as op
from minorkern.kernel import (
    ProcessSpec,
    SpeciesPoint,
    correlation,
    density,
    kernel_F,
    kernel_K,
    phi_cap,
    phi_conv,
    psi,
)
import minorkern.kernel as kernel_mod
from oracles import f_entry_direct, f_entry_series

GAUSS = op.EnsembleSpec(op.GAUSSIAN)
LAG = op.EnsembleSpec(op.LAGUERRE, a=1.0)
JAC = op.EnsembleSpec(op.JACOBI, a=0.5, b=1.0)
ALL = [GAUSS, LAG, JAC]
IDS = ["gauss", "lag", "jac"]


class TestPhiConv:
    def test_vanishes_for_reversed_levels(self):
        assert phi_conv(3, 2, 0.0, 1.0) == 0.0
        assert phi_conv(3, 3, 0.0, 1.0) == 0.0

    def test_adjacent_is_indicator(self):
        assert phi_conv(1, 2, 0.0, 3.0) == 1.0
        assert phi_conv(1, 2, 3.0, 0.0) == 0.0

    def test_two_step(self):
        assert phi_conv(1, 3, 0.0, 2.0) == pytest.approx(2.0, rel=1e-14)

    @pytest.mark.parametrize("n1,n2,n3", [(1, 2, 3), (1, 3, 5), (2, 4, 6), (1, 2, 6)])
    def test_semigroup(self, n1, n2, n3):
        x, y = -0.3, 1.7
        val, _ = integrate.quad(lambda z: phi_conv(n1, n2, x, z) * phi_conv(n2, n3, z, y), x, y)
        assert val == pytest.approx(phi_conv(n1, n3, x, y), abs=1e-10)


def psi_defining(proc, n, m, x):
    """Convolution definition of Psi, integrated directly against the base
    weight and polynomial (no Rodrigues shortcuts)."""
    N = proc.N
    spec = proc.ensemble
    base = op.ShiftedFamily(spec, 0)
    deg = N - n + m
    lo, hi = spec.support()
    lo = max(lo, x)
    if spec.kind == op.GAUSSIAN:
        lo, hi = max(x, -12.0), 12.0
    elif spec.kind == op.LAGUERRE:
        hi = 90.0
    f = lambda y: op.eval_weight(base, y) * op.eval_poly(base, deg, y) * (y - x) ** (N - n - 1)
    v, _ = integrate.quad(f, lo, hi, limit=400)
    return v / math.factorial(N - n - 1)


class TestPsi:
    def test_gaussian_signs_cancel(self):
        assert psi(ProcessSpec(GAUSS, 3), 2, 0, 0.0) == pytest.approx(1.0, rel=1e-13)

    def test_top_species_definition(self):
        assert psi(ProcessSpec(GAUSS, 2), 2, 1, 1.0) == pytest.approx(2 * math.exp(-1), rel=1e-13)

    def test_negative_index_quadrature(self):
        assert psi(ProcessSpec(GAUSS, 2), 1, -1, 0.0) == pytest.approx(
            math.sqrt(math.pi) / 2, rel=1e-10)

    @pytest.mark.parametrize("spec", ALL, ids=IDS)
    @pytest.mark.parametrize("n", [2, 4])
    def test_defining_integral_oracle(self, spec, n):
        N = 6
        proc = ProcessSpec(spec, N)
        x = {"gaussian": 0.6, "laguerre": 1.7, "jacobi": 0.4}[spec.kind]
        for m in range(n - N, n):
            assert psi(proc, n, m, x) == pytest.approx(
                psi_defining(proc, n, m, x), rel=1e-8, abs=1e-13)

    def test_species_bound(self):
        with pytest.raises(ValueError):
            psi(ProcessSpec(GAUSS, 2), 3, 0, 0.0)


class TestPhiCap:
    def test_gaussian_constant(self):
        proc = ProcessSpec(GAUSS, 4)
        for n in (1, 2, 4):
            assert phi_cap(proc, n, 0, 0.37) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-13)

    def test_gaussian_odd_zero(self):
        assert phi_cap(ProcessSpec(GAUSS, 3), 3, 1, 0.0) == 0.0

    def test_laguerre_shift_one(self):
        assert phi_cap(ProcessSpec(op.EnsembleSpec(op.LAGUERRE, a=0.0), 2), 1, 0, 1.3) == pytest.approx(-1.0, rel=1e-13)

    @pytest.mark.parametrize("spec", ALL, ids=IDS)
    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_biorthogonality(self, spec, n):
        N = 6
        proc = ProcessSpec(spec, N)
        fam = proc.family(n)
        nodes, wts = op.gauss_weight_nodes(fam, n + 4)
        for j in range(n):
            for k in range(n):
                vals = [phi_cap(proc, n, j, float(x)) * psi(proc, n, k, float(x))
                        / op.eval_weight(fam, float(x)) for x in nodes]
                val = float(np.dot(wts, vals))
                assert val == pytest.approx(1.0 if j == k else 0.0, abs=1e-9)

    def test_index_bounds(self):
        with pytest.raises(ValueError):
            phi_cap(ProcessSpec(GAUSS, 3), 2, 2, 0.0)


class TestKernel:
    def test_single_species_diagonal(self):
        v = kernel_K(ProcessSpec(GAUSS, 1), SpeciesPoint(1, 0.0), SpeciesPoint(1, 0.0))
        assert v.value == pytest.approx(1 / math.sqrt(math.pi), rel=1e-13)
        assert v.gauge_tag == (1, 0.0)

    def test_top_species_mass(self):
        proc = ProcessSpec(GAUSS, 2)
        val, _ = integrate.quad(
            lambda y: kernel_K(proc, SpeciesPoint(2, y), SpeciesPoint(2, y)).value, -9, 9)
        assert val == pytest.approx(2.0, abs=1e-8)

    def test_mixed_species_series_example(self):
        # at the symmetric point every bilinear term carries an odd factor
        proc = ProcessSpec(GAUSS, 2)
        v = kernel_K(proc, SpeciesPoint(1, 0.0), SpeciesPoint(2, 0.0)).value
        assert v == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("spec", ALL, ids=IDS)
    def test_two_derivation_equivalence(self, spec):
        rng = np.random.default_rng(3)
        proc = ProcessSpec(spec, 8)
        lo, hi = {"gaussian": (-1.8, 1.8), "laguerre": (0.2, 8.0), "jacobi": (0.05, 0.95)}[spec.kind]
        for _ in range(12):
            s = int(rng.integers(1, 9))
            t = int(rng.integers(1, 9))
            x, y = rng.uniform(lo, hi, 2)
            got = kernel_F(proc, SpeciesPoint(s, x), SpeciesPoint(t, y))
            ref = (f_entry_series if s < t else f_entry_direct)(
                proc, SpeciesPoint(s, x), SpeciesPoint(t, y))
            assert got == pytest.approx(ref, rel=1e-8, abs=1e-11)

    def test_series_and_quadrature_paths_agree(self):
        # overlap region, points in the shared bulk so both paths are
        # well-conditioned
        proc = ProcessSpec(GAUSS, 20)
        for (s, t, x, y) in [(2, 16, 0.5, -1.0), (4, 18, -0.9, 1.2), (6, 19, 0.0, 0.4)]:
            p1, p2 = SpeciesPoint(s, x), SpeciesPoint(t, y)
            ser = kernel_mod._series_slog(proc, p1, p2)
            assert ser is not None
            old = kernel_mod.SERIES_SPLIT
            kernel_mod.SERIES_SPLIT = 10**9
            try:
                quad = kernel_mod._kernel_slog(proc, p1, p2)
            finally:
                kernel_mod.SERIES_SPLIT = old
            chain = f_entry_series(proc, p1, p2)
            gauge = 0.5 * (op.log_weight(proc.family(t), y) - op.log_weight(proc.family(s), x))
            sgn = (-1.0) ** ((t - s) % 2)
            f_ser = sgn * ser[0] * math.exp(ser[1] + gauge)
            f_quad = sgn * quad[0] * math.exp(quad[1] + gauge)
            assert f_ser == pytest.approx(chain, rel=1e-9)
            assert f_quad == pytest.approx(chain, rel=1e-6)


class TestCorrelation:
    def test_single_point_matches_kernel(self):
        proc = ProcessSpec(LAG, 3)
        p = SpeciesPoint(2, 1.3)
        assert correlation(proc, [p]) == pytest.approx(kernel_K(proc, p, p).value, rel=1e-12)

    def test_permutation_invariance(self):
        proc = ProcessSpec(GAUSS, 4)
        pts = [SpeciesPoint(1, 0.2), SpeciesPoint(3, -0.5), SpeciesPoint(4, 1.1)]
        base = correlation(proc, pts)
        assert correlation(proc, [pts[2], pts[0], pts[1]]) == pytest.approx(base, rel=1e-12)

    def test_duplicates_rejected(self):
        proc = ProcessSpec(GAUSS, 2)
        with pytest.raises(ValueError):
            correlation(proc, [SpeciesPoint(1, 0.0), SpeciesPoint(1, 0.0)])

    def test_point_count_bounds(self):
        proc = ProcessSpec(GAUSS, 2)
        with pytest.raises(ValueError):
            correlation(proc, [])

    @pytest.mark.parametrize("spec", ALL, ids=IDS)
    def test_gauge_invariance(self, spec):
        proc = ProcessSpec(spec, 4)
        rng = np.random.default_rng(11)
        lo, hi = {"gaussian": (-1.5, 1.5), "laguerre": (0.3, 9.0), "jacobi": (0.1, 0.9)}[spec.kind]
        for _ in range(5):
            ss = rng.integers(1, 5, 3)
            ys = rng.uniform(lo, hi, 3)
            pts = [SpeciesPoint(int(s), float(y)) for s, y in zip(ss, ys)]
            if len({(p.s, p.y) for p in pts}) != 3:
                continue
            base = correlation(proc, pts)
            c = rng.uniform(0.25, 4.0, 5)
            mat = np.array([[kernel_K(proc, pi, pj).value * c[pi.s] / c[pj.s] for pj in pts]
                            for pi in pts])
            assert float(np.linalg.det(mat)) == pytest.approx(base, rel=1e-10, abs=1e-12)

    def test_nonnegative_at_tiny_values(self):
        proc = ProcessSpec(GAUSS, 2)
        pts = [SpeciesPoint(2, 8.1), SpeciesPoint(2, 8.1000001)]
        assert correlation(proc, pts) >= 0.0


class TestDensity:
    def test_single_point(self):
        assert density(ProcessSpec(GAUSS, 1), 1, [0.0])[0] == pytest.approx(0.5641895835, rel=1e-9)

    def test_species_n_is_christoffel_darboux(self):
        proc = ProcessSpec(LAG, 3)
        fam = op.ShiftedFamily(LAG, 0)
        ys = np.array([0.5, 2.0, 6.0])
        for y in ys:
            direct = sum(
                op.eval_weight(fam, float(y)) * op.eval_poly(fam, j, float(y)) ** 2
                / op.norm_constant(fam, j)
                for j in range(3))
            assert density(proc, 3, [y])[0] == pytest.approx(direct, rel=1e-10)

    @pytest.mark.parametrize("spec", ALL, ids=IDS)
    def test_mass_is_species_count(self, spec):
        N = 10
        proc = ProcessSpec(spec, N)
        if spec.kind == op.GAUSSIAN:
            grid = np.arange(-9.0, 9.0, 0.002)
        elif spec.kind == op.LAGUERRE:
            grid = np.arange(0.0, 75.0, 0.002)
        else:
            grid = np.arange(0.0, 1.0, 1e-5) + 5e-6
        for s in (1, 4, 10):
            rho = density(proc, s, grid)
            mass = float(np.trapezoid(rho, grid)) if hasattr(np, "trapezoid") else float(np.trapz(rho, grid))
            assert mass == pytest.approx(s, abs=2e-5)

    def test_nonnegative(self):
        rho = density(ProcessSpec(JAC, 4), 3, np.linspace(0.01, 0.99, 45))
        assert np.all(rho >= -1e-12)
