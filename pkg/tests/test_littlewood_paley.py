"""Dyadic cutoffs, band projections, B^{a,b} norms, S_infty, interpolation.

The bump is the smoothed-step construction with plateau |xi| <= 5/4 and
support |xi| <= 8/5; everything else is derived from it.  Values frozen below
(bump(1.3), the band-norm constant) were computed once from that construction
and guard against accidental recalibration.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmkdv.littlewood_paley import (
    DegenerateInput,
    SymbolGrid,
    UnresolvedSymbol,
    b_norm,
    band_l2_norm,
    bump,
    interpolation_ratio,
    project,
    psi_k,
    psi_le,
    psi_tilde,
    s_infty_norm,
    s_infty_separable,
    s_infty_with_refinement,
)
from qmkdv.rng import SplitMix64
from qmkdv.spectral_core import (
    GridSpec,
    enforce_real_zero_mean,
    field_from_coefficients,
    synthesize,
    transform,
)

from conftest import gaussian_field, random_real_field


class TestBump:
    def test_plateau_and_support(self):
        xs = np.linspace(-1.25, 1.25, 101)
        np.testing.assert_array_equal(bump(xs), np.ones_like(xs))
        assert bump(1.25) == 1.0
        assert bump(1.6) == 0.0
        assert bump(-1.6) == 0.0
        assert bump(5.0) == 0.0

    def test_transition_value_frozen(self):
        """bump(1.3) sits just past the plateau; value frozen at construction."""
        v = float(bump(1.3))
        assert 0.99 < v < 1.0
        assert v == pytest.approx(0.9970802502076078, rel=1e-12)

    def test_even_and_monotone(self):
        xs = np.linspace(1.25, 1.6, 200)
        vals = bump(xs)
        assert np.all(np.diff(vals) <= 1e-15)
        np.testing.assert_allclose(bump(-xs), vals, atol=0)

    @given(x=st.floats(min_value=-10.0, max_value=10.0, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_range(self, x):
        assert 0.0 <= bump(x) <= 1.0


class TestDyadicPartition:
    def test_psi_k_at_zero(self):
        for k in (-3, 0, 5):
            assert psi_k(0.0, k) == 0.0

    def test_band_value_near_plateau(self):
        """psi_k(2^k * 1.3) = bump(1.3) - bump(2.6); the subtrahend vanishes."""
        for k in (-2, 0, 3):
            assert psi_k(2.0**k * 1.3, k) == pytest.approx(0.9970802502076078, rel=1e-12)

    def test_telescoping_partition(self):
        """psi_{<= -21} + sum_{k=-20}^{20} psi_k = 1 away from xi = 0."""
        xs = np.linspace(-1000.0, 1000.0, 4001)
        xs = xs[xs != 0.0]
        total = psi_le(xs, -21)
        for k in range(-20, 21):
            total = total + psi_k(xs, k)
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    def test_inhomogeneous_partition(self):
        """psi_{<= 0} + sum_{k >= 1} psi_k = 1 everywhere (zero included)."""
        xs = np.linspace(-200.0, 200.0, 2001)
        total = psi_le(xs, 0)
        for k in range(1, 9):
            total = total + psi_k(xs, k)
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    def test_tilde_covers_band(self):
        """psi_tilde_k == 1 on the support of psi_k."""
        for k in (-1, 0, 2):
            xs = np.linspace(-2.0 * 2.0**k, 2.0 * 2.0**k, 2001)
            band = psi_k(xs, k)
            defect = np.abs(band * (1.0 - psi_tilde(xs, k)))
            assert np.max(defect) <= 1e-15

    def test_ge_complements_le(self):
        xs = np.linspace(-50.0, 50.0, 1001)
        total = psi_le(xs, 2) + psi_ge_sum(xs, 3)
        assert np.max(np.abs(total - 1.0)) <= 1e-12


def psi_ge_sum(xs, k_min):
    """Direct tail sum for the complement check (support is bounded here)."""
    total = np.zeros_like(np.asarray(xs, dtype=float))
    for k in range(k_min, k_min + 12):
        total = total + psi_k(xs, k)
    return total


class TestProjection:
    def test_single_mode_in_plateau_unchanged(self):
        grid = GridSpec(n=128, box_length=16.0 * math.pi)  # dxi = 1/8
        k0 = int(round(2.0 / grid.dxi))  # xi0 = 2.0, psi_1(2.0) = 1
        f = transform(grid, 0.5 * np.cos(grid.xi[k0] * grid.x))
        p = project(f, "k", 1)
        np.testing.assert_allclose(p.coeffs, f.coeffs, atol=1e-14 * np.max(np.abs(f.coeffs)))

    def test_distant_bands_are_disjoint(self, grid):
        f = random_real_field(grid, 41)
        a = project(f, "k", 1)
        b = project(f, "k", 4)
        assert np.max(np.abs(a.coeffs * b.coeffs)) == 0.0

    def test_tilde_after_band_is_identity(self, grid):
        f = random_real_field(grid, 42)
        pk = project(f, "k", 2)
        again = project(pk, "tilde", 2)
        np.testing.assert_allclose(again.coeffs, pk.coeffs, atol=1e-15 * np.max(np.abs(pk.coeffs)))

    def test_bands_resum_to_field(self, grid):
        """P_{<=0} plus the active high bands recover f exactly."""
        f = random_real_field(grid, 43)
        total = project(f, "le", 0).coeffs.copy()
        for k in range(1, 12):
            total += project(f, "k", k).coeffs
        np.testing.assert_allclose(total, f.coeffs, atol=1e-12 * np.max(np.abs(f.coeffs)))

    def test_unknown_selector_rejected(self, grid):
        with pytest.raises(ValueError):
            project(random_real_field(grid, 44), "band", 1)


class TestBandNorm:
    def test_scaling_constant(self):
        """||psi_k||_{L2} / 2^{k/2} is k-independent, whatever the node count."""
        vals = [
            band_l2_norm(k, 4001 + 613 * (k + 6) + 37 * (k + 6) ** 2) * 2.0 ** (-k / 2.0)
            for k in range(-6, 7)
        ]
        assert max(vals) - min(vals) <= 1e-12
        assert vals[0] == pytest.approx(1.151516615343443, rel=1e-12)


class TestBNorm:
    def test_zero_field(self, grid):
        z = field_from_coefficients(grid, np.zeros(grid.n, dtype=complex))
        assert b_norm(z, 0.25, 1.0) == 0.0

    def test_two_band_mode_closed_form(self):
        """A mode at xi0 = 12 meets exactly psi_3 and psi_4."""
        grid = GridSpec(n=256, box_length=16.0 * math.pi)
        amp, a, b = 0.6, 0.5, 2.0
        k0 = int(round(12.0 / grid.dxi))
        xi0 = grid.xi[k0]
        f = transform(grid, amp * np.cos(xi0 * grid.x))
        want = sum((2.0 ** (a * j) + 2.0 ** (b * j)) * amp * float(psi_k(xi0, j)) for j in (3, 4))
        assert b_norm(f, a, b) == pytest.approx(want, rel=1e-12)

    def test_equal_exponents_merge(self, grid):
        """B^{a,a} equals the merged-weight sum 2 * sum_j 2^{aj} ||P_j f||_inf."""
        f = random_real_field(grid, 45)
        a = 0.75
        direct = 0.0
        for j in range(-20, 16):
            sup = float(np.max(np.abs(synthesize(project(f, "k", j)))))
            direct += 2.0 * 2.0 ** (a * j) * sup
        assert b_norm(f, a, a) == pytest.approx(direct, rel=1e-12)

    def test_order_enforced(self, grid):
        with pytest.raises(ValueError):
            b_norm(random_real_field(grid, 46), 2.0, 1.0)


class TestSInftyNorm:
    def test_bump_value_stable_under_refinement(self):
        rep = s_infty_with_refinement(lambda u: bump(u), (6.4,), 256)
        assert rep["value"] > 0.0
        assert rep["rel_change"] <= 0.02
        assert rep["value"] == pytest.approx(rep["refined_value"], rel=0.02)

    def test_boundary_decay_enforced(self):
        sg = SymbolGrid.from_function(lambda u: np.ones_like(u), (4.0,), 64)
        with pytest.raises(UnresolvedSymbol):
            s_infty_norm(sg)

    def test_modulation_on_lattice_is_exact(self):
        """e^{i c xi} with c on the y-lattice translates F^{-1} exactly."""
        sg = SymbolGrid.from_function(lambda u: bump(u), (6.4,), 4096)
        dy = sg.axes[0].dx
        v1 = s_infty_norm(sg)
        for m in (1, 7, 100):
            c = m * dy
            v2 = s_infty_norm(
                SymbolGrid.from_function(lambda u: bump(u) * np.exp(1j * c * u), (6.4,), 4096)
            )
            assert v2 == pytest.approx(v1, rel=1e-12)

    def test_modulation_generic_shift_converges(self):
        """Off-lattice shifts agree to quadrature tolerance, improving with dy."""
        errs = []
        for extent, n in ((6.4, 512), (64.0, 8192), (640.0, 131072)):
            v1 = s_infty_norm(SymbolGrid.from_function(lambda u: bump(u), (extent,), n))
            v2 = s_infty_norm(
                SymbolGrid.from_function(lambda u: bump(u) * np.exp(1j * 2.7 * u), (extent,), n)
            )
            errs.append(abs(v1 - v2) / v1)
        assert errs[1] < 0.1 * errs[0]
        assert errs[2] < 0.01 * errs[1]
        assert errs[2] <= 1e-7

    def test_product_rule(self):
        """S_infty is submultiplicative on bump-localized symbols."""
        rng = SplitMix64(404)
        for _ in range(10):
            c1, c2 = 2.0 * rng.uniform() - 1.0, 3.0 * rng.uniform()
            m1 = lambda u: bump(u) * (1.0 + c1 * u)
            m2 = lambda u: bump(u / 1.2) * np.exp(1j * c2 * u)
            a = s_infty_norm(SymbolGrid.from_function(m1, (8.0,), 512))
            b = s_infty_norm(SymbolGrid.from_function(m2, (8.0,), 512))
            ab = s_infty_norm(
                SymbolGrid.from_function(lambda u: m1(u) * m2(u), (8.0,), 512)
            )
            assert ab <= a * b * (1.0 + 1e-12)

    def test_separable_matches_dense(self):
        """Rank-2 tensor symbol: GEMM route equals the dense 3D route."""
        w = lambda u: np.exp(-u * u)
        fn = lambda x, y, z: 2.0 * x**2 * w(x) * w(y) * w(z) - x * y * w(x) * w(y) * w(z)
        sg = SymbolGrid.from_function(fn, (16.0, 16.0, 16.0), 48)
        dense = s_infty_norm(sg)
        axes = sg.axes
        rows = lambda ax, ps: np.array([ax.xi**p * w(ax.xi) for p in ps])
        sep = s_infty_separable(
            axes,
            [2.0, -1.0],
            [rows(axes[0], (2, 1)), rows(axes[1], (0, 1)), rows(axes[2], (0, 0))],
        )
        assert sep == pytest.approx(dense, rel=1e-12)

    def test_separable_axis_count_enforced(self):
        ax = SymbolGrid.from_function(lambda u: bump(u), (6.4,), 64).axes[0]
        rows = np.array([bump(ax.xi)])
        with pytest.raises(ValueError):
            s_infty_separable([ax, ax, ax, ax], [1.0], [rows, rows, rows, rows])

    def test_separable_boundary_defect_enforced(self):
        ax = SymbolGrid.from_function(lambda u: bump(u), (6.4,), 64).axes[0]
        rows = np.array([np.ones(ax.n)])
        with pytest.raises(UnresolvedSymbol):
            s_infty_separable([ax], [1.0], [rows])


class TestInterpolationRatio:
    def test_gaussian_low_band(self):
        grid = GridSpec(n=512, box_length=100.0)
        f = gaussian_field(grid, 1.0, 1.0)
        r = interpolation_ratio(f, 0)
        assert 0.0 < r < 10.0

    def test_randomized_suite_bounded(self):
        """The recorded constant across 100 band-limited trials stays <= 10."""
        grid = GridSpec(n=512, box_length=100.0)
        rng = SplitMix64(77)
        base = field_from_coefficients(grid, np.zeros(grid.n, dtype=complex))
        order = np.argsort(np.argsort(grid.xi))
        worst = 0.0
        for trial in range(100):
            k = 1 + (trial % 4)
            z = np.array([rng.normal() + 1j * rng.normal() for _ in range(grid.n)])
            envelope = bump(np.sort(grid.xi) / (2.0**k * 1.3))[order]
            fld = enforce_real_zero_mean(base.with_coeffs(z * envelope))
            worst = max(worst, interpolation_ratio(fld, k))
        assert 0.0 < worst <= 10.0

    def test_rescaling_shifts_band_index(self):
        """f(2x) doubles frequencies: ratio at k+1 matches ratio at k within 20%."""
        grid = GridSpec(n=1024, box_length=200.0)
        base = field_from_coefficients(grid, np.zeros(grid.n, dtype=complex))
        env = lambda s: np.exp(-(((np.abs(s) - 4.0) / 0.8) ** 2)) * np.sin(3.0 * s)
        f1 = base.with_coeffs(env(grid.xi) + 0j)
        f2 = base.with_coeffs(0.5 * env(grid.xi / 2.0) + 0j)
        r1 = interpolation_ratio(f1, 2)
        r2 = interpolation_ratio(f2, 3)
        assert abs(r2 - r1) <= 0.2 * r1

    def test_empty_band_rejected(self):
        grid = GridSpec(n=256, box_length=40.0)
        c = np.zeros(grid.n, dtype=complex)
        c[int(round(20.0 / grid.dxi))] = 1.0  # xi = 20, far above the k=0 band
        f = field_from_coefficients(grid, c)
        with pytest.raises(DegenerateInput):
            interpolation_ratio(f, 0)

    def test_negative_band_rejected(self, grid):
        with pytest.raises(ValueError):
            interpolation_ratio(random_real_field(grid, 48), -1)
