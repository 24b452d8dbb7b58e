import numpy as np
import pytest

from kerrmodes.cavity import CavityConfig, bistability_scan, scattering_matrix
from kerrmodes.spectra import (
    ConventionError,
    LocalOscillator,
    commutator_defect,
    intensity_noise,
    optimized_lo_noise,
    optimum_quadrature,
    quadrature_covariance,
    quadrature_noise,
    symplectic_eigenvalues,
)
from kerrmodes.twomode import (
    output_correlation_twomode,
    two_mode_working_point,
)

VAC1 = np.array([[1.0, 0.0], [0.0, 0.0]])
VAC2 = np.kron(np.eye(2), VAC1)


@pytest.fixture(scope="module")
def kerr_working_point():
    cfg = CavityConfig(k_nl=2.5, detunings=(0.0,), orders=(0,))
    curve = bistability_scan(cfg, -2.0, 6.0)
    return curve.working_point(epsilon=0.02)


def kerr_v(wp, omega):
    s = scattering_matrix(wp.config, wp.amps, omega)
    return s @ VAC1 @ s.conj().T


class TestLocalOscillator:
    def test_requires_unit_norm(self):
        with pytest.raises(ValueError):
            LocalOscillator(coefficients=(0.5 + 0j, 0.5 + 0j))

    def test_tem00_selector(self):
        lo = LocalOscillator.tem00(2, phase=0.3)
        u = lo.selector()
        assert u[0] == pytest.approx(np.exp(-0.3j))
        assert u[1] == pytest.approx(np.exp(0.3j))
        assert np.allclose(u[2:], 0.0)


class TestQuadratureNoise:
    def test_vacuum_is_shot_for_any_lo(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            c = rng.normal(size=2) + 1j * rng.normal(size=2)
            c = c / np.linalg.norm(c)
            lo = LocalOscillator(coefficients=tuple(c), phase=rng.uniform(0, np.pi))
            assert quadrature_noise(VAC2, lo) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_inconsistent_matrix(self):
        bad = np.array([[1.0, 0.5j], [0.5, 0.0]])  # not Hermitian
        with pytest.raises(ConventionError):
            quadrature_noise(bad, LocalOscillator.tem00(1))

    def test_never_below_minus_one(self, kerr_working_point):
        rng = np.random.default_rng(11)
        for omega in rng.uniform(0, 4, size=8):
            v = kerr_v(kerr_working_point, omega)
            theta = rng.uniform(0, np.pi)
            value = quadrature_noise(v, LocalOscillator.tem00(1, phase=theta))
            assert value >= -1.0 - 1e-12

    def test_spectra_even_in_omega(self, kerr_working_point):
        for omega in (0.4, 1.1, 2.7):
            vp = kerr_v(kerr_working_point, omega)
            vm = kerr_v(kerr_working_point, -omega)
            lo = LocalOscillator.tem00(1, phase=0.4)
            assert quadrature_noise(vp, lo) == pytest.approx(
                quadrature_noise(vm, lo), abs=1e-10)


class TestOptimumQuadrature:
    def test_phase_symmetric_noise(self):
        v = np.array([[1.3, 0.0], [0.0, 0.3]])
        theta, value = optimum_quadrature(v)
        assert value == pytest.approx(1.3 + 0.3 - 1.0)

    def test_matches_dense_grid(self, kerr_working_point):
        # independent oracle: dense theta grid plus local scalar polish
        from scipy.optimize import minimize_scalar
        v = kerr_v(kerr_working_point, 0.35)
        theta, value = optimum_quadrature(v)
        grid = np.linspace(0, np.pi, 721)
        lo_values = [quadrature_noise(v, LocalOscillator.tem00(1, phase=t))
                     for t in grid]
        best = grid[int(np.argmin(lo_values))]
        step = grid[1] - grid[0]
        polished = minimize_scalar(
            lambda t: quadrature_noise(v, LocalOscillator.tem00(1, phase=t)),
            bounds=(best - step, best + step), method="bounded",
            options={"xatol": 1e-12})
        assert value == pytest.approx(polished.fun, abs=1e-10)
        assert value <= min(lo_values) + 1e-12
        assert quadrature_noise(
            v, LocalOscillator.tem00(1, phase=theta)) == pytest.approx(value, abs=1e-12)

    def test_near_perfect_at_turning_point(self, kerr_working_point):
        _, value = optimum_quadrature(kerr_v(kerr_working_point, 0.0))
        assert value < -0.99

    def test_antisqueezed_quadrature_diverges_near_fold(self):
        cfg = CavityConfig(k_nl=2.5, detunings=(0.0,), orders=(0,))
        curve = bistability_scan(cfg, -2.0, 6.0)
        maxima = []
        for eps in (0.1, 0.01):
            wp = curve.working_point(epsilon=eps)
            v = kerr_v(wp, 0.0)
            theta, _ = optimum_quadrature(v)
            anti = quadrature_noise(
                v, LocalOscillator.tem00(1, phase=theta + np.pi / 2))
            maxima.append(anti)
        assert maxima[1] > 10 * maxima[0] > 0

    def test_uncertainty_product_saturated_single_mode(self, kerr_working_point):
        for omega in (0.0, 0.8, 2.0):
            v = kerr_v(kerr_working_point, omega)
            theta, low = optimum_quadrature(v)
            high = quadrature_noise(
                v, LocalOscillator.tem00(1, phase=theta + np.pi / 2))
            assert (low + 1.0) * (high + 1.0) == pytest.approx(1.0, abs=1e-6)


class TestOptimizedLo:
    def test_vacuum(self):
        coeffs, theta, value = optimized_lo_noise(VAC2)
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_beats_fixed_tem00(self):
        wp = two_mode_working_point(2.5, 4, -1.2)
        for omega in (0.0, 0.5, 1.0, 2.0):
            v = output_correlation_twomode(wp, wp.config, omega)
            _, tem = optimum_quadrature(v)
            _, _, best = optimized_lo_noise(v)
            assert best <= tem + 1e-12

    def test_returned_lo_achieves_the_value(self):
        wp = two_mode_working_point(2.5, 3, 1.0)
        v = output_correlation_twomode(wp, wp.config, 0.3)
        coeffs, theta, value = optimized_lo_noise(v)
        lo = LocalOscillator(coefficients=coeffs, phase=theta)
        assert quadrature_noise(v, lo) == pytest.approx(value, abs=1e-10)

    def test_symplectic_pairing_pure_state(self):
        wp = two_mode_working_point(2.5, 3, 0.0)
        v = output_correlation_twomode(wp, wp.config, 0.0)
        q = quadrature_covariance(v)
        nus = symplectic_eigenvalues(q)
        assert np.allclose(nus, 1.0, atol=1e-6)
        eigs = np.sort(np.linalg.eigvalsh(q))
        assert eigs[0] * eigs[-1] == pytest.approx(1.0, abs=1e-6)


class TestIntensityNoise:
    def test_vacuum_any_mean_field(self):
        assert intensity_noise(VAC2, np.array([0.7, 0.3j])) == pytest.approx(0.0)

    def test_undefined_for_dark_output(self):
        with pytest.raises(ValueError):
            intensity_noise(VAC2, np.zeros(2))

    def test_zero_frequency_conservation(self):
        # lossless cavity: the total output photon flux fluctuation at DC
        # equals the (shot-limited) input one at every working point
        for dphi in (-1.0, 0.0, 1.5):
            wp = two_mode_working_point(2.5, 4, dphi)
            v = output_correlation_twomode(wp, wp.config, 0.0)
            assert intensity_noise(v, wp.outputs) == pytest.approx(0.0, abs=1e-6)

    def test_intensity_squeezing_robust_to_mode_order(self):
        # spectra for p = 3 and p = 7 nearly coincide, and p = 7 matches the
        # single-mode approximation closely
        from kerrmodes.multimode import VACUUM

        spectra = {}
        for p in (3, 7):
            wp = two_mode_working_point(2.5, p, 1.0)
            spectra[p] = [intensity_noise(
                output_correlation_twomode(wp, wp.config, w), wp.outputs)
                for w in (0.5, 1.0, 2.0)]
        cfg = CavityConfig(k_nl=2.5, detunings=(0.0,), orders=(0,))
        wp1 = bistability_scan(cfg, -2.0, 6.0).working_point(0.02)
        single = [intensity_noise(
            kerr_v(wp1, w), wp1.outputs) for w in (0.5, 1.0, 2.0)]
        assert np.allclose(spectra[3], spectra[7], atol=0.1)
        assert np.allclose(spectra[7], single, atol=1e-2)
        assert all(v < -0.3 for v in spectra[3])  # genuinely squeezed


class TestCovariance:
    def test_commutator_defect_zero_for_scattering_output(self, kerr_working_point):
        v = kerr_v(kerr_working_point, 0.9)
        assert commutator_defect(v) < 1e-10

    def test_single_mode_output_pure_at_all_frequencies(self, kerr_working_point):
        for omega in (0.0, 0.7, 1.9, 3.5):
            q = quadrature_covariance(kerr_v(kerr_working_point, omega))
            assert np.linalg.det(q) == pytest.approx(1.0, abs=1e-8)
