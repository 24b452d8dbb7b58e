import warnings

import numpy as np
import pytest

from kerrmodes.cavity import CavityConfig, truncated_multimode_steady
from kerrmodes.coupling import mu_constants
from kerrmodes.multimode import (
    ETA,
    VACUUM,
    PerturbativeConfig,
    brute_force_fluctuations,
    brute_output_correlation,
    g0_tilde,
    output_correlation,
    perturbative_roots,
    r0_matrix,
    steady_state_perturbative,
    transfer_matrix,
    v_add,
    v_add_from_transfers,
)

PHI_TS = np.array([25.0, 50.0, 100.0])


def fitted_exponent(x, y):
    return -np.polyfit(np.log(x), np.log(y), 1)[0]


class TestPerturbativeSteadyState:
    def test_large_spacing_reduces_to_single_mode(self):
        # corrections die off as mu1/phi_t, so 1e9 leaves ~1e-9 residue
        from kerrmodes.cavity import single_mode_steady
        cfg = PerturbativeConfig(k_nl=1.0, phi0=0.8, phi_t=1e9)
        a0 = steady_state_perturbative(cfg)
        (single,) = single_mode_steady(0.8, 1.0)
        assert a0 == pytest.approx(single.amps[0], abs=1e-8)

    def test_warns_below_spacing_threshold(self):
        with pytest.warns(UserWarning):
            PerturbativeConfig(k_nl=1.0, phi0=0.0, phi_t=5.0)

    def test_rejects_nonpositive_spacing(self):
        with pytest.raises(ValueError):
            PerturbativeConfig(k_nl=1.0, phi0=0.0, phi_t=-3.0)

    def test_matches_truncated_oracle_at_inverse_square_order(self):
        cfg = PerturbativeConfig(k_nl=1.0, phi0=1.5, phi_t=50.0)
        a0 = steady_state_perturbative(cfg)
        oracle = truncated_multimode_steady(cfg.cavity_config(10)).amps[0]
        assert abs(a0 - oracle) < 5.0 / cfg.phi_t**2

    def test_gap_shrinks_as_inverse_square(self):
        gaps = []
        for phi_t in PHI_TS:
            cfg = PerturbativeConfig(k_nl=1.0, phi0=1.5, phi_t=phi_t)
            a0 = steady_state_perturbative(cfg)
            oracle = truncated_multimode_steady(cfg.cavity_config(10)).amps[0]
            gaps.append(abs(a0 - oracle))
        assert fitted_exponent(PHI_TS, gaps) == pytest.approx(2.0, abs=0.3)

    def test_loss_term_matches_oracle_mode_populations(self):
        # the lowest-order loss constant mu2 can be read off the oracle's
        # higher-mode populations: sum_p |A_p|^2 p^2 phi_t^2 -> mu2 K^2 I^3
        cfg = PerturbativeConfig(k_nl=1.0, phi0=1.0, phi_t=200.0)
        amps = truncated_multimode_steady(cfg.cavity_config(10)).amps
        i0 = abs(amps[0]) ** 2
        acc = sum(abs(amps[p]) ** 2 for p in range(1, 10)) * cfg.phi_t**2
        assert acc / (cfg.k_nl**2 * i0**3) == pytest.approx(
            mu_constants().mu2, rel=0.02)

    def test_multiple_roots_in_bistable_regime(self):
        cfg = PerturbativeConfig(k_nl=2.5, phi0=2.4, phi_t=100.0)
        roots = perturbative_roots(cfg)
        assert len(roots) == 3
        lower = steady_state_perturbative(cfg, branch="lower")
        upper = steady_state_perturbative(cfg, branch="upper")
        assert abs(lower) < abs(upper)


class TestR0Matrix:
    def test_zero_without_nonlinearity(self):
        cfg = PerturbativeConfig(k_nl=0.0, phi0=0.5, phi_t=40.0)
        assert np.allclose(r0_matrix(1.0 + 0j, cfg, 0.7), 0.0)

    def test_pure_kerr_block_survives_large_spacing(self):
        a0 = 0.8 - 0.3j
        cfg = PerturbativeConfig(k_nl=1.5, phi0=0.5, phi_t=1e8)
        i0, a2 = abs(a0) ** 2, a0**2
        kerr = -1.5j * np.array([[2 * i0, a2], [-np.conj(a2), -2 * i0]])
        assert np.allclose(r0_matrix(a0, cfg, 1.0), kerr, atol=1e-7)

    def test_dressed_propagator_matches_full_resolvent(self):
        # fundamental block of the 2N x 2N resolvent, evaluated at the exact
        # truncated steady state, approached at third order in 1/phi_t
        gaps = []
        omega = 0.6
        for phi_t in PHI_TS:
            cfg = PerturbativeConfig(k_nl=1.0, phi0=0.8, phi_t=phi_t)
            steady = truncated_multimode_steady(cfg.cavity_config(12)).amps
            refl = -np.eye(2) + 2.0 * g0_tilde(steady[0], cfg, omega)
            full = brute_force_fluctuations(cfg, 12, omega, steady=steady)
            gaps.append(np.linalg.norm(refl - full[0:2, 0:2]))
        assert fitted_exponent(PHI_TS, gaps) > 2.5

    def test_scaling_of_correction_terms(self):
        # every mode-coupling term carries its stated 1/phi_t power: the
        # corrections beyond the bare Kerr block shrink as 1/phi_t, and the
        # Richardson residue g(phi_t) - 2 g(2 phi_t) isolates the 1/phi_t^2
        # family; both fitted exponents must match to 0.05
        a0 = 0.9 + 0.1j
        spacings = np.array([1e4, 2e4, 4e4])

        def g(phi_t):
            cfg = PerturbativeConfig(k_nl=1.2, phi0=0.5, phi_t=phi_t)
            big = PerturbativeConfig(k_nl=1.2, phi0=0.5, phi_t=1e12)
            return r0_matrix(a0, cfg, 0.4) - r0_matrix(a0, big, 0.4)

        first = [np.linalg.norm(g(p)) for p in spacings]
        second = [np.linalg.norm(g(p) - 2.0 * g(2 * p)) for p in spacings]
        assert fitted_exponent(spacings, first) == pytest.approx(1.0, abs=0.05)
        assert fitted_exponent(spacings, second) == pytest.approx(2.0, abs=0.05)


class TestTransferMatrix:
    def test_zero_without_nonlinearity(self):
        cfg = PerturbativeConfig(k_nl=0.0, phi0=0.3, phi_t=30.0)
        assert np.allclose(transfer_matrix(3, 0.5 + 0j, cfg, 0.2), 0.0)

    def test_rejects_fundamental_channel(self):
        cfg = PerturbativeConfig(k_nl=1.0, phi0=0.3, phi_t=30.0)
        with pytest.raises(ValueError):
            transfer_matrix(0, 1.0 + 0j, cfg, 0.0)

    def test_leading_term_halves_when_spacing_doubles(self):
        a0 = 0.9 + 0j
        n1 = np.linalg.norm(transfer_matrix(
            2, a0, PerturbativeConfig(k_nl=1.0, phi0=0.0, phi_t=60.0), 0.0))
        n2 = np.linalg.norm(transfer_matrix(
            2, a0, PerturbativeConfig(k_nl=1.0, phi0=0.0, phi_t=120.0), 0.0))
        assert n1 / n2 == pytest.approx(2.0, rel=0.05)

    def test_channel_sum_reproduces_added_noise(self):
        cfg = PerturbativeConfig(k_nl=1.0, phi0=0.5, phi_t=200.0)
        a0 = steady_state_perturbative(cfg)
        direct = v_add(a0, cfg)
        summed = v_add_from_transfers(a0, cfg, 0.0)
        # agreement at leading order: corrections are one power of 1/phi_t down
        assert np.allclose(summed, direct,
                           atol=20.0 * np.linalg.norm(direct) / cfg.phi_t)


class TestVAdd:
    def test_structure_ratio(self):
        cfg = PerturbativeConfig(k_nl=2.0, phi0=0.5, phi_t=30.0)
        v = v_add(0.7 + 0.2j, cfg)
        assert v[0, 0] / v[1, 1] == pytest.approx(4.0)

    def test_quarter_when_spacing_doubles(self):
        a0 = 0.8 + 0j
        v1 = v_add(a0, PerturbativeConfig(k_nl=2.0, phi0=0.5, phi_t=30.0))
        v2 = v_add(a0, PerturbativeConfig(k_nl=2.0, phi0=0.5, phi_t=60.0))
        assert np.allclose(v1, 4.0 * v2)

    def test_rank_one_psd_for_real_amplitude(self):
        cfg = PerturbativeConfig(k_nl=2.0, phi0=0.5, phi_t=30.0)
        v = v_add(0.9 + 0j, cfg)
        assert np.allclose(v, v.conj().T)
        eigs = np.sort(np.linalg.eigvalsh(v))
        assert eigs[0] == pytest.approx(0.0, abs=1e-15)
        assert eigs[1] > 0


class TestOutputCorrelation:
    def test_empty_cavity_returns_vacuum(self):
        cfg = PerturbativeConfig(k_nl=0.0, phi0=0.7, phi_t=40.0)
        v = output_correlation(cfg, 0.9, a0=1.0 / (1 + 0.7j))
        assert np.allclose(v, VACUUM, atol=1e-12)

    def test_matches_brute_force_at_inverse_square_order(self):
        gaps = []
        for phi_t in PHI_TS:
            cfg = PerturbativeConfig(k_nl=1.0, phi0=1.5, phi_t=phi_t)
            a0 = steady_state_perturbative(cfg)
            norms = [np.linalg.norm(
                output_correlation(cfg, w, a0=a0)
                - brute_output_correlation(cfg, 10, w)[0:2, 0:2])
                for w in (0.3, 0.6, 1.0)]
            gaps.append(np.mean(norms))
        assert fitted_exponent(PHI_TS, gaps) == pytest.approx(2.0, abs=0.3)


class TestBruteForce:
    def test_single_mode_reduction(self):
        # N=1 reproduces the analytic single-mode Kerr scattering matrix
        from kerrmodes.cavity import single_mode_steady
        cfg = PerturbativeConfig(k_nl=1.8, phi0=0.9, phi_t=30.0)
        state = max(single_mode_steady(0.9, 1.8), key=lambda s: s.intensity)
        a0, i0 = state.amps[0], state.intensity
        omega = 0.75
        kernel = ((1 - 1j * omega) * np.eye(2) + 0.9j * ETA
                  - 1.8j * ETA @ np.array([[2 * i0, a0**2],
                                           [np.conj(a0) ** 2, 2 * i0]]))
        expect = -np.eye(2) + 2 * np.linalg.inv(kernel)
        got = brute_force_fluctuations(cfg, 1, omega, steady=state.amps)
        assert np.allclose(got, expect, atol=1e-12)

    def test_unitary_at_zero_nonlinearity(self):
        cfg = PerturbativeConfig(k_nl=0.0, phi0=0.4, phi_t=25.0)
        s = brute_force_fluctuations(cfg, 6, 1.3)
        assert np.allclose(s @ s.conj().T, np.eye(12), atol=1e-12)
        # each mode reflects with a pure phase
        assert np.allclose(np.abs(np.diag(s)), 1.0)

    def test_metric_preservation(self):
        cfg = PerturbativeConfig(k_nl=2.0, phi0=2.0, phi_t=25.0)
        eta = np.kron(np.eye(8), np.diag([1.0, -1.0]))
        s = brute_force_fluctuations(cfg, 8, 0.9)
        assert np.max(np.abs(s @ eta @ s.conj().T - eta)) < 1e-8

    def test_output_purity_at_zero_frequency(self):
        # the static output state of the lossless cavity is pure; away from
        # omega = 0 the single-frequency covariance of a multimode output
        # mixes entangled sidebands and is legitimately impure
        from kerrmodes.spectra import quadrature_covariance
        cfg = PerturbativeConfig(k_nl=2.0, phi0=1.8, phi_t=25.0)
        v = brute_output_correlation(cfg, 6, 0.0)
        q = quadrature_covariance(v)
        assert np.linalg.det(q) == pytest.approx(1.0, abs=1e-6)


@pytest.fixture(autouse=True)
def _no_spacing_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        yield
