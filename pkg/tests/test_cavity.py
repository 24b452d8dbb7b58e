import numpy as np
import pytest

from kerrmodes.cavity import (
    BistabilityCurve,
    CavityConfig,
    ConvergenceError,
    bistability_scan,
    coupling_tensor,
    drift_matrix,
    newton_steady,
    residual,
    scattering_matrix,
    single_mode_steady,
    stability_eigenvalues,
    truncated_multimode_steady,
)


class TestConfig:
    def test_default_drive_into_fundamental(self):
        cfg = CavityConfig.transverse_family(1.0, 0.0, 30.0, 4)
        assert cfg.drive == (1.0 + 0j, 0j, 0j, 0j)
        assert cfg.detunings == (0.0, 30.0, 60.0, 90.0)

    def test_requires_fundamental(self):
        with pytest.raises(ValueError):
            CavityConfig(k_nl=1.0, detunings=(0.0,), orders=(2,))

    def test_rejects_negative_k(self):
        with pytest.raises(ValueError):
            CavityConfig(k_nl=-1.0, detunings=(0.0,), orders=(0,))

    def test_tensor_restriction(self):
        cfg = CavityConfig.two_mode(1.0, 3, 0.0, 0.0)
        t = cfg.tensor
        assert t[0, 0, 0, 0] == 1.0
        assert t[1, 0, 0, 0] == pytest.approx(1 / 8)  # lambda_3


class TestSingleModeSteady:
    def test_empty_cavity_resonance(self):
        (state,) = single_mode_steady(0.0, 0.0)
        assert state.intensity == pytest.approx(1.0)
        assert state.amps[0] == pytest.approx(1.0)
        assert state.stable

    def test_lorentzian_detuned(self):
        (state,) = single_mode_steady(2.0, 0.0)
        assert state.intensity == pytest.approx(0.2)

    def test_bistable_window_exists(self):
        counts = {len(single_mode_steady(phi, 2.5))
                  for phi in np.linspace(1.5, 3.5, 101)}
        assert 3 in counts

    def test_middle_branch_unstable(self):
        states = single_mode_steady(2.4, 2.5)
        assert len(states) == 3
        by_branch = {s.branch: s for s in states}
        assert not by_branch["middle"].stable
        assert by_branch["lower"].stable
        assert by_branch["upper"].stable
        assert max(s.eigenvalues.real.max() for s in states) > 0

    def test_output_relation_and_flux(self):
        for state in single_mode_steady(2.3, 2.5):
            assert np.allclose(state.outputs,
                               -np.asarray(state.config.drive) + 2 * state.amps)
            assert np.sum(np.abs(state.outputs) ** 2) == pytest.approx(1.0, abs=1e-10)

    def test_empty_cavity_eigenvalues(self):
        (state,) = single_mode_steady(0.7, 0.0)
        assert np.allclose(state.eigenvalues.real, -1.0)


class TestMultimodeNewton:
    def test_reduces_to_single_mode(self):
        cfg = CavityConfig(k_nl=2.5, detunings=(2.0,), orders=(0,))
        state = truncated_multimode_steady(cfg)
        singles = single_mode_steady(2.0, 2.5)
        assert any(abs(state.intensity - s.intensity) < 1e-10 for s in singles)

    def test_residual_below_tolerance(self):
        cfg = CavityConfig.transverse_family(1.0, 0.5, 30.0, 6)
        state = truncated_multimode_steady(cfg)
        assert state.residual_norm < 1e-12

    def test_zero_drive_zero_state(self):
        cfg = CavityConfig(k_nl=1.5, detunings=(0.0, 40.0), orders=(0, 1),
                           drive=(0j, 0j))
        state = truncated_multimode_steady(cfg)
        assert np.allclose(state.amps, 0.0)

    def test_flux_conservation(self):
        cfg = CavityConfig.transverse_family(2.0, 1.2, 20.0, 8)
        state = truncated_multimode_steady(cfg)
        assert np.sum(np.abs(state.outputs) ** 2) == pytest.approx(1.0, abs=1e-10)

    def test_higher_modes_decay_with_spacing(self):
        a = truncated_multimode_steady(
            CavityConfig.transverse_family(1.0, 0.5, 25.0, 6)).amps
        b = truncated_multimode_steady(
            CavityConfig.transverse_family(1.0, 0.5, 50.0, 6)).amps
        ratio = abs(a[1]) / abs(b[1])
        assert ratio == pytest.approx(2.0, rel=0.1)

    def test_convergence_error_reports_residual(self):
        cfg = CavityConfig(k_nl=2.5, detunings=(2.4,), orders=(0,))
        with pytest.raises(ConvergenceError) as err:
            newton_steady(cfg, np.array([100.0 + 0j]), max_iter=2)
        assert err.value.residual is not None


class TestDriftMatrix:
    def test_conjugate_structure(self):
        cfg = CavityConfig.transverse_family(1.7, 0.8, 15.0, 4)
        state = truncated_multimode_steady(cfg)
        d = drift_matrix(cfg, state.amps)
        assert np.allclose(d[1::2, 1::2], np.conj(d[0::2, 0::2]))
        assert np.allclose(d[1::2, 0::2], np.conj(d[0::2, 1::2]))

    def test_finite_difference_jacobian(self):
        cfg = CavityConfig.transverse_family(2.2, 1.0, 12.0, 3)
        state = truncated_multimode_steady(cfg)
        d = drift_matrix(cfg, state.amps)
        eps = 1e-7
        n = cfg.n_modes
        for q in range(n):
            for part, bump in (("re", eps), ("im", 1j * eps)):
                amps_p = state.amps.copy(); amps_p[q] += bump
                amps_m = state.amps.copy(); amps_m[q] -= bump
                fd = (residual(cfg, amps_p) - residual(cfg, amps_m)) / (2 * eps)
                # column of d for (dRe, dIm): dR/dA + dR/dA^* for re,
                # i(dR/dA - dR/dA^*) for im
                da, dac = d[0::2, 2 * q], d[0::2, 2 * q + 1]
                expect = da + dac if part == "re" else 1j * (da - dac)
                assert np.allclose(fd, expect, atol=1e-6)

    def test_empty_cavity_decay(self):
        cfg = CavityConfig(k_nl=0.0, detunings=(1.3,), orders=(0,))
        eigs = stability_eigenvalues(cfg, np.array([1.0 / (1 + 1.3j)]))
        assert np.allclose(eigs.real, -1.0)


class TestScatteringMatrix:
    def test_empty_cavity_unitary(self):
        cfg = CavityConfig.transverse_family(0.0, 0.4, 20.0, 3)
        state = truncated_multimode_steady(cfg)
        for omega in (0.0, 0.7, 3.0):
            s = scattering_matrix(cfg, state.amps, omega)
            assert np.allclose(s @ s.conj().T, np.eye(6), atol=1e-12)
            assert np.allclose(np.abs(np.diag(s)), 1.0)

    def test_metric_preservation(self):
        # S eta S^dagger = eta for the lossless cavity at any working point
        cfg = CavityConfig.two_mode(2.5, 3, 2.0, 2.5)
        state = truncated_multimode_steady(cfg)
        eta = np.diag([1.0, -1.0, 1.0, -1.0])
        for omega in (0.0, 1.1, 4.0):
            s = scattering_matrix(cfg, state.amps, omega)
            assert np.allclose(s @ eta @ s.conj().T, eta, atol=1e-8)


@pytest.fixture(scope="module")
def single_curve():
    cfg = CavityConfig(k_nl=2.5, detunings=(0.0,), orders=(0,))
    return bistability_scan(cfg, -2.0, 6.0)


class TestBistabilityScan:
    def test_s_shape_and_bounds(self, single_curve):
        assert isinstance(single_curve, BistabilityCurve)
        assert len(single_curve.turning_points) == 2
        assert single_curve.intensity.max() <= 1.0 + 1e-9

    def test_turning_points_have_marginal_eigenvalue(self, single_curve):
        for phi_t, _ in single_curve.turning_points:
            states = single_mode_steady(phi_t, 2.5)
            closest = min(min(abs(e.real) for e in s.eigenvalues)
                          for s in states)
            assert closest < 1e-6

    def test_matches_cubic_roots(self, single_curve):
        for phi in (2.0, 2.3, 2.45, 3.0):
            scan_states = single_curve.states_at(phi)
            cubic_states = single_mode_steady(phi, 2.5)
            assert len(scan_states) == len(cubic_states)
            for a, b in zip(scan_states, cubic_states):
                assert a.intensity == pytest.approx(b.intensity, abs=1e-9)
                assert a.branch == b.branch

    def test_continuation_equals_multistart_newton(self):
        # brute-force equivalence on a small instance: every root found by
        # dense multi-start root finding is on the curve and vice versa
        from scipy.optimize import fsolve

        cfg = CavityConfig.two_mode(2.5, 2, 0.0, 0.5)
        curve = bistability_scan(cfg, -1.0, 5.0)
        rng = np.random.default_rng(7)
        for phi in np.linspace(-0.5, 4.5, 50):
            shifted = cfg.shifted(phi)

            def equations(x):
                r = residual(shifted, x[:2] + 1j * x[2:])
                return np.concatenate([r.real, r.imag])

            linear = np.asarray(shifted.drive) / (1 + 1j * np.asarray(shifted.detunings))
            seeds = [linear] + [linear + 0.7 * (rng.normal(size=2) + 1j * rng.normal(size=2))
                                for _ in range(30)]
            found = []
            for seed in seeds:
                x0 = np.concatenate([seed.real, seed.imag])
                sol, _, ok, _ = fsolve(equations, x0, full_output=True, xtol=1e-13)
                if ok != 1 or np.max(np.abs(equations(sol))) > 1e-9:
                    continue
                amps = sol[:2] + 1j * sol[2:]
                if all(np.max(np.abs(amps - f)) > 1e-6 for f in found):
                    found.append(amps)
            curve_states = curve.states_at(phi)
            assert len(curve_states) == len(found)
            curve_i = sorted(s.intensity for s in curve_states)
            brute_i = sorted(float(abs(f[0]) ** 2) for f in found)
            assert np.allclose(curve_i, brute_i, atol=1e-8)

    def test_k_zero_is_lorentzian(self):
        cfg = CavityConfig(k_nl=0.0, detunings=(0.0,), orders=(0,))
        curve = bistability_scan(cfg, -3.0, 3.0)
        assert curve.turning_points == []
        expect = 1.0 / (1.0 + curve.phi**2)
        assert np.allclose(curve.intensity, expect, atol=1e-9)

    def test_working_point_near_upper_fold(self, single_curve):
        wp = single_curve.working_point(epsilon=0.02)
        phi_t, i_t = max(single_curve.turning_points, key=lambda t: t[1])
        assert wp.stable
        assert wp.branch == "upper"
        assert wp.config.detunings[0] < phi_t
        assert wp.intensity > i_t

    def test_two_mode_p5_tracks_single_mode(self):
        cfg = CavityConfig.two_mode(2.5, 5, 0.0, 0.0)
        curve = bistability_scan(cfg, -2.0, 6.0)
        single = bistability_scan(
            CavityConfig(k_nl=2.5, detunings=(0.0,), orders=(0,)), -2.0, 6.0)
        fold_a = sorted(p for p, _ in curve.turning_points)
        fold_b = sorted(p for p, _ in single.turning_points)
        assert np.allclose(fold_a, fold_b, atol=2e-3)


def test_coupling_tensor_cached_and_frozen():
    t = coupling_tensor((0, 1, 2))
    assert t is coupling_tensor((0, 1, 2))
    with pytest.raises(ValueError):
        t[0, 0, 0, 0] = 2.0
