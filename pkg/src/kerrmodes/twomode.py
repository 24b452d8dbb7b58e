"""Resonant coupling of the fundamental mode to one transverse mode of another
longitudinal family.

The fundamental mode A (order 0) and a perturbing mode B (transverse order p)
with free linear detunings phi_a, phi_b evolve under the exact restriction of
the cavity equations to that pair; the couplings that survive are the four
coefficients lambda_p, lambda_pp, lambda_ppp0, lambda_pppp.  The energy
transfer A -> B is governed by lambda_p = 1/2^p and dies off quickly with p,
but the cross-Kerr coefficient lambda_pp ~ 1/sqrt(p pi) decays slowly, which
is why mode coupling degrades squeezing long after the mean field looks
single-mode.

Fluctuations live in the stacked vector (alpha, alpha^*, beta, beta^*) with
drift -(1 + i Phi + i K M); M splits into blocks weighted by the four
coupling coefficients.  The output correlation follows the universal rule
V_out = S V_in S^dagger with S = -1 + 2 [(1 - i omega) + i Phi + i K M]^(-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cavity import (
    BistabilityCurve,
    CavityConfig,
    SteadyState,
    bistability_scan,
    drift_matrix,
)
from .coupling import lambda_p, lambda_pp, lambda_ppp0, lambda_pppp

VACUUM4 = np.kron(np.eye(2), np.array([[1.0, 0.0], [0.0, 0.0]]))


@lru_cache(maxsize=64)
def mode_coefficients(p: int) -> tuple[float, float, float, float]:
    """(lambda_p, lambda_pp, lambda_ppp0, lambda_pppp) for transverse order p."""
    return (float(lambda_p(p)), float(lambda_pp(p)),
            float(lambda_ppp0(p)), float(lambda_pppp(p)))


@dataclass(frozen=True)
class TwoModeConfig:
    """Two-mode working regime: nonlinearity, mode order and linear detunings."""

    k_nl: float
    p: int
    phi_a: float
    phi_b: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("the perturbing mode must have order p >= 1")

    @property
    def delta_phi(self) -> float:
        return self.phi_b - self.phi_a

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return mode_coefficients(self.p)

    def cavity_config(self) -> CavityConfig:
        return CavityConfig.two_mode(self.k_nl, self.p, self.phi_a, self.phi_b)


@dataclass(frozen=True)
class TwoModeDrift:
    """4x4 detuning matrix Phi and nonlinear matrix M of the linearized system."""

    phi: np.ndarray
    m: np.ndarray

    def drift(self, k_nl: float) -> np.ndarray:
        return -(np.eye(4) + 1j * self.phi + 1j * k_nl * self.m)


def _block_a(amp: complex) -> np.ndarray:
    i = abs(amp) ** 2
    a2 = amp * amp
    return np.array([[-2 * i, -a2], [np.conj(a2), 2 * i]])


def _block_ab(a: complex, b: complex) -> np.ndarray:
    mix = np.conj(a) * b + a * np.conj(b)
    ab = a * b
    return np.array([[-2 * mix, -2 * ab], [2 * np.conj(ab), 2 * mix]])


def drift_matrices(state: "TwoModeSteady", config: TwoModeConfig) -> TwoModeDrift:
    """Assemble Phi and M = M0 + lam_p M1 + lam_pp M2 + lam_ppp0 M3 + lam_pppp M4.

    The blocks M_a, M_b, M_ab carry the conjugate-row sign structure; the
    assembly equals the analytic Jacobian of the mean-field equations (the
    finite-difference tests pin this down entry by entry).
    """
    a, b = state.amp_a, state.amp_b
    lam1, lam2, lam3, lam4 = config.coefficients
    m_a, m_b, m_ab = _block_a(a), _block_a(b), _block_ab(a, b)
    zero = np.zeros((2, 2))
    m0 = np.block([[m_a, zero], [zero, zero]])
    m1 = np.block([[m_ab, m_a], [m_a, zero]])
    m2 = np.block([[m_b, m_ab], [m_ab, m_a]])
    m3 = np.block([[zero, m_b], [m_b, m_ab]])
    m4 = np.block([[zero, zero], [zero, m_b]])
    m = m0 + lam1 * m1 + lam2 * m2 + lam3 * m3 + lam4 * m4
    phi = np.diag([config.phi_a, -config.phi_a, config.phi_b, -config.phi_b])
    return TwoModeDrift(phi=phi, m=m)


@dataclass(frozen=True)
class TwoModeSteady:
    """Coexisting steady solution of the coupled pair with stability data."""

    config: TwoModeConfig
    amp_a: complex
    amp_b: complex
    eigenvalues: np.ndarray
    branch: str = "upper"

    @property
    def amps(self) -> np.ndarray:
        return np.array([self.amp_a, self.amp_b])

    @property
    def outputs(self) -> np.ndarray:
        return np.array([-1.0 + 2.0 * self.amp_a, 2.0 * self.amp_b])

    @property
    def intensity(self) -> float:
        return float(abs(self.amp_a) ** 2)

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))


def _from_cavity_state(state: SteadyState, config: TwoModeConfig) -> TwoModeSteady:
    return TwoModeSteady(config=config, amp_a=complex(state.amps[0]),
                         amp_b=complex(state.amps[1]),
                         eigenvalues=state.eigenvalues, branch=state.branch)


def two_mode_scan(k_nl: float, p: int, delta_phi: float,
                  phi_min: float = -2.0, phi_max: float = 6.0,
                  **kwargs) -> BistabilityCurve:
    """Bistability curve of the pair over the cavity detuning phi_a.

    delta_phi = phi_b - phi_a stays fixed along the scan; the fundamental is
    driven with unit input.
    """
    base = CavityConfig.two_mode(k_nl, p, 0.0, delta_phi)
    return bistability_scan(base, phi_min, phi_max, **kwargs)


def two_mode_steady(config: TwoModeConfig,
                    curve: BistabilityCurve | None = None) -> list[TwoModeSteady]:
    """All coexisting steady solutions at the configured detunings.

    Found by pseudo-arclength continuation seeded from the linear cavity
    (the scan is grown in K internally when needed) and polished at phi_a.
    Pass a precomputed scan of matching (k_nl, p, delta_phi) to amortize.
    """
    if curve is None:
        margin = 3.0
        curve = two_mode_scan(config.k_nl, config.p, config.delta_phi,
                              phi_min=config.phi_a - margin,
                              phi_max=config.phi_a + margin)
    states = curve.states_at(config.phi_a)
    return [_from_cavity_state(s, config) for s in states]


def two_mode_working_point(k_nl: float, p: int, delta_phi: float,
                           epsilon: float = 0.02,
                           curve: BistabilityCurve | None = None,
                           include_unstable: bool = False) -> TwoModeSteady:
    """Stable upper-branch state near the fold, by the epsilon-offset rule.

    The working detuning is phi_t - epsilon * W with phi_t the fold
    terminating the upper branch and W the bistable interval width.  Unstable
    states stay excluded unless explicitly requested.
    """
    if curve is None:
        curve = two_mode_scan(k_nl, p, delta_phi)
    state = curve.working_point(epsilon=epsilon)
    config = TwoModeConfig(k_nl=k_nl, p=p,
                           phi_a=float(state.config.detunings[0]),
                           phi_b=float(state.config.detunings[1]))
    result = _from_cavity_state(state, config)
    if not result.stable and not include_unstable:
        raise RuntimeError("working point is unstable; "
                           "pass include_unstable=True to inspect it anyway")
    return result


def scattering_matrix_twomode(state: TwoModeSteady, config: TwoModeConfig,
                              omega: float) -> np.ndarray:
    """S(omega) = -1 + 2 [(1 - i omega) + i Phi + i K M]^(-1)."""
    d = drift_matrices(state, config)
    kernel = (1.0 - 1j * omega) * np.eye(4) + 1j * d.phi + 1j * config.k_nl * d.m
    return -np.eye(4) + 2.0 * np.linalg.inv(kernel)


def output_correlation_twomode(state: TwoModeSteady, config: TwoModeConfig,
                               omega: float,
                               v_in: np.ndarray | None = None) -> np.ndarray:
    """4x4 output correlation V_out = S V_in S^dagger (vacuum input default).

    Diverges (singular kernel) exactly at a critical point; numpy's
    LinAlgError there is the physical signature of diverging fluctuations.
    """
    if v_in is None:
        v_in = VACUUM4
    s = scattering_matrix_twomode(state, config, omega)
    return s @ v_in @ s.conj().T


def rhs_twomode(config: TwoModeConfig, a: complex, b: complex) -> np.ndarray:
    """Mean-field right-hand sides for (A, B); zero at a steady state.

    Kept separate from the generic cavity residual so the drift matrices can
    be validated against an independent transcription of the equations.
    """
    lam1, lam2, lam3, lam4 = config.coefficients
    k = config.k_nl
    fa = (1.0 - (1.0 + 1j * config.phi_a) * a
          + 1j * k * (abs(a) ** 2 * a
                      + lam1 * (a * a * np.conj(b) + 2 * abs(a) ** 2 * b)
                      + lam2 * (b * b * np.conj(a) + 2 * abs(b) ** 2 * a)
                      + lam3 * abs(b) ** 2 * b))
    fb = (-(1.0 + 1j * config.phi_b) * b
          + 1j * k * (lam1 * abs(a) ** 2 * a
                      + lam2 * (a * a * np.conj(b) + 2 * abs(a) ** 2 * b)
                      + lam3 * (b * b * np.conj(a) + 2 * abs(b) ** 2 * a)
                      + lam4 * abs(b) ** 2 * b))
    return np.array([fa, fb])


def drift_consistency_defect(state: TwoModeSteady, config: TwoModeConfig) -> float:
    """Max deviation between the block assembly and the generic tensor Jacobian."""
    d_blocks = drift_matrices(state, config).drift(config.k_nl)
    d_tensor = drift_matrix(config.cavity_config(), state.amps)
    return float(np.max(np.abs(d_blocks - d_tensor)))
