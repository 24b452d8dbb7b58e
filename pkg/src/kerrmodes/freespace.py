"""Perturbative propagation of a fundamental Gaussian beam through a thin Kerr medium.

The medium is much shorter than the Rayleigh length and sits at the waist, so
propagation reduces to the coupled mode equations

    dA_p/dx = i (Khat / L) sum_{qrs} lambda_pqrs A_q^* A_r A_s

with Khat the dimensionless nonlinearity.  Expanding to second order in the
input intensity gives the fundamental-mode output

    A_out = [1 + i phi_nl - phi_nl^2/2 - gamma_nl/2] A_in,
    phi_nl = Khat |A_in|^2,   gamma_nl = phi_nl^2 / 3,

where gamma_nl is the nonlinear loss into higher-order modes (the prefactor
1/3 is sum_{q>=1} lambda_q^2).  The associated added noise enters through the
conjugate amplitude channel (phase-conjugate noise) with correlation matrix
proportional to [[4, -2], [-2, 1]].

The input amplitude is taken real, matching the gauge all closed formulas are
written in; :func:`rotate_input_gauge` maps a complex input onto it.
"""

from __future__ import annotations

import cmath
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .coupling import lambda_exact, lambda_pq


@lru_cache(maxsize=8)
def coupling_tensor(n_modes: int) -> np.ndarray:
    """Float tensor lambda[p, q, r, s] over circular modes 0..n_modes-1."""
    t = np.empty((n_modes,) * 4)
    for p in range(n_modes):
        for q in range(n_modes):
            for r in range(n_modes):
                for s in range(n_modes):
                    t[p, q, r, s] = float(lambda_exact(p, q, r, s))
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class ThinMediumParams:
    """Thin-medium working point.

    khat is the dimensionless nonlinearity k chi^(3) L / (2 pi w^2); the
    perturbative treatment requires khat |amp_in|^2 well below 1.
    """

    khat: float
    amp_in: complex = 1.0
    q_max: int = 12
    perturbative_threshold: float = 0.1

    @property
    def phi_nl(self) -> float:
        return self.khat * abs(self.amp_in) ** 2

    @property
    def is_perturbative(self) -> bool:
        return abs(self.phi_nl) <= self.perturbative_threshold


@dataclass(frozen=True)
class FreeSpaceResult:
    amp_out: complex
    phi_nl: float
    gamma_nl: float
    v_add: np.ndarray = field(repr=False)


def rotate_input_gauge(amp_in: complex) -> tuple[float, complex]:
    """Split a complex input into (real modulus, global phase factor)."""
    mag = abs(amp_in)
    phase = amp_in / mag if mag else 1.0 + 0j
    return mag, phase


def propagate_mean(params: ThinMediumParams) -> FreeSpaceResult:
    """Second-order fundamental-mode output through the thin medium.

    Warns when the perturbative validity flag fails; the formulas remain
    evaluable but their error is no longer O(phi_nl^3).
    """
    if not params.is_perturbative:
        warnings.warn(
            f"phi_nl = {params.phi_nl:.3g} exceeds the perturbative threshold "
            f"{params.perturbative_threshold:.3g}", stacklevel=2)
    phi = params.phi_nl
    gamma = phi**2 / 3.0
    amp_out = (1.0 + 1j * phi - phi**2 / 2.0 - gamma / 2.0) * params.amp_in
    return FreeSpaceResult(amp_out=amp_out, phi_nl=phi, gamma_nl=gamma,
                           v_add=added_noise_corr(params))


def added_noise_corr(params: ThinMediumParams) -> np.ndarray:
    """Phase-conjugate added-noise correlation (1/3) Khat^2 |A_in|^4 [[4,-2],[-2,1]].

    Rank one and positive semidefinite: a single conjugate noise channel.
    """
    scale = params.khat**2 * abs(params.amp_in) ** 4 / 3.0
    return scale * np.array([[4.0, -2.0], [-2.0, 1.0]])


def fluct_transform(params: ThinMediumParams,
                    alpha_in: np.ndarray) -> tuple[complex, complex]:
    """Modification of the fundamental-mode fluctuation to second order.

    alpha_in holds the incoming fluctuation amplitudes per mode 0..q_max.
    Returns (parametric term, added term): the parametric part only involves
    the fundamental mode, the added part collects the higher-order modes

        d_add = 2i phi sum_q lambda_q a_q + i phi sum_q lambda_q a_q^*
                - (3/2) phi^2 sum_qr lambda_q lambda_qr a_r
                - phi^2 sum_qr lambda_q lambda_qr a_r^*
    """
    alpha_in = np.asarray(alpha_in, dtype=complex)
    if alpha_in.shape != (params.q_max + 1,):
        raise ValueError(f"expected {params.q_max + 1} mode amplitudes")
    phi = params.phi_nl
    a0 = alpha_in[0]
    d_par = 1j * phi * (2 * a0 + np.conj(a0)) \
        - (phi**2 / 3.0) * (3 * a0 + 2 * np.conj(a0))
    lam = np.array([float(lambda_exact(q, 0, 0, 0))
                    for q in range(1, params.q_max + 1)])
    hi = alpha_in[1:]
    d_add = 2j * phi * np.dot(lam, hi) + 1j * phi * np.dot(lam, np.conj(hi))
    lam_qr = np.array([[float(lambda_pq(q, r))
                        for r in range(1, params.q_max + 1)]
                       for q in range(1, params.q_max + 1)])
    weights = lam @ lam_qr
    d_add += -1.5 * phi**2 * np.dot(weights, hi) - phi**2 * np.dot(weights, np.conj(hi))
    return complex(d_par), complex(d_add)


def integrate_coupled_modes(params: ThinMediumParams,
                            rtol: float = 1e-10) -> np.ndarray:
    """Oracle: integrate the truncated coupled mode equations through the medium.

    Explicit adaptive Runge-Kutta on modes 0..q_max; returns all mode
    amplitudes at the exit face.  Mode populations decay as 1/4^q, so the
    default truncation keeps the error below 1e-7.
    """
    n = params.q_max + 1
    tensor = coupling_tensor(n)
    y0 = np.zeros(n, dtype=complex)
    y0[0] = params.amp_in

    def rhs(_x, amps):
        return 1j * params.khat * np.einsum(
            "pqrs,q,r,s->p", tensor, np.conj(amps), amps, amps)

    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853",
                    rtol=rtol, atol=1e-14)
    if not sol.success:
        raise RuntimeError(f"mode integration failed: {sol.message}")
    return sol.y[:, -1]
