"""Nondegenerate cavity with large transverse mode spacing: perturbative fluctuation theory.

When the transverse spacing phi_t is large against the cavity width, higher
order modes stay far off resonance and enter as first-order quantities.  The
fundamental-mode steady state then satisfies a scalar implicit equation with
loss and phase corrections scaling as 1/phi_t and 1/phi_t^2, controlled by
the constants mu1, mu2, mu3, and the fundamental-mode fluctuations obey

    V_out = (-1 + 2 G) V_in (-1 + 2 G)^dagger + 4 G V_add G^dagger

with the dressed propagator G = [(1 - i omega) + i eta phi0 + R0]^(-1).

2x2 matrices act on the stacked vector (a0, a0^*); eta = diag(1, -1).  The
correlation-matrix layout puts C_{a a*} and C_{a* a} on the diagonal, which
is exactly the layout that transforms with the plain conjugate transpose at
fixed omega.  Vacuum input is V_in = [[1, 0], [0, 0]].

The closed formulas keep every 1/phi_t and 1/phi_t^2 term; the untruncated
linear solve over N modes in :func:`brute_force_fluctuations` is the oracle
they are tested against.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cavity import CavityConfig, scattering_matrix, truncated_multimode_steady
from .coupling import MuConstants, mu_constants

ETA = np.diag([1.0, -1.0])
VACUUM = np.array([[1.0, 0.0], [0.0, 0.0]])


@dataclass(frozen=True)
class PerturbativeConfig:
    """Working regime for the large-spacing expansion.

    Warns below ``spacing_threshold``: the expansion parameter K I / phi_t is
    then no longer small and the closed formulas degrade.
    """

    k_nl: float
    phi0: float
    phi_t: float
    mu: MuConstants = field(default_factory=mu_constants)
    spacing_threshold: float = 10.0

    def __post_init__(self):
        if self.phi_t <= 0:
            raise ValueError("phi_t must be positive")
        if self.phi_t < self.spacing_threshold:
            warnings.warn(
                f"phi_t = {self.phi_t} below the large-spacing threshold "
                f"{self.spacing_threshold}; expansion accuracy degrades",
                stacklevel=3)

    def cavity_config(self, n_modes: int) -> CavityConfig:
        return CavityConfig.transverse_family(self.k_nl, self.phi0,
                                              self.phi_t, n_modes)


def _bracket(cfg: PerturbativeConfig, intensity: float) -> complex:
    """Complex factor B with 1 = B * A0 at the steady state.

    Loss and phase corrections take the modulus |A0|^2 = intensity; only the
    matrix entries downstream carry the phase of A0.
    """
    k, phi0, phi_t = cfg.k_nl, cfg.phi0, cfg.phi_t
    mu = cfg.mu
    i2 = intensity * intensity
    re = 1.0 + mu.mu2 * k**2 * i2 / phi_t**2
    im = (phi0 - k * intensity
          - 3.0 * mu.mu1 * k**2 * i2 / phi_t
          + 3.0 * mu.mu2 * phi0 * k**2 * i2 / phi_t**2
          - 15.0 * mu.mu3 * k**3 * i2 * intensity / phi_t**2)
    return complex(re, im)


def perturbative_roots(cfg: PerturbativeConfig, tol: float = 1e-13) -> list[complex]:
    """All steady-state amplitudes solving the implicit scalar equation.

    The fundamental intensity solves I |B(I)|^2 = 1; the roots of the pure
    Kerr cubic seed a damped Newton iteration, and A0 = 1/B(I) at each root.
    """
    k, phi0 = cfg.k_nl, cfg.phi0
    if k == 0:
        seeds = [1.0 / (1.0 + phi0**2)]
    else:
        cubic = np.roots([k**2, -2.0 * k * phi0, 1.0 + phi0**2, -1.0])
        seeds = sorted(float(r.real) for r in cubic
                       if abs(r.imag) < 1e-9 and 0 < r.real)

    def f(i: float) -> float:
        return i * abs(_bracket(cfg, i)) ** 2 - 1.0

    roots: list[float] = []
    for seed in seeds:
        x = seed
        converged = False
        for _ in range(100):
            fx = f(x)
            if abs(fx) < tol:
                converged = True
                break
            h = 1e-7 * max(abs(x), 1e-3)
            slope = (f(x + h) - f(x - h)) / (2 * h)
            if slope == 0:
                break
            step = fx / slope
            x_new = x - step
            while x_new <= 0:
                step *= 0.5
                x_new = x - step
            x = x_new
        if not converged:
            raise RuntimeError(
                f"perturbative steady state did not converge from seed {seed}")
        if all(abs(x - r) > 1e-9 for r in roots):
            roots.append(x)
    return [1.0 / _bracket(cfg, i) for i in sorted(roots)]


def steady_state_perturbative(cfg: PerturbativeConfig,
                              branch: str = "upper") -> complex:
    """Fundamental steady-state amplitude (highest or lowest intensity root)."""
    roots = perturbative_roots(cfg)
    return roots[-1] if branch == "upper" else roots[0]


def _structure_blocks(a0: complex):
    i0 = abs(a0) ** 2
    a2 = a0 * a0
    a2c = np.conj(a2)
    b_plain = np.array([[2 * i0, a2], [a2c, 2 * i0]])          # Hermitian block
    b_eta = b_plain @ ETA                                       # phase-shift block
    return i0, a2, a2c, b_plain, b_eta


def r0_matrix(a0: complex, cfg: PerturbativeConfig, omega: float) -> np.ndarray:
    """Nonlinear self-energy of the fundamental mode, all 1/phi_t^2 terms kept.

    Four contributions: the mu2 loss block with its -3 i mu2 omega K^2 I^2
    frequency shift, the bare Kerr phase block, the (mu1 - mu2 phi0/phi_t)
    phase block at 1/phi_t, and the mu3 block at 1/phi_t^2.
    """
    k, phi0, phi_t, mu = cfg.k_nl, cfg.phi0, cfg.phi_t, cfg.mu
    i0, a2, a2c, b_plain, b_eta = _structure_blocks(a0)
    loss = mu.mu2 * k**2 / phi_t**2 * np.array(
        [[3 * i0**2, 2 * i0 * a2], [2 * i0 * a2c, 3 * i0**2]])
    loss_omega = -3j * mu.mu2 * omega * k**2 * i0**2 / phi_t**2 * np.eye(2)
    kerr = -1j * k * np.array([[2 * i0, a2], [-a2c, -2 * i0]])
    mu1_block = -3j * (k**2 * i0 / phi_t) * (mu.mu1 - mu.mu2 * phi0 / phi_t) * \
        np.array([[3 * i0, 2 * a2], [-2 * a2c, -3 * i0]])
    mu3_block = -12j * mu.mu3 * k**3 * i0**2 / phi_t**2 * \
        np.array([[4 * i0, 3 * a2], [-3 * a2c, -4 * i0]])
    return loss + loss_omega + kerr + mu1_block + mu3_block


def g0_tilde(a0: complex, cfg: PerturbativeConfig, omega: float) -> np.ndarray:
    """Dressed fundamental-mode propagator [(1 - i omega) + i eta phi0 + R0]^(-1)."""
    kernel = (1.0 - 1j * omega) * np.eye(2) + 1j * cfg.phi0 * ETA \
        + r0_matrix(a0, cfg, omega)
    return np.linalg.inv(kernel)


@lru_cache(maxsize=4)
def _lambda_weights(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    from .coupling import lambda_exact, lambda_pq
    lam = np.array([float(lambda_exact(q, 0, 0, 0)) for q in range(1, cutoff + 1)])
    lam_qr = np.array([[float(lambda_pq(q, r)) for r in range(1, cutoff + 1)]
                       for q in range(1, cutoff + 1)])
    return lam, lam_qr


def transfer_matrix(q: int, a0: complex, cfg: PerturbativeConfig,
                    omega: float) -> np.ndarray:
    """Transfer of input fluctuations of mode q >= 1 into the fundamental.

    Leading term -i lambda_q K/(q phi_t) with every 1/phi_t^2 correction; the
    matrix structures are fixed by consistency with the added-noise
    correlation (phase-conjugate sign pattern), the scalar coefficients follow
    the closed-form expansion.
    """
    if q < 1:
        raise ValueError("transfer channels are the modes q >= 1")
    k, phi0, phi_t, mu = cfg.k_nl, cfg.phi0, cfg.phi_t, cfg.mu
    i0, a2, a2c, b_plain, b_eta = _structure_blocks(a0)
    lam, lam_qr = _lambda_weights(mu.cutoff)
    lam_q = lam[q - 1]
    inv_r = 1.0 / np.arange(1, mu.cutoff + 1)
    cross = float(np.dot(lam * inv_r, lam_qr[q - 1])) / q  # sum_r lam_r lam_qr/(q r)
    coeff = (-1j * lam_q * k / (q * phi_t)
             + 1j * lam_q * phi0 * k / (q**2 * phi_t**2)
             - 2j * (k**2 * i0 / phi_t**2) * cross)
    # second-order block: -i K^2/phi_t^2 sum_r lambda_q lambda_qr/(q r) (B^2 eta)
    sum_qr = float(np.dot(lam_qr[q - 1], inv_r)) * lam_q / q
    b2_eta = (b_plain @ b_plain) @ ETA
    return (coeff * b_eta
            - 1j * (k**2 / phi_t**2) * sum_qr * b2_eta
            + (lam_q * k / (q**2 * phi_t**2)) * (1.0 - 1j * omega) * b_plain)


def v_add(a0: complex, cfg: PerturbativeConfig) -> np.ndarray:
    """Added-noise correlation mu2 K^2 I/phi_t^2 [[4I, -2 A0^2], [-2 A0*^2, I]].

    Phase-conjugate structure of the free-space result, suppressed by the
    cavity mode selection as 1/phi_t^2.
    """
    k, phi_t, mu = cfg.k_nl, cfg.phi_t, cfg.mu
    i0 = abs(a0) ** 2
    a2 = a0 * a0
    return mu.mu2 * k**2 * i0 / phi_t**2 * np.array(
        [[4 * i0, -2 * a2], [-2 * np.conj(a2), i0]])


def v_add_from_transfers(a0: complex, cfg: PerturbativeConfig, omega: float,
                         n_channels: int = 40) -> np.ndarray:
    """Added-noise correlation assembled channel by channel (consistency check).

    Sums i eta T_q V_vac (i eta T_q)^dagger over vacuum input channels; agrees
    with :func:`v_add` at leading order in 1/phi_t.
    """
    total = np.zeros((2, 2), dtype=complex)
    for q in range(1, n_channels + 1):
        c = 1j * ETA @ transfer_matrix(q, a0, cfg, omega)
        total += c @ VACUUM @ c.conj().T
    return total


def output_correlation(cfg: PerturbativeConfig, omega: float,
                       a0: complex | None = None,
                       v_in: np.ndarray | None = None) -> np.ndarray:
    """Fundamental-mode output correlation V_out at fluctuation frequency omega.

    Input transformed by the cavity plus added noise from nonlinear coupling;
    v_in defaults to vacuum.
    """
    if a0 is None:
        a0 = steady_state_perturbative(cfg)
    if v_in is None:
        v_in = VACUUM
    g = g0_tilde(a0, cfg, omega)
    refl = -np.eye(2) + 2.0 * g
    return refl @ v_in @ refl.conj().T + 4.0 * g @ v_add(a0, cfg) @ g.conj().T


# -- untruncated oracle ----------------------------------------------------------

def brute_force_fluctuations(cfg: PerturbativeConfig, n_modes: int,
                             omega: float,
                             steady: np.ndarray | None = None) -> np.ndarray:
    """Scattering matrix of the full truncated mode set, no expansion.

    Solves the 2N-dimensional linear fluctuation system at the exact
    truncated steady state; a singular kernel (a critical point) surfaces as
    numpy.linalg.LinAlgError, which is a physical divergence, not a bug.
    """
    config = cfg.cavity_config(n_modes)
    if steady is None:
        steady = truncated_multimode_steady(config).amps
    return scattering_matrix(config, steady, omega)


def brute_output_correlation(cfg: PerturbativeConfig, n_modes: int,
                             omega: float,
                             steady: np.ndarray | None = None) -> np.ndarray:
    """Full 2N x 2N output correlation for vacuum inputs in every mode."""
    s = brute_force_fluctuations(cfg, n_modes, omega, steady)
    v_in = np.kron(np.eye(n_modes), VACUUM)
    return s @ v_in @ s.conj().T
