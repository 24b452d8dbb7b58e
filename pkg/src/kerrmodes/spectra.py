"""Measurable noise spectra from output correlation matrices.

A homodyne detector with local-oscillator spatial coefficients c_m and phase
theta measures the quadrature

    X = sum_m (c_m^* e^{-i theta} a_m + c_m e^{i theta} a_m^*),

whose spectrum is u V u^dagger with the selector u_{2m} = c_m^* e^{-i theta},
u_{2m+1} = c_m e^{i theta} acting on the stacked correlation matrix V (the
layout with C_{a a*} and C_{a* a} on the per-mode diagonal).  Values are
normalized so vacuum (shot noise) sits at 0 and perfect squeezing at -1;
noise can never go below -1.

The real symmetrized covariance in the (x, p) basis built by
:func:`quadrature_covariance` has vacuum = identity; a lossless cavity
driven by coherent/vacuum inputs emits a pure Gaussian state, so its
determinant is 1 and its eigenvalues come in reciprocal symplectic pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConventionError(RuntimeError):
    """A correlation matrix produced a complex measured spectrum."""


@dataclass(frozen=True)
class LocalOscillator:
    """Spatial coefficients (unit norm) and phase of the homodyne reference."""

    coefficients: tuple[complex, ...]
    phase: float = 0.0

    def __post_init__(self):
        norm = sum(abs(c) ** 2 for c in self.coefficients)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"LO coefficients must have unit norm, got {norm}")

    @classmethod
    def tem00(cls, n_modes: int, phase: float = 0.0) -> "LocalOscillator":
        return cls(coefficients=(1.0 + 0j,) + (0j,) * (n_modes - 1), phase=phase)

    def selector(self) -> np.ndarray:
        u = np.empty(2 * len(self.coefficients), dtype=complex)
        c = np.asarray(self.coefficients, dtype=complex)
        u[0::2] = np.conj(c) * np.exp(-1j * self.phase)
        u[1::2] = c * np.exp(1j * self.phase)
        return u


def _projected_noise(v: np.ndarray, u: np.ndarray) -> float:
    value = u @ v @ np.conj(u)
    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        raise ConventionError(
            f"measured spectrum has imaginary part {value.imag:.3e}; "
            "correlation matrix violates the Hermitian layout convention")
    return float(value.real)


def quadrature_noise(v: np.ndarray, lo: LocalOscillator) -> float:
    """Normalized homodyne noise of the LO-selected quadrature (shot = 0)."""
    return _projected_noise(v, lo.selector()) - 1.0


def optimum_quadrature(v: np.ndarray,
                       coefficients: tuple[complex, ...] | None = None
                       ) -> tuple[float, float]:
    """Minimize the quadrature noise over the LO phase in closed form.

    Projecting V onto the spatial LO vector leaves a phase-independent part
    A = C_{aa*} + C_{a*a} and a rotating part e^{-2i theta} C_{aa} + c.c.;
    the minimum A - 2 |C_{aa}| is reached at theta = (arg C_{aa} + pi)/2.
    Returns (theta_star, normalized value).
    """
    n = v.shape[0] // 2
    if coefficients is None:
        coefficients = (1.0 + 0j,) + (0j,) * (n - 1)
    c = np.asarray(coefficients, dtype=complex)
    direct = v[0::2, 0::2]
    conj = v[1::2, 1::2]
    cross = v[0::2, 1::2]
    steady = np.conj(c) @ direct @ c + c @ conj @ np.conj(c)
    rotating = np.conj(c) @ cross @ np.conj(c)
    if abs(steady.imag) > 1e-8 * max(1.0, abs(steady.real)):
        raise ConventionError("phase-independent noise part is not real")
    theta = (np.angle(rotating) + np.pi) / 2.0
    value = steady.real - 2.0 * abs(rotating) - 1.0
    return float(theta), float(value)


def quadrature_covariance(v: np.ndarray) -> np.ndarray:
    """Real symmetrized covariance in the basis (x_0, p_0, x_1, p_1, ...).

    x = a + a^*, p = -i (a - a^*); vacuum maps to the identity.  Only the
    symmetric part is observable; the antisymmetric remainder is the
    commutator and is discarded here.
    """
    n = v.shape[0] // 2
    t_block = np.array([[1.0, 1.0], [-1j, 1j]])
    t = np.kron(np.eye(n), t_block)
    x_block = np.array([[0.0, 1.0], [1.0, 0.0]])
    x = np.kron(np.eye(n), x_block)
    b = t @ v @ x @ t.T
    return np.real(b + b.T) / 2.0


def commutator_defect(v: np.ndarray) -> float:
    """Deviation of the antisymmetric covariance part from the canonical form.

    Zero (to rounding) whenever the state was produced by a metric-preserving
    scattering matrix acting on vacuum.
    """
    n = v.shape[0] // 2
    t_block = np.array([[1.0, 1.0], [-1j, 1j]])
    t = np.kron(np.eye(n), t_block)
    x_block = np.array([[0.0, 1.0], [1.0, 0.0]])
    x = np.kron(np.eye(n), x_block)
    b = t @ v @ x @ t.T
    j_block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    j = np.kron(np.eye(n), j_block)
    return float(np.max(np.abs((b - b.T) / 2.0 - 1j * j)))


def optimized_lo_noise(v: np.ndarray) -> tuple[tuple[complex, ...], float, float]:
    """Best quadrature over all LO spatial structures and phases.

    The minimal eigenvalue of the symmetrized (x, p) covariance is the lowest
    attainable noise; its eigenvector maps back to complex LO coefficients
    via d_m = g_{2m} + i g_{2m+1}.  Returns (coefficients, theta, value) with
    the global phase split off so the dominant coefficient is real positive.
    """
    q = quadrature_covariance(v)
    eigvals, eigvecs = np.linalg.eigh(q)
    g = eigvecs[:, 0]
    d = g[0::2] + 1j * g[1::2]
    d = d / np.linalg.norm(d)
    lead = d[int(np.argmax(np.abs(d)))]
    theta = float(np.angle(lead))
    coeffs = tuple(d * np.exp(-1j * theta))
    return coeffs, theta, float(eigvals[0] - 1.0)


def symplectic_eigenvalues(q: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a (x, p) covariance; all ones for a pure state."""
    n = q.shape[0] // 2
    j_block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    j = np.kron(np.eye(n), j_block)
    eig = np.linalg.eigvals(1j * j @ q)
    return np.sort(np.abs(eig))[n:]


def intensity_noise(v: np.ndarray, mean_outputs: np.ndarray) -> float:
    """Normalized total-intensity noise for the given mean output fields.

    The photocurrent fluctuation is delta N = sum_m (Abar_m^* a_m + c.c.);
    the shot level sum_m |Abar_m|^2 normalizes the result to 0 = shot.
    Raises on a dark field (zero total output intensity).
    """
    mean_outputs = np.asarray(mean_outputs, dtype=complex)
    shot = float(np.sum(np.abs(mean_outputs) ** 2))
    if shot <= 0.0:
        raise ValueError("intensity noise undefined for zero mean output")
    u = np.empty(2 * len(mean_outputs), dtype=complex)
    u[0::2] = np.conj(mean_outputs)
    u[1::2] = mean_outputs
    return _projected_noise(v, u) / shot - 1.0
