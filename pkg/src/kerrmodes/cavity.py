"""Driven single-ended Kerr cavity: steady states, stability and bistability curves.

All quantities are normalized: amplitudes to the resonant empty-cavity value,
detunings and fluctuation frequencies to the cavity half-width, time to the
cavity lifetime.  A mode set {p} with detunings phi_p evolves as

    dA_p/dtau = A_p^in - (1 + i phi_p) A_p + i K sum_{qrs} lambda_pqrs A_q^* A_r A_s

and the output field is A^out = -A^in + 2 A.  Fluctuations live in the
stacked vector (a_0, a_0^*, a_1, a_1^*, ...); the drift matrix returned by
:func:`drift_matrix` is the Jacobian of the right-hand side in that basis and
doubles as the Newton matrix, the stability matrix and the resolvent kernel
of the scattering matrix S(omega) = -1 + 2 (-i omega - D)^(-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .coupling import lambda_exact


class ConvergenceError(RuntimeError):
    """Newton or continuation failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@lru_cache(maxsize=32)
def coupling_tensor(orders: tuple[int, ...]) -> np.ndarray:
    """Float tensor lambda[a,b,c,d] over the given transverse orders."""
    n = len(orders)
    t = np.empty((n, n, n, n))
    for a, p in enumerate(orders):
        for b, q in enumerate(orders):
            for c, r in enumerate(orders):
                for d, s in enumerate(orders):
                    t[a, b, c, d] = float(lambda_exact(p, q, r, s))
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class CavityConfig:
    """Normalized cavity working regime.

    detunings are per-mode normalized phase shifts; orders are the transverse
    mode orders used to look up coupling coefficients.  The drive defaults to
    a unit input into the fundamental mode.
    """

    k_nl: float
    detunings: tuple[float, ...]
    orders: tuple[int, ...]
    drive: tuple[complex, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.k_nl < 0:
            raise ValueError("nonlinearity K must be >= 0")
        if len(self.detunings) != len(self.orders):
            raise ValueError("detunings and orders must have equal length")
        if 0 not in self.orders:
            raise ValueError("mode set must contain the fundamental (p=0)")
        if self.drive is None:
            drive = (1.0 + 0j,) + (0j,) * (len(self.orders) - 1)
            object.__setattr__(self, "drive", drive)
        elif len(self.drive) != len(self.orders):
            raise ValueError("drive must have one amplitude per mode")

    @property
    def n_modes(self) -> int:
        return len(self.orders)

    @property
    def tensor(self) -> np.ndarray:
        return coupling_tensor(self.orders)

    def shifted(self, phi: float) -> "CavityConfig":
        """Config with all detunings rigidly shifted by phi (a cavity scan)."""
        return replace(self, detunings=tuple(d + phi for d in self.detunings))

    @classmethod
    def transverse_family(cls, k_nl: float, phi0: float, phi_t: float,
                          n_modes: int) -> "CavityConfig":
        """One longitudinal family: phi_p = phi0 + p * phi_t, p = 0..n_modes-1."""
        return cls(k_nl=k_nl,
                   detunings=tuple(phi0 + p * phi_t for p in range(n_modes)),
                   orders=tuple(range(n_modes)))

    @classmethod
    def two_mode(cls, k_nl: float, p: int, phi_a: float,
                 phi_b: float) -> "CavityConfig":
        """Fundamental plus one transverse mode of order p with free detunings."""
        return cls(k_nl=k_nl, detunings=(phi_a, phi_b), orders=(0, p))


def residual(config: CavityConfig, amps: np.ndarray) -> np.ndarray:
    """Right-hand side of the evolution equation (zero at a steady state)."""
    amps = np.asarray(amps, dtype=complex)
    nl = np.einsum("pqrs,q,r,s->p", config.tensor, np.conj(amps), amps, amps)
    return (np.asarray(config.drive, dtype=complex)
            - (1.0 + 1j * np.asarray(config.detunings)) * amps
            + 1j * config.k_nl * nl)


def drift_matrix(config: CavityConfig, amps: np.ndarray) -> np.ndarray:
    """Jacobian of the dynamics in the stacked (a, a^*) basis, shape (2N, 2N).

    Row 2p is the equation for a_p, row 2p+1 its conjugate; the conjugate
    rows are the elementwise conjugates of the direct rows with the column
    pairs swapped.
    """
    amps = np.asarray(amps, dtype=complex)
    n = config.n_modes
    phis = np.asarray(config.detunings)
    d_direct = 2j * config.k_nl * np.einsum(
        "pqrs,r,s->pq", config.tensor, np.conj(amps), amps)
    d_conj = 1j * config.k_nl * np.einsum(
        "pqrs,r,s->pq", config.tensor, amps, amps)
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[0::2, 0::2] = d_direct - np.diag(1.0 + 1j * phis)
    out[0::2, 1::2] = d_conj
    out[1::2, 1::2] = np.conj(out[0::2, 0::2])
    out[1::2, 0::2] = np.conj(out[0::2, 1::2])
    return out


def scattering_matrix(config: CavityConfig, amps: np.ndarray,
                      omega: float) -> np.ndarray:
    """Input-output scattering matrix S(omega) = -1 + 2 (-i omega - D)^(-1).

    Singular exactly at a critical point, where the linearized fluctuations
    diverge; numpy raises LinAlgError there, which callers report as a
    physical divergence.
    """
    d = drift_matrix(config, amps)
    n = d.shape[0]
    kernel = -1j * omega * np.eye(n) - d
    return -np.eye(n) + 2.0 * np.linalg.inv(kernel)


@dataclass(frozen=True)
class SteadyState:
    """A steady solution with its linear stability data."""

    config: CavityConfig
    amps: np.ndarray
    eigenvalues: np.ndarray
    residual_norm: float
    branch: str = "upper"

    @property
    def outputs(self) -> np.ndarray:
        return -np.asarray(self.config.drive, dtype=complex) + 2.0 * self.amps

    @property
    def intensity(self) -> float:
        return float(abs(self.amps[0]) ** 2)

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))


def _make_state(config: CavityConfig, amps: np.ndarray,
                branch: str = "upper") -> SteadyState:
    res = float(np.max(np.abs(residual(config, amps))))
    eigs = np.linalg.eigvals(drift_matrix(config, amps))
    return SteadyState(config=config, amps=np.asarray(amps, complex),
                       eigenvalues=eigs, residual_norm=res, branch=branch)


def stability_eigenvalues(config: CavityConfig, amps: np.ndarray) -> np.ndarray:
    """Eigenvalues of the drift matrix at the given steady state."""
    return np.linalg.eigvals(drift_matrix(config, amps))


def _stacked(vec: np.ndarray) -> np.ndarray:
    out = np.empty(2 * len(vec), dtype=complex)
    out[0::2] = vec
    out[1::2] = np.conj(vec)
    return out


def newton_steady(config: CavityConfig, guess: np.ndarray,
                  tol: float = 1e-12, max_iter: int = 80,
                  damping: float = 1.0) -> np.ndarray:
    """Newton iteration on the steady-state equations from the given seed.

    The linear solve uses the stacked drift matrix, whose conjugate structure
    keeps the update consistent between a and a^*.  Raises
    :class:`ConvergenceError` with the last residual on failure.
    """
    amps = np.asarray(guess, dtype=complex).copy()
    last = np.inf
    for _ in range(max_iter):
        r = residual(config, amps)
        last = float(np.max(np.abs(r)))
        if last < tol:
            return amps
        d = drift_matrix(config, amps)
        try:
            delta = np.linalg.solve(d, -_stacked(r))
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Newton matrix: {exc}", last)
        amps = amps + damping * delta[0::2]
    raise ConvergenceError(
        f"Newton did not reach tol={tol} in {max_iter} iterations", last)


def _homotopy_seed(config: CavityConfig) -> np.ndarray:
    """Solve far from any seed by growing K from the linear cavity."""
    amps = np.asarray(config.drive, complex) / (1.0 + 1j * np.asarray(config.detunings))
    steps = 1
    while steps <= 64:
        try:
            current = amps
            for k in np.linspace(config.k_nl / steps, config.k_nl, steps):
                current = newton_steady(replace(config, k_nl=float(k)), current)
            return current
        except ConvergenceError:
            steps *= 2
    raise ConvergenceError(f"homotopy in K failed for {config}")


def single_mode_steady(phi0: float, k_nl: float) -> list[SteadyState]:
    """All real roots of I [1 + (phi0 - K I)^2] = 1 for the single-mode cavity.

    Between one and three roots; each is returned with amplitude
    A = 1 / (1 + i (phi0 - K I)), stability eigenvalues and a branch label by
    intensity ordering.
    """
    if k_nl < 0:
        raise ValueError("K must be >= 0")
    if k_nl == 0:
        intensities = [1.0 / (1.0 + phi0**2)]
    else:
        coeffs = [k_nl**2, -2.0 * k_nl * phi0, 1.0 + phi0**2, -1.0]
        roots = np.roots(coeffs)
        intensities = sorted(
            float(r.real) for r in roots
            if abs(r.imag) < 1e-9 * max(1.0, abs(r)) and r.real > 0)
    config = CavityConfig(k_nl=k_nl, detunings=(phi0,), orders=(0,))
    labels = {1: ["upper"], 2: ["lower", "upper"],
              3: ["lower", "middle", "upper"]}[len(intensities)]
    states = []
    for intensity, label in zip(intensities, labels):
        amp = 1.0 / (1.0 + 1j * (phi0 - k_nl * intensity))
        amps = newton_steady(config, np.array([amp]))
        states.append(_make_state(config, amps, branch=label))
    return states


def truncated_multimode_steady(config: CavityConfig,
                               guess: np.ndarray | None = None,
                               tol: float = 1e-12) -> SteadyState:
    """Steady state of the truncated N-mode system by Newton iteration.

    Seeded from the linear cavity with a homotopy in K when no guess is
    supplied; callers doing parameter scans should re-seed via continuation.
    """
    if guess is None:
        amps = _homotopy_seed(config)
    else:
        amps = newton_steady(config, guess, tol=tol)
    amps = newton_steady(config, amps, tol=tol)
    return _make_state(config, amps)


# -- pseudo-arclength continuation ---------------------------------------------

def _real_view(amps: np.ndarray) -> np.ndarray:
    return np.concatenate([amps.real, amps.imag])


def _complex_view(x: np.ndarray) -> np.ndarray:
    n = len(x) // 2
    return x[:n] + 1j * x[n:]


def _real_jacobian(config: CavityConfig, amps: np.ndarray) -> np.ndarray:
    """Real 2N x 2N Jacobian d(Re R, Im R)/d(Re A, Im A) from the drift matrix."""
    d = drift_matrix(config, amps)
    n = config.n_modes
    d1 = d[0::2, 0::2]  # dR/dA
    d2 = d[0::2, 1::2]  # dR/dA^*
    plus, minus = d1 + d2, d1 - d2
    out = np.empty((2 * n, 2 * n))
    out[:n, :n] = plus.real
    out[:n, n:] = -minus.imag
    out[n:, :n] = plus.imag
    out[n:, n:] = minus.real
    return out


def _scan_residual(config: CavityConfig, x: np.ndarray, phi: float) -> np.ndarray:
    r = residual(config.shifted(phi), _complex_view(x))
    return np.concatenate([r.real, r.imag])


def _scan_jacobian(config: CavityConfig, x: np.ndarray, phi: float) -> np.ndarray:
    """Extended Jacobian [dF/dx | dF/dphi] for the rigid detuning scan."""
    amps = _complex_view(x)
    jx = _real_jacobian(config.shifted(phi), amps)
    dphi = -1j * amps  # dR_p/dphi = -i A_p for a rigid shift
    return np.hstack([jx, np.concatenate([dphi.real, dphi.imag])[:, None]])


@dataclass(frozen=True)
class BistabilityCurve:
    """Solution curve of a detuning scan, ordered by arclength.

    phi/intensity/stable/branch are per-sample arrays; amps holds the full
    mode amplitudes per sample; turning_points are the (phi, intensity) folds.
    """

    config: CavityConfig
    phi: np.ndarray
    intensity: np.ndarray
    amps: np.ndarray
    stable: np.ndarray
    branch: np.ndarray
    turning_points: list[tuple[float, float]] = field(default_factory=list)

    def states_at(self, phi: float, tol: float = 1e-9) -> list[SteadyState]:
        """All coexisting steady states at the given detuning, polished by Newton."""
        cfg = self.config.shifted(phi)
        found: list[np.ndarray] = []
        for seed in _roots_at_phi(self, phi):
            amps = newton_steady(cfg, seed, tol=tol)
            if all(np.max(np.abs(amps - other)) > 1e-7 for other in found):
                found.append(amps)
        found.sort(key=lambda a: abs(a[0]) ** 2)
        return [_make_state(cfg, amps, branch=label)
                for amps, label in zip(found, _rank_labels(len(found)))]

    def working_point(self, epsilon: float = 0.02) -> SteadyState:
        """Stable state on the upper branch at phi_t - epsilon * W.

        phi_t is the fold terminating the upper branch (the turning point of
        highest intensity), W the width of the bistable detuning interval.
        Falls back to the intensity maximum when the curve has no fold.
        """
        if not self.turning_points:
            i = int(np.argmax(self.intensity))
            phi_w = float(self.phi[i])
        else:
            phi_t, _ = max(self.turning_points, key=lambda t: t[1])
            fold_phis = [t[0] for t in self.turning_points]
            width = max(fold_phis) - min(fold_phis)
            if width == 0.0:
                width = 0.05 * (self.phi.max() - self.phi.min())
            phi_w = phi_t - epsilon * width
        stable = [s for s in self.states_at(phi_w) if s.stable]
        if not stable:
            raise ConvergenceError(f"no stable state at phi={phi_w}")
        return max(stable, key=lambda s: s.intensity)


def _rank_labels(count: int) -> list[str]:
    return {1: ["upper"], 2: ["lower", "upper"],
            3: ["lower", "middle", "upper"]}.get(
        count, [f"rank{i}" for i in range(count)])


def _roots_at_phi(curve: BistabilityCurve, phi: float) -> list[np.ndarray]:
    """Seed amplitudes for every curve crossing of the vertical line at phi."""
    seeds = []
    phis = curve.phi
    for i in range(len(phis) - 1):
        lo, hi = phis[i], phis[i + 1]
        if (lo - phi) * (hi - phi) <= 0 and lo != hi:
            w = (phi - lo) / (hi - lo)
            seeds.append((1 - w) * curve.amps[i] + w * curve.amps[i + 1])
    # deduplicate crossings that meet at a sample point
    unique: list[np.ndarray] = []
    for s in seeds:
        if all(np.max(np.abs(s - u)) > 1e-7 for u in unique):
            unique.append(s)
    return unique


def bistability_scan(config: CavityConfig, phi_min: float, phi_max: float,
                     max_steps: int = 4000, ds: float = 0.02,
                     ds_min: float = 1e-7, ds_max: float = 0.05,
                     tol: float = 1e-11) -> BistabilityCurve:
    """Trace the steady-state curve over a rigid detuning scan.

    Pseudo-arclength continuation with a tangent predictor and Newton
    corrector; the step adapts on the corrector's iteration count and the
    scan aborts below ``ds_min``.  The detunings in ``config`` are treated as
    offsets relative to the scanned detuning phi.

    Captures every branch of the connected solution curve, including the
    folds, which are refined and reported as turning points.
    """
    n = config.n_modes
    start = truncated_multimode_steady(config.shifted(phi_min)).amps
    z = np.append(_real_view(start), phi_min)
    tangent = np.zeros(2 * n + 1)
    tangent[-1] = 1.0

    phis, amps_list, tangents = [], [], []

    def corrector(z_pred: np.ndarray, t_ref: np.ndarray, ds_now: float,
                  z_prev: np.ndarray) -> np.ndarray | None:
        zc = z_pred.copy()
        for _ in range(12):
            f = _scan_residual(config, zc[:-1], zc[-1])
            g = np.dot(t_ref, zc - z_prev) - ds_now
            if max(np.max(np.abs(f)), abs(g)) < tol:
                return zc
            jac = _scan_jacobian(config, zc[:-1], zc[-1])
            big = np.vstack([jac, t_ref[None, :]])
            rhs = -np.append(f, g)
            try:
                zc = zc + np.linalg.solve(big, rhs)
            except np.linalg.LinAlgError:
                return None
        return None

    def tangent_at(z_now: np.ndarray, t_prev: np.ndarray) -> np.ndarray:
        jac = _scan_jacobian(config, z_now[:-1], z_now[-1])
        big = np.vstack([jac, t_prev[None, :]])
        rhs = np.append(np.zeros(2 * n), 1.0)
        t = np.linalg.solve(big, rhs)
        return t / np.linalg.norm(t)

    tangent = tangent_at(z, tangent)
    if tangent[-1] < 0:
        tangent = -tangent

    phis.append(z[-1]); amps_list.append(_complex_view(z[:-1])); tangents.append(tangent)

    step = ds
    for _ in range(max_steps):
        z_pred = z + step * tangent
        z_new = corrector(z_pred, tangent, step, z)
        if z_new is None:
            step *= 0.5
            if step < ds_min:
                raise ConvergenceError(
                    f"continuation stalled at phi={z[-1]:.6g} (step < {ds_min})")
            continue
        t_new = tangent_at(z_new, tangent)
        if np.dot(t_new, tangent) < 0:
            t_new = -t_new
        z, tangent = z_new, t_new
        phis.append(z[-1]); amps_list.append(_complex_view(z[:-1])); tangents.append(tangent)
        step = min(step * 1.3, ds_max)
        leaving = (z[-1] > phi_max and tangent[-1] > 0) or \
                  (z[-1] < phi_min and tangent[-1] < 0)
        if leaving:
            break
    else:
        raise ConvergenceError(
            f"continuation exceeded {max_steps} steps before leaving the scan range")

    phi_arr = np.array(phis)
    amps_arr = np.array(amps_list)
    folds = _refine_turning_points(config, phis, amps_list, tangents, corrector)

    stable = np.empty(len(phis), dtype=bool)
    intensity = np.abs(amps_arr[:, 0]) ** 2
    for i, (p, a) in enumerate(zip(phis, amps_list)):
        eigs = np.linalg.eigvals(drift_matrix(config.shifted(p), a))
        stable[i] = bool(np.all(eigs.real < 1e-9))
    branch = _label_branches(phi_arr, intensity, folds)
    return BistabilityCurve(config=config, phi=phi_arr, intensity=intensity,
                            amps=amps_arr, stable=stable, branch=branch,
                            turning_points=folds)


def _refine_turning_points(config, phis, amps_list, tangents, corrector):
    """Bisect each tangent sign change down to the fold."""
    folds = []
    for i in range(len(phis) - 1):
        s1, s2 = tangents[i][-1], tangents[i + 1][-1]
        if s1 * s2 >= 0:
            continue
        z1 = np.append(np.concatenate([amps_list[i].real, amps_list[i].imag]), phis[i])
        z2 = np.append(np.concatenate([amps_list[i + 1].real, amps_list[i + 1].imag]),
                       phis[i + 1])
        t1 = tangents[i]
        for _ in range(60):
            gap = np.linalg.norm(z2 - z1)
            if gap < 1e-12:
                break
            zm = corrector(0.5 * (z1 + z2), t1, 0.5 * gap, z1)
            if zm is None:
                break
            jac = _scan_jacobian(config, zm[:-1], zm[-1])
            big = np.vstack([jac, t1[None, :]])
            tm = np.linalg.solve(big, np.append(np.zeros(len(zm) - 1), 1.0))
            tm /= np.linalg.norm(tm)
            if tm[-1] * s1 > 0:
                z1 = zm
            else:
                z2 = zm
        fold_amps = _complex_view(z1[:-1])
        folds.append((float(z1[-1]), float(abs(fold_amps[0]) ** 2)))
    return folds


def _label_branches(phi: np.ndarray, intensity: np.ndarray,
                    folds: list[tuple[float, float]]) -> np.ndarray:
    """Branch labels by intensity ordering at fixed phi, segment-wise.

    Segments are delimited by the folds; each segment gets the majority rank
    of its points among the curve's other crossings of the same detuning.
    A fold-free (monostable) curve is a single upper branch.
    """
    labels = np.full(len(phi), "upper", dtype=object)
    if not folds:
        return labels
    # fold positions along the curve = local extrema of phi
    idx = [0]
    dphi = np.diff(phi)
    for i in range(1, len(dphi)):
        if dphi[i - 1] * dphi[i] < 0:
            idx.append(i)
    idx.append(len(phi) - 1)
    for seg_start, seg_end in zip(idx[:-1], idx[1:]):
        seg = slice(seg_start, seg_end + 1)
        ranks, counts = [], []
        for j in range(seg_start, seg_end, max(1, (seg_end - seg_start) // 8)):
            # sample between grid points so the segment's own crossing is unique
            phi0 = 0.5 * (phi[j] + phi[j + 1])
            own = 0.5 * (intensity[j] + intensity[j + 1])
            crossings = _crossing_intensities(phi, intensity, phi0)
            if len(crossings) < 2:
                continue
            ordered = np.sort(crossings)
            ranks.append(int(np.argmin(np.abs(ordered - own))))
            counts.append(len(ordered))
        if not ranks:
            labels[seg] = "upper"
            continue
        rank, count = int(np.median(ranks)), int(np.median(counts))
        labels[seg] = "lower" if rank == 0 else (
            "upper" if rank >= count - 1 else "middle")
    return labels


def _crossing_intensities(phi: np.ndarray, intensity: np.ndarray,
                          phi0: float) -> list[float]:
    vals: list[float] = []
    for i in range(len(phi) - 1):
        if (phi[i] - phi0) * (phi[i + 1] - phi0) <= 0 and phi[i] != phi[i + 1]:
            w = (phi0 - phi[i]) / (phi[i + 1] - phi[i])
            value = float((1 - w) * intensity[i] + w * intensity[i + 1])
            if all(abs(value - v) > 1e-9 * (1 + abs(value)) for v in vals):
                vals.append(value)
    return vals
