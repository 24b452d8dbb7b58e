"""Gauss-Laguerre transverse modes and generalized Laguerre polynomial arithmetic.

Polynomial coefficients are kept as exact rationals (``fractions.Fraction``)
so that the mode-overlap integrals computed downstream are exact.  The
numerical quadrature in :func:`overlap_quadrature` is the independent oracle
used to cross-check those exact values; it deliberately goes through
``scipy.special.eval_genlaguerre`` instead of the rational coefficients.

Conventions:
    * radial argument of the polynomials is v = 2 r^2 / w^2(x)
    * a mode u_p^(l) is normalized to unit power,
      integral |u_p^(l)|^2 r dr dtheta = 1
    * the mode phase is
      phi = -(pi/lambda) x r^2/(x^2 + l_R^2) + l theta + (2p+l+1) arctan(x/l_R)
      and the mode carries exp(-i phi); the arctan term is the Gouy phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial.laguerre import laggauss
from scipy.integrate import quad
from scipy.special import eval_genlaguerre


class QuadratureError(RuntimeError):
    """Raised when successive quadrature orders fail to agree."""


@lru_cache(maxsize=None)
def _laguerre_coefficients(p: int, l: int) -> tuple[Fraction, ...]:
    """Exact coefficients of L_p^(l)(v), index k = power of v."""
    if p == 0:
        return (Fraction(1),)
    if p == 1:
        return (Fraction(1 + l), Fraction(-1))
    # (p) L_p = (2p - 1 + l - v) L_{p-1} - (p - 1 + l) L_{p-2}
    a = _laguerre_coefficients(p - 1, l)
    b = _laguerre_coefficients(p - 2, l)
    out = [Fraction(0)] * (p + 1)
    for k, c in enumerate(a):
        out[k] += (2 * p - 1 + l) * c
        out[k + 1] -= c
    for k, c in enumerate(b):
        out[k] -= (p - 1 + l) * c
    return tuple(c / p for c in out)


@dataclass(frozen=True)
class LaguerrePolynomial:
    """Generalized Laguerre polynomial L_p^(l) with exact rational coefficients."""

    order: int
    superscript: int
    coefficients: tuple[Fraction, ...]

    def __call__(self, v):
        """Evaluate at float (or array) argument by Horner's scheme."""
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * v + float(c)
        return acc

    def eval_exact(self, v: Fraction) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * v + c
        return acc

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1


def laguerre_poly(p: int, l: int = 0) -> LaguerrePolynomial:
    """Exact L_p^(l) via the standard three-term recurrence.

    Requires p >= 0 and l >= 0.
    """
    if p < 0 or l < 0:
        raise ValueError(f"indices must be nonnegative, got p={p}, l={l}")
    return LaguerrePolynomial(p, l, _laguerre_coefficients(p, l))


@dataclass(frozen=True)
class BeamGeometry:
    """Gaussian beam geometry: wavelength and waist fix everything else."""

    wavelength: float
    waist: float

    @property
    def rayleigh_length(self) -> float:
        return math.pi * self.waist**2 / self.wavelength

    def beam_size(self, x: float) -> float:
        """1/e^2 radius w(x) = w0 sqrt(1 + x^2/l_R^2)."""
        return self.waist * math.sqrt(1.0 + (x / self.rayleigh_length) ** 2)


def mode_phase(p: int, l: int, r: float, theta: float, x: float,
               geom: BeamGeometry) -> float:
    """Phase of u_p^(l) at (r, theta, x): curvature + helical + Gouy terms."""
    l_r = geom.rayleigh_length
    curvature = -(math.pi / geom.wavelength) * x / (x**2 + l_r**2) * r**2
    gouy = (2 * p + l + 1) * math.atan2(x, l_r)
    return curvature + l * theta + gouy


def mode_value(p: int, l: int, point: tuple[float, float, float],
               geom: BeamGeometry) -> complex:
    """Complex amplitude u_p^(l)(r, theta, x) of a unit-power mode.

    The modulus depends on (r, x) only; the mode carries exp(-i phi) with
    the phase from :func:`mode_phase`.
    """
    if p < 0 or l < 0:
        raise ValueError("mode indices must be nonnegative")
    r, theta, x = point
    w = geom.beam_size(x)
    v = 2.0 * r**2 / w**2
    norm = math.sqrt(2.0 / math.pi) * math.sqrt(
        math.factorial(p) / math.factorial(p + l)) / w
    radial = (math.sqrt(v)) ** l * laguerre_poly(p, l)(v) * math.exp(-v / 2.0)
    return norm * radial * np.exp(-1j * mode_phase(p, l, r, theta, x, geom))


def mode_norm_quadrature(p: int, l: int, geom: BeamGeometry,
                         x: float = 0.0) -> float:
    """Power integral |u_p^(l)|^2 r dr dtheta by adaptive radial quadrature.

    Should be 1 for every mode; used as an independent normalization check.
    """
    w = geom.beam_size(x)

    def integrand(r):
        return abs(mode_value(p, l, (r, 0.0, x), geom)) ** 2 * r

    # split at the classical turning region; tail is a pure Gaussian decay
    total, _ = quad(integrand, 0.0, 10.0 * w * math.sqrt(p + l + 1),
                    limit=200, epsabs=1e-13, epsrel=1e-12)
    return 2.0 * math.pi * total


@lru_cache(maxsize=8)
def _laggauss_cached(n: int):
    return laggauss(n)


def overlap_quadrature(p: int, q: int, r: int, s: int,
                       l: int = 0, m: int = 0, n: int = 0, o: int = 0,
                       rtol: float = 1e-10) -> float:
    """Numerical value of 2 * int v^(l+m) L_p^(l) L_q^(m) L_r^(n) L_s^(o) e^(-2v) dv.

    Gauss-Laguerre quadrature with adaptive order doubling (64 -> 128 nodes).
    The integrand is a polynomial times e^(-2v), so convergence is exact at
    finite order; disagreement between the two orders raises
    :class:`QuadratureError`.
    """
    for idx in (p, q, r, s, l, m, n, o):
        if idx < 0:
            raise ValueError("indices must be nonnegative")

    def estimate(order: int) -> float:
        # substitute t = 2v so the weight matches exp(-t)
        t, weight = _laggauss_cached(order)
        v = t / 2.0
        f = v ** (l + m)
        f = f * eval_genlaguerre(p, l, v)
        f = f * eval_genlaguerre(q, m, v)
        f = f * eval_genlaguerre(r, n, v)
        f = f * eval_genlaguerre(s, o, v)
        return float(np.dot(weight, f))

    coarse, fine = estimate(64), estimate(128)
    scale = max(abs(coarse), abs(fine), 1.0)
    if abs(fine - coarse) > rtol * scale:
        raise QuadratureError(
            f"overlap quadrature did not converge for indices "
            f"({p},{q},{r},{s};{l},{m},{n},{o}): {coarse} vs {fine}")
    return fine
