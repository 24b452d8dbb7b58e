"""Exact transverse mode-coupling coefficients for a thin Kerr medium.

The coefficient lambda_pqrs^(lmno) is the overlap integral

    2 * int_0^inf v^(l+m) L_p^(l) L_q^(m) L_r^(n) L_s^(o) e^(-2v) dv

evaluated exactly: the polynomial product is expanded with rational
coefficients and integrated term by term using
int v^k e^(-2v) dv = k! / 2^(k+1).  A selection rule forces the value to
zero unless l + m = n + o (circular symmetry).

Values are memoized on a canonical index representative: the integrand is
invariant under (p,l)<->(q,m), (r,n)<->(s,o) and, on the selection-rule
surface, under swapping the two pairs; for l=m=n=o=0 it is invariant under
all permutations of (p,q,r,s).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .modes import BeamGeometry, _laguerre_coefficients


def _poly_mul(a: tuple[Fraction, ...], b: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return tuple(out)


@lru_cache(maxsize=None)
def _moment(k: int) -> Fraction:
    """Exact int_0^inf v^k e^(-2v) dv = k! / 2^(k+1)."""
    return Fraction(math.factorial(k), 2 ** (k + 1))


@lru_cache(maxsize=None)
def _lambda_canonical(pairs_in: tuple, pairs_out: tuple) -> Fraction:
    weight = pairs_in[0][1] + pairs_in[1][1]
    poly: tuple[Fraction, ...] = (Fraction(1),)
    for p, l in pairs_in + pairs_out:
        poly = _poly_mul(poly, _laguerre_coefficients(p, l))
    return 2 * sum(c * _moment(k + weight) for k, c in enumerate(poly) if c)


def lambda_exact(p: int, q: int, r: int, s: int,
                 l: int = 0, m: int = 0, n: int = 0, o: int = 0) -> Fraction:
    """Exact rational coupling coefficient lambda_pqrs^(lmno).

    Returns 0 whenever the selection rule l + m = n + o is violated.
    """
    for idx in (p, q, r, s, l, m, n, o):
        if idx < 0:
            raise ValueError("indices must be nonnegative")
    if l + m != n + o:
        return Fraction(0)
    pair_in = tuple(sorted(((p, l), (q, m))))
    pair_out = tuple(sorted(((r, n), (s, o))))
    pair_in, pair_out = sorted((pair_in, pair_out))
    if l == m == n == o == 0:
        # full permutation symmetry: one flat sorted key
        key = tuple(sorted((p, q, r, s)))
        pair_in = ((key[0], 0), (key[1], 0))
        pair_out = ((key[2], 0), (key[3], 0))
    return _lambda_canonical(pair_in, pair_out)


# -- named shortcuts used by the cavity models --------------------------------

def lambda_p(p: int) -> Fraction:
    """Fundamental-to-mode-p transfer coefficient; equals 1/2^p."""
    return lambda_exact(p, 0, 0, 0)


def lambda_pq(p: int, q: int) -> Fraction:
    """Two-index coefficient; equals (p+q)! / (2^(p+q) p! q!)."""
    return lambda_exact(p, q, 0, 0)


def lambda_pp(p: int) -> Fraction:
    """Cross-Kerr coefficient (2p)! / (4^p (p!)^2), ~ sqrt(1/(p pi)) for large p."""
    return lambda_exact(p, p, 0, 0)


def lambda_ppp0(p: int) -> Fraction:
    return lambda_exact(p, p, p, 0)


def lambda_pppp(p: int) -> Fraction:
    return lambda_exact(p, p, p, p)


_SHORTCUTS = {
    "lambda_p": lambda p, q: lambda_exact(p, 0, 0, 0),
    "lambda_pq": lambda p, q: lambda_exact(p, q, 0, 0),
    "lambda_pp": lambda p, q: lambda_exact(p, p, 0, 0),
    "lambda_ppp0": lambda p, q: lambda_exact(p, p, p, 0),
    "lambda_pppp": lambda p, q: lambda_exact(p, p, p, p),
}


def lambda_shortcuts(kind: str, p: int, q: int = 0) -> Fraction:
    """Named coefficients by keyword, delegated to :func:`lambda_exact`."""
    try:
        fn = _SHORTCUTS[kind]
    except KeyError:
        raise ValueError(f"unknown shortcut {kind!r}; choose from {sorted(_SHORTCUTS)}")
    return fn(p, q)


@dataclass(frozen=True)
class GouyFactor:
    """Axial factor of the full coupling coefficient at position x.

    phase has unit modulus, exp[-2i (p+q-r-s) arctan(x/l_R)]; the transverse
    normalization is 1/(pi w^2(x)).  For a thin medium at the waist the phase
    is 1 and the cavity models absorb the normalization into the coupling
    strength, so they never use this type directly.
    """

    phase: complex
    transverse_norm: float


def gouy_factor(p: int, q: int, r: int, s: int, x: float,
                geom: BeamGeometry) -> GouyFactor:
    w = geom.beam_size(x)
    phase = cmath.exp(-2j * (p + q - r - s) * math.atan2(x, geom.rayleigh_length))
    return GouyFactor(phase=phase, transverse_norm=1.0 / (math.pi * w**2))


def coupling_coefficient(p: int, q: int, r: int, s: int,
                         l: int, m: int, n: int, o: int,
                         x: float, geom: BeamGeometry) -> complex:
    """Full position-dependent coefficient: Gouy factor times exact overlap."""
    g = gouy_factor(p, q, r, s, x, geom)
    return g.transverse_norm * g.phase * float(lambda_exact(p, q, r, s, l, m, n, o))


# -- perturbation constants ----------------------------------------------------

@dataclass(frozen=True)
class MuConstants:
    """Truncated sums mu1, mu2, mu3 over the transfer coefficients.

    mu1 = sum_p lambda_p^2 / p   (= ln 4/3 in closed form)
    mu2 = sum_p lambda_p^2 / p^2
    mu3 = sum_{p,q} lambda_p lambda_q lambda_pq / (p q)

    Exact partial sums are kept alongside the float values so truncation can
    be assessed below float precision.
    """

    mu1: float
    mu2: float
    mu3: float
    cutoff: int
    tail_bound: float
    mu1_exact: Fraction
    mu2_exact: Fraction
    mu3_exact: Fraction


@lru_cache(maxsize=16)
def mu_constants(cutoff: int = 60) -> MuConstants:
    """Exact truncated mu sums with a geometric tail bound.

    Terms decay as 4^-p (mu1, mu2) and 2^-(p+q) (mu3), so cutoff 60 is far
    below any float's resolution.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    mu1 = Fraction(0)
    mu2 = Fraction(0)
    for p in range(1, cutoff + 1):
        t = Fraction(1, 4**p)
        mu1 += t / p
        mu2 += t / p**2
    mu3 = Fraction(0)
    for p in range(1, cutoff + 1):
        for q in range(1, cutoff + 1):
            lpq = Fraction(math.comb(p + q, p), 2 ** (p + q))
            mu3 += lpq / Fraction(2 ** (p + q) * p * q)
    # tails: sum_{p>c} 4^-p / p <= 4^-c / (3(c+1)); for mu3, lambda_pq <= 1 and
    # sum_q 2^-q/q = ln 2 < 1, so each truncated strip is below 2 * 2^-c/(c+1)
    c = cutoff
    tail = 4.0 ** float(-c) / (3 * (c + 1)) * 2 + 4.0 * 2.0 ** float(-c) / (c + 1)
    return MuConstants(mu1=float(mu1), mu2=float(mu2), mu3=float(mu3),
                       cutoff=cutoff, tail_bound=tail,
                       mu1_exact=mu1, mu2_exact=mu2, mu3_exact=mu3)
