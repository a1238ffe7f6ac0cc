"""Critical-line special functions.

Two independent evaluation routes live here and are kept independent on
purpose.  `riemann_siegel_z` is the production evaluator: main sum to
floor(sqrt(t/2pi)) terms plus (optionally) the first correction term, with a
remainder that decays like t^(-1/4) (t^(-3/4) with the correction).
`em_zeta_half` is the oracle: Euler-Maclaurin evaluation of zeta(1/2 + it)
with an explicit remainder bound, truncated far beyond the asymptotic knee so
the absolute error stays below 1e-10 up to t = 1e6.  Everything downstream
that cross-checks the two relies on them sharing no code beyond the phase
tables.

Phases are the precision bottleneck: t * ln n reaches ~1e7 while the reality
identity Z(t) = e^{i theta(t)} zeta(1/2+it) is tested at the 1e-8 level, so
phase products are formed in longdouble and reduced mod 2pi before dropping
to float64 for the trig.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from math import fsum

import numpy as np

from . import _tables, kernels
from .errors import DomainError, PrecisionError

TWO_PI = 2.0 * math.pi

_PI_LD = np.longdouble("3.14159265358979323846264338327950288")
_TWO_PI_LD = 2 * _PI_LD
_LN_PI_LD = np.log(_PI_LD)
_LN_2PI_LD = np.log(_TWO_PI_LD)

# B_{2k} / ((2k)(2k-1)) for the Stirling series, k = 1..5 (B2..B10); enough
# for < 1e-14 truncation once |z| >= 12.
_STIRLING = (1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0,
             1.0 / 1188.0)

# B_{2k} / (2k)! for Euler-Maclaurin, k = 1..16, from the exact rationals.
_B2K = (1, 6), (-1, 30), (1, 42), (-1, 30), (5, 66), (-691, 2730), (7, 6), \
    (-3617, 510), (43867, 798), (-174611, 330), (854513, 138), \
    (-236364091, 2730), (8553103, 6), (-23749461029, 870), \
    (8615841276005, 14322), (-7709321041217, 510)
_B2K_FACT = tuple(p / (q * math.factorial(2 * k))
                  for k, (p, q) in enumerate(_B2K, start=1))


class ThetaMode(Enum):
    MAIN_TERMS = "main_terms"
    EXACT_GAMMA = "exact_gamma"


@dataclass(frozen=True)
class RSConfig:
    """Riemann-Siegel evaluation settings.

    correction_order 0 is the bare main sum; 1 adds the standard first
    correction term.  error_constant C is the constant in the advertised
    remainder envelope C * t^(-1/4) used by agreement checks.
    """

    correction_order: int = 1
    theta_mode: ThetaMode = ThetaMode.EXACT_GAMMA
    error_constant: float = 2.0

    def __post_init__(self):
        if self.correction_order not in (0, 1):
            raise DomainError(
                f"correction_order must be 0 or 1, got {self.correction_order}")
        if not isinstance(self.theta_mode, ThetaMode):
            raise DomainError("theta_mode must be a ThetaMode")
        if not (self.error_constant > 0):
            raise DomainError("error_constant must be positive")


@dataclass(frozen=True)
class CriticalPoint:
    """One evaluated point on the critical line."""

    t: float
    z: float
    theta: float
    zeta_abs: float


def tau(t: float) -> float:
    """Truncation length sqrt(t / 2pi) of the main sum."""
    if t < 0:
        raise DomainError(f"tau needs t >= 0, got {t}")
    return math.sqrt(t / TWO_PI)


def _lngamma_ld(z):
    """ln Gamma for a clongdouble scalar with Re z > 0: shift right until
    |z| >= 12, then Stirling through B10."""
    acc = np.clongdouble(0.0)
    while abs(z) < 12.0:
        acc = acc + np.log(z)
        z = z + 1
    w = 1.0 / z
    w2 = w * w
    ser = _STIRLING[4]
    for c in (_STIRLING[3], _STIRLING[2], _STIRLING[1], _STIRLING[0]):
        ser = c + w2 * ser
    ser = w * ser
    return (z - 0.5) * np.log(z) - z + 0.5 * _LN_2PI_LD + ser - acc


def _theta_ld(t: float):
    """theta(t) = Im ln Gamma(1/4 + it/2) - (t/2) ln pi as a longdouble."""
    t_ld = np.longdouble(t)
    z = np.clongdouble(0.25) + 1j * (t_ld / 2)
    return _lngamma_ld(z).imag - (t_ld / 2) * _LN_PI_LD


def _theta_main_ld(t_ld):
    """Three-term asymptotic theta in longdouble."""
    half = t_ld / 2
    return half * np.log(t_ld / _TWO_PI_LD) - half - _PI_LD / 8


def theta(t: float, mode: ThetaMode = ThetaMode.EXACT_GAMMA) -> float:
    """Riemann-Siegel phase function.

    EXACT_GAMMA follows the definition through ln Gamma; MAIN_TERMS is the
    three-term asymptotic (t/2) ln(t/2pi) - t/2 - pi/8, whose error is O(1/t).
    """
    if not t > 0:
        raise DomainError(f"theta needs t > 0, got {t}")
    if not isinstance(mode, ThetaMode):
        raise DomainError("mode must be a ThetaMode")
    if mode is ThetaMode.MAIN_TERMS:
        return float(_theta_main_ld(np.longdouble(t)))
    return float(_theta_ld(t))


def theta_derivative(t: float) -> float:
    """Leading asymptotic of theta'(t); the local oscillation frequency of
    Z and the basis for panel sizing."""
    if not t > 0:
        raise DomainError(f"theta_derivative needs t > 0, got {t}")
    return 0.5 * math.log(t / TWO_PI)


def z_phase(t: float) -> complex:
    """e^{i theta(t)} with the phase reduced mod 2pi in longdouble, so that
    z_phase(t) * zeta(1/2+it) is real to ~1e-12 even at t ~ 1e6."""
    red = float(np.mod(_theta_ld(t), _TWO_PI_LD))
    return cmath.exp(1j * red)


def _theta_batch(ts: np.ndarray, mode: ThetaMode) -> np.ndarray:
    """Vectorized theta reduced mod 2pi, for kernel feeding.

    Raw theta reaches ~1e7 where float64 carries ~1e-9 rad of roundoff, so
    everything runs in extended precision and only the reduced value drops
    to float64."""
    t_ld = ts.astype(np.longdouble)
    if mode is ThetaMode.MAIN_TERMS:
        th = _theta_main_ld(t_ld)
        return np.mod(th, _TWO_PI_LD).astype(np.float64)
    z = 0.25 + 1j * (t_ld / 2)
    acc = np.zeros(ts.shape, dtype=np.clongdouble)
    for _ in range(12):
        small = np.abs(z) < 12.0
        if not small.any():
            break
        acc[small] += np.log(z[small])
        z[small] += 1.0
    w = 1.0 / z
    w2 = w * w
    ser = np.full(ts.shape, np.clongdouble(_STIRLING[4]))
    for c in (_STIRLING[3], _STIRLING[2], _STIRLING[1], _STIRLING[0]):
        ser = c + w2 * ser
    lg = (z - 0.5) * np.log(z) - z + 0.5 * _LN_2PI_LD + w * ser - acc
    th = lg.imag - (t_ld / 2) * _LN_PI_LD
    return np.mod(th, _TWO_PI_LD).astype(np.float64)


def riemann_siegel_z_values(ts: np.ndarray, cfg: RSConfig = RSConfig()
                            ) -> np.ndarray:
    """Z(t) for an array of t >= 2pi (vector fast path used by quadrature)."""
    ts = np.asarray(ts, dtype=np.float64)
    if ts.size and ts.min() < TWO_PI:
        raise DomainError("riemann_siegel_z needs t >= 2pi")
    thetas = _theta_batch(ts, cfg.theta_mode)  # reduced mod 2pi
    return kernels.z_main_sum(ts, thetas, cfg.correction_order)


def riemann_siegel_z(t: float, cfg: RSConfig = RSConfig()) -> CriticalPoint:
    """Z(t) by the Riemann-Siegel formula.

    Requires t >= 2pi so the main sum is nonempty; below that the oracle is
    the only supported evaluator.  |Z| equals |zeta(1/2+it)| up to the
    formula remainder, so zeta_abs is |z|.
    """
    if not t >= TWO_PI:
        raise DomainError(f"riemann_siegel_z needs t >= 2pi, got {t}")
    if cfg.theta_mode is ThetaMode.MAIN_TERMS:
        th_ld = _theta_main_ld(np.longdouble(t))
    else:
        th_ld = _theta_ld(t)
    red = float(np.mod(th_ld, _TWO_PI_LD))
    z = float(kernels.z_main_sum(np.array([t]), np.array([red]),
                                 cfg.correction_order)[0])
    return CriticalPoint(t=t, z=z, theta=float(th_ld), zeta_abs=abs(z))


def em_zeta_half(t: float, tol: float = 1e-10) -> complex:
    """zeta(1/2 + it) by Euler-Maclaurin with an explicit remainder bound.

    The cutoff N ~ 3t/2pi sits well past the asymptotic knee so twelve
    Bernoulli terms push the bound under 1e-10 for all t <= 1e6.  The main
    sum is accumulated with exact (Shewchuk) summation in ascending n, which
    keeps the result independent of call history.
    """
    if t < 0:
        raise DomainError(f"em_zeta_half needs t >= 0, got {t}")
    s = complex(0.5, t)
    n_cut = max(24, int(math.ceil(3.0 * t / TWO_PI)))
    for attempt in range(2):
        value, bound = _em_eval(t, s, n_cut)
        if bound <= tol:
            return value
        n_cut = 2 * n_cut
    raise PrecisionError(
        f"em_zeta_half: remainder bound {bound:.3e} above tol {tol:.3e} "
        f"at t={t}", estimate=abs(value), bound=bound)


def _em_eval(t: float, s: complex, n_cut: int):
    phases = np.mod(np.longdouble(t) * _tables.ln_n_ld(n_cut),
                    _TWO_PI_LD).astype(np.float64)
    amps = _tables.rsqrt_n(n_cut)
    re = amps[:n_cut - 1] * np.cos(phases[:n_cut - 1])
    im = -amps[:n_cut - 1] * np.sin(phases[:n_cut - 1])
    total = complex(fsum(re.tolist()), fsum(im.tolist()))

    nf = float(n_cut)
    n_mit = cmath.exp(-1j * float(phases[n_cut - 1]))  # N^{-it}
    n_ms = n_mit / math.sqrt(nf)                       # N^{-s}
    total += 0.5 * n_ms
    total += math.sqrt(nf) * n_mit / (s - 1.0)

    # Bernoulli tail: T_k = B_{2k}/(2k)! * (s)(s+1)...(s+2k-2) * N^{-s-2k+1}
    v = s / nf
    k = 0
    while k < 12:
        total += _B2K_FACT[k] * v * n_ms
        v *= (s + (2 * k + 1)) * (s + (2 * k + 2)) / (nf * nf)
        k += 1
    sigma = 0.5
    bound = abs(_B2K_FACT[k]) * abs(v) / math.sqrt(nf) \
        * abs(s + (2 * k + 1)) / (sigma + 2 * k + 1)
    return total, bound


def hl_x(t: float, cfg: RSConfig = RSConfig()) -> float:
    """Signed eigenfunction-normalized value -(pi/2)^{1/4} Z(t)."""
    return -((math.pi / 2.0) ** 0.25) * riemann_siegel_z(t, cfg).z
