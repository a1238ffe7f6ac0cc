"""Second-moment ladder: heights, inverses, iterates, and calibration.

The ladder height phi1(T) is the y solving

    y ln y + (c - ln 2pi) y + c0 = I(T),        I(T) = int_0^T Z^2 dt,

with c Euler's constant and c0 an additive calibration constant.  The left
side is the smoothed second-moment growth law evaluated at y instead of T,
so y trails T by exactly the mass the lower-order terms carry; numerically
that gap tracks (1 - c) pi(T) with pi the prime-counting function (the
complement relation), which is also how c0 is calibrated: pick anchors T,
form the complement height T - (1 - c) pi(T), and fit the constant so the
profile there matches I(T).  The fit is linear in c0, so least squares is
an anchor mean.  Residual spread across anchors is the complement
relation's own slow drift (order T/ln^2 T across a decade), not noise; it
is reported, never corrected.

The inverse map is solved directly on I: phi1(y) = x means I(y) equals the
profile at x, one bracketed root-find on the increasing I instead of a
nested inversion.  Everything here treats the SecondMomentTable as an
immutable snapshot apart from its own append-only extension; calibration
mutates the LadderConfig and must happen before dependent calls.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from math import fsum
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import (CalibrationError, DomainError, PrecisionError,
                     RangeError, TableIntegrityError)
from .quadrature import SecondMomentTable, cumulative_I, z2_values
from .special import RSConfig, TWO_PI, riemann_siegel_z

_LN_TWO_PI = math.log(TWO_PI)
_RS_MIN = 4.0 * TWO_PI

# forward iterates below this leave the range the calibration was checked
# on; phi1 itself only needs I(T) to clear the profile minimum (~ c0), but
# the complement behaviour it exists for degrades fast below ~1e3.
_ITERATE_FLOOR = 1.0e3

# inverse images are solved tighter than the 1e-6 contract: downstream,
# interval widths are differences of nearby inverses and percent-level
# width noise would leak straight into the factorization ratio.
_INV_RTOL = 1e-9

_log = logging.getLogger(__name__)


def euler_constant(n: int = 100) -> float:
    """Euler's constant from the defining limit sum_{k<=n} 1/k - ln n.

    The bare sequence converges like 1/(2n); the standard even-order tail
    corrections of the harmonic sum accelerate that to ~1e-18 at n = 100,
    comfortably past the 1e-12 build requirement.
    """
    if n < 10:
        raise DomainError(f"euler_constant needs n >= 10, got {n}")
    h = fsum(1.0 / k for k in range(1, n + 1))
    ninv2 = 1.0 / (n * n)
    tail = -0.5 / n + ninv2 * (1.0 / 12.0 - ninv2 * (1.0 / 120.0
                                                     - ninv2 / 252.0))
    return h - math.log(n) + tail


class OmegaMode(Enum):
    LOG_LEADING = "log_leading"


class IterateDirection(Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


@dataclass
class LadderConfig:
    """Ladder constants.  Mutable on purpose: calibration writes c0.

    euler_c is recomputed from its defining limit at construction rather
    than hard-coded; c0 starts at 0 and is meaningless until calibrate_c0
    (or a loaded calibration artifact) sets it.
    """

    euler_c: float = field(default_factory=euler_constant)
    c0: float = 0.0
    omega_mode: OmegaMode = OmegaMode.LOG_LEADING

    def __post_init__(self):
        if not (0.57 < self.euler_c < 0.58):
            raise DomainError(f"euler_c outside (0.57, 0.58): {self.euler_c}")
        if not math.isfinite(self.c0):
            raise DomainError(f"c0 must be finite, got {self.c0}")
        if not isinstance(self.omega_mode, OmegaMode):
            raise DomainError("omega_mode must be an OmegaMode")


@dataclass(frozen=True)
class LadderPoint:
    """One inverted ladder height with its defining-equation defect."""

    T: float
    phi1: float
    residual: float

    @property
    def phi(self) -> float:
        """Unhalved ladder value; the halved one is what gets iterated."""
        return 2.0 * self.phi1


def omega(t: float, cfg: LadderConfig) -> float:
    """Weight ln t dividing Z^2 (leading-log mode is the only one)."""
    if t <= math.e:
        raise DomainError(f"omega needs t > e, got {t}")
    return math.log(t)


def ztilde_sq(t: float, cfg: LadderConfig,
              rs_cfg: RSConfig = RSConfig()) -> float:
    """Weighted square Z(t)^2 / omega(t), the ladder's derivative."""
    if t < _RS_MIN:
        raise DomainError(f"ztilde_sq needs t >= 8pi, got {t}")
    point = riemann_siegel_z(t, rs_cfg)
    return point.z * point.z / omega(t, cfg)


def ztilde_sq_values(ts: np.ndarray, cfg: LadderConfig,
                     rs_cfg: RSConfig = RSConfig()) -> np.ndarray:
    """Vectorized ztilde_sq for quadrature integrands."""
    ts = np.asarray(ts, dtype=np.float64)
    if ts.size and float(ts.min()) <= math.e:
        raise DomainError("ztilde_sq_values needs t > e throughout")
    return z2_values(ts, rs_cfg) / np.log(ts)


def moment_profile(y: float, cfg: LadderConfig) -> float:
    """Predicted cumulative second moment at ladder height y."""
    if y <= 0.0:
        raise DomainError(f"moment_profile needs y > 0, got {y}")
    return y * math.log(y) + (cfg.euler_c - _LN_TWO_PI) * y + cfg.c0


def moment_profile_slope(y: float, cfg: LadderConfig) -> float:
    """d/dy of moment_profile; positive on the inversion branch."""
    return math.log(y) + 1.0 + cfg.euler_c - _LN_TWO_PI


def profile_values(ys: np.ndarray, cfg: LadderConfig) -> np.ndarray:
    """Vectorized moment_profile without the scalar domain guard."""
    y = np.asarray(ys, dtype=np.float64)
    return y * np.log(y) + (cfg.euler_c - _LN_TWO_PI) * y + cfg.c0


def invert_profile(targets: np.ndarray, cfg: LadderConfig) -> np.ndarray:
    """Vectorized moment_profile inversion on its increasing branch.

    Plain Newton: the profile is convex there, so after the first step the
    iterates descend monotonically and no bracket is needed.  Targets must
    sit well above the profile minimum (ladder scales always do).  The
    iteration runs to rounding: positions mapped through deep levels feed
    factors whose local scale can be thousands of times their mean, so a
    merely-close inversion would show up as integrand noise.
    """
    tgt = np.asarray(targets, dtype=np.float64)
    slope_c = 1.0 + cfg.euler_c - _LN_TWO_PI
    y = np.maximum(tgt / np.maximum(np.log(np.maximum(tgt, 2.0)), 1.0), 2.0)
    scale = float(np.abs(tgt).max()) if tgt.size else 0.0
    best = math.inf
    worse = 0
    for _ in range(80):
        f = y * np.log(y) + (cfg.euler_c - _LN_TWO_PI) * y + cfg.c0 - tgt
        resid = float(np.abs(f).max()) if tgt.size else 0.0
        if resid <= 1e-15 * scale:
            break
        if resid < best:
            best, worse = resid, 0
        else:
            worse += 1
            if worse >= 2:          # plateaued at rounding
                break
        y = np.maximum(y - f / (np.log(y) + slope_c), 1.5)
    return y


def phi1(T: float, cfg: LadderConfig,
         table: SecondMomentTable) -> LadderPoint:
    """Ladder height below T: solve moment_profile(y) = I(T) for y.

    Newton from the complement-heuristic start T - (1-c) T / ln T, kept
    inside a sign-tracked bracket with bisection absorbing any step that
    leaves it.  The solve itself converges to roundoff; the 1e-6-relative
    residual contract is re-checked anyway.  Trustworthy for T down to
    about 1e3 with a calibration anchored on [1e4, 1e5]; below that the
    profile minimum (about c0 - 1.3) is no longer cleared by I(T).
    """
    if T <= 1.0:
        raise DomainError(f"phi1 needs T > 1, got {T}")
    target = cumulative_I(T, table, table.cfg)
    # the increasing branch of the profile starts at its stationary point
    lo = TWO_PI / math.exp(1.0 + cfg.euler_c)
    hi = T
    if hi <= lo or moment_profile(lo, cfg) >= target \
            or moment_profile(hi, cfg) <= target:
        raise CalibrationError(
            f"no ladder height in ({lo:.3f}, {T:g}) for I(T) = {target:.6g}; "
            "c0 miscalibrated or T too small")
    y = T - (1.0 - cfg.euler_c) * T / math.log(T)
    y = min(max(y, lo), hi)
    for _ in range(80):
        f = moment_profile(y, cfg) - target
        if f > 0.0:
            hi = y
        else:
            lo = y
        y_new = y - f / moment_profile_slope(y, cfg)
        if not lo < y_new < hi:
            y_new = 0.5 * (lo + hi)
        done = abs(y_new - y) <= 1e-13 * y
        y = y_new
        if done:
            break
    residual = moment_profile(y, cfg) - target
    if abs(residual) > 1e-6 * abs(target):
        raise PrecisionError(
            f"ladder inversion stalled at T = {T:g}", estimate=y,
            bound=abs(residual))
    return LadderPoint(T=float(T), phi1=float(y), residual=float(residual))


def phi1_inverse(x: float, cfg: LadderConfig,
                 table: SecondMomentTable) -> float:
    """Height y above x with phi1(y) = x, to 1e-9 relative.

    Equivalent to solving I(y) = moment_profile(x) on the increasing I,
    which takes one bracketed root-find instead of nesting phi1 solves.
    The bracket starts from the smoothed-moment inverse of the target and
    widens geometrically if the local fluctuation of I pushed the root
    outside.  Meaningful for x in the calibrated range (>= ~1e3).
    """
    if x <= _ITERATE_FLOOR:
        raise DomainError(f"phi1_inverse needs x > {_ITERATE_FLOOR:g}, "
                          f"got {x}")
    target = moment_profile(x, cfg)
    quad_cfg = table.cfg

    def g(y: float) -> float:
        return cumulative_I(y, table, quad_cfg) - target

    # invert the smoothed law I(y) ~ y (ln y + 2c - 1 - ln 2pi) for a start
    two_c = 2.0 * cfg.euler_c
    y0 = x
    for _ in range(4):
        smooth = y0 * (math.log(y0) + two_c - 1.0 - _LN_TWO_PI)
        y0 -= (smooth - target) / (math.log(y0) + two_c - _LN_TWO_PI)
    lo = max(x, y0 - 25.0)
    hi = y0 + 25.0
    g_lo, g_hi = g(lo), g(hi)
    step = 100.0
    for _ in range(24):
        if g_lo > 0.0:              # root below lo (or nowhere above x)
            if lo <= x:
                raise RangeError(
                    f"phi1_inverse: no preimage above x = {x:g} "
                    "(I(x) already exceeds the profile there)")
            hi, g_hi = lo, g_lo
            lo = max(x, lo - step)
            g_lo = g(lo)
        elif g_hi < 0.0:            # root above hi
            lo, g_lo = hi, g_hi
            hi += step
            g_hi = g(hi)
        else:
            break
        step *= 2.0
    else:
        raise RangeError(f"phi1_inverse: could not bracket the preimage "
                         f"of x = {x:g}")
    y = brentq(g, lo, hi, xtol=_INV_RTOL * x)
    return float(y)


def phi1_iterates(t: float, k: int, direction: IterateDirection,
                  cfg: LadderConfig,
                  table: SecondMomentTable) -> List[float]:
    """Chain [t, phi1(t), ..., phi1^k(t)], or the inverse chain upward.

    Always returns k+1 values.  A forward iterate dropping below the
    calibrated range aborts with the failing index; inverse iterates can
    only fail through bracketing, reported the same way.
    """
    if k < 0:
        raise DomainError(f"iterate count must be >= 0, got {k}")
    if not isinstance(direction, IterateDirection):
        raise DomainError("direction must be an IterateDirection")
    chain = [float(t)]
    for i in range(1, k + 1):
        try:
            if direction is IterateDirection.FORWARD:
                nxt = phi1(chain[-1], cfg, table).phi1
            else:
                nxt = phi1_inverse(chain[-1], cfg, table)
        except (CalibrationError, DomainError) as exc:
            raise RangeError(f"iterate {i} of {k} left the supported "
                             f"range: {exc}") from exc
        if nxt < _ITERATE_FLOOR:
            raise RangeError(
                f"iterate {i} of {k} fell below the calibrated range "
                f"({nxt:.6g} < {_ITERATE_FLOOR:g})")
        chain.append(nxt)
    return chain


@dataclass(frozen=True)
class PrimePiTable:
    """Exact prime counts: counts[x] = pi(x) for 0 <= x <= limit."""

    limit: int
    counts: np.ndarray

    @classmethod
    def build(cls, limit: int = 1_100_000) -> "PrimePiTable":
        if limit < 2:
            raise DomainError(f"sieve limit must be >= 2, got {limit}")
        mask = np.ones(limit + 1, dtype=bool)
        mask[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if mask[p]:
                mask[p * p::p] = False
        return cls(limit=int(limit),
                   counts=np.cumsum(mask).astype(np.int64))


def pi_count(x: float, table: PrimePiTable) -> int:
    """pi(x) from the sieve table (floor semantics for real x)."""
    xi = int(math.floor(x))
    if xi < 2:
        raise DomainError(f"pi_count needs x >= 2, got {x}")
    if xi > table.limit:
        raise RangeError(f"x = {x:g} beyond the sieve limit {table.limit}")
    return int(table.counts[xi])


def complement_height(T: float, cfg: LadderConfig,
                      pi_table: PrimePiTable) -> float:
    """The complement-relation height T - (1 - c) pi(T)."""
    return T - (1.0 - cfg.euler_c) * pi_count(T, pi_table)


def calibration_offsets(anchors: Sequence[float], cfg: LadderConfig,
                        table: SecondMomentTable,
                        pi_table: PrimePiTable) -> List[float]:
    """Per-anchor I(T) minus the c0-free profile at the complement height.

    These are the values whose constant best fit is c0; their spread is
    the complement relation's systematic drift.
    """
    out = []
    for T in anchors:
        y = complement_height(float(T), cfg, pi_table)
        base = moment_profile(y, cfg) - cfg.c0
        out.append(cumulative_I(float(T), table, table.cfg) - base)
    return out


def calibrate_c0(anchors: Sequence[float], cfg: LadderConfig,
                 table: SecondMomentTable,
                 pi_table: PrimePiTable) -> float:
    """Least-squares c0 over the anchors; writes it into cfg.

    Must run before any phi1-dependent call on the same config (single
    exclusive mutation, per the module contract).
    """
    ts = sorted(float(a) for a in anchors)
    if len(ts) < 3:
        raise CalibrationError(f"need >= 3 anchors, got {len(ts)}")
    if ts[0] > 2.0e4 or ts[-1] < 7.0e4:
        raise CalibrationError(
            f"anchors must spread across [1e4, 1e5]; got span "
            f"[{ts[0]:g}, {ts[-1]:g}]")
    offsets = calibration_offsets(ts, cfg, table, pi_table)
    c0 = fsum(offsets) / len(offsets)
    if not math.isfinite(c0):
        raise CalibrationError("calibration did not converge to a finite c0")
    resid = [c0 - v for v in offsets]
    rms = math.sqrt(fsum(r * r for r in resid) / len(resid))
    for T, r in zip(ts, resid):
        _log.debug("calibration anchor T = %g: residual %.6g", T, r)
    _log.info("calibrated c0 = %.6f over %d anchors (residual rms %.4g)",
              c0, len(ts), rms)
    cfg.c0 = c0
    return c0


def save_calibration(path, cfg: LadderConfig, table: SecondMomentTable,
                     anchors: Sequence[float]) -> None:
    """Write the calibration artifact as plain key=value lines."""
    lines = [
        f"euler_c={cfg.euler_c!r}",
        f"c0={cfg.c0!r}",
        f"smtable_fingerprint={table.fingerprint}",
        "calibrated_at_anchors=" + ",".join(repr(float(a)) for a in anchors),
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_calibration(path) -> Tuple[LadderConfig, str, List[float]]:
    """Read a calibration artifact; returns (config, fingerprint, anchors).

    The caller is responsible for refusing a fingerprint that does not
    match the table it plans to use.
    """
    fields = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            fields[key.strip()] = val.strip()
    try:
        cfg = LadderConfig(euler_c=float(fields["euler_c"]),
                           c0=float(fields["c0"]))
        fingerprint = fields["smtable_fingerprint"]
        anchors = [float(a) for a in
                   fields["calibrated_at_anchors"].split(",") if a]
    except (KeyError, ValueError, DomainError) as exc:
        raise TableIntegrityError(
            f"calibration file {path} failed validation: {exc}") from exc
    return cfg, fingerprint, anchors
