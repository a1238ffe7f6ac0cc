"""Oscillation-aware quadrature for Z and Z^2.

Z(t) oscillates with local frequency theta'(t) ~ (1/2) ln(t/2pi), so every
integral here is cut into Gauss-Legendre 15-point panels whose width keeps
the phase advance per panel below osc_factor radians.  On such panels the
integrand is polynomial-tame and GL15 is accurate to roundoff; an adaptive
bisection pass (h-refinement estimate, fixed left-to-right order, exact
summation of contributions) supplies the error control and the determinism
guarantee: decomposition and reduction order depend only on the inputs,
never on scheduling.

Three consumers sit on top of the same panel machinery:

- integrate_z / integrate_z2: plain adaptive integrals with tolerances.
- PanelChain: a fixed panel grid whose per-panel Legendre interpolants are
  integrated in closed form, giving a cheap prefix integral t -> int_a^t.
  The windowed moment reuses it so the inner and outer integrals share one
  set of Z evaluations instead of re-evaluating O(U0 * H) times.
- SecondMomentTable: checkpoints of I(T) = int_0^T Z^2 at a fixed stride,
  extended append-only (single writer) and persisted as `smtable-v1` files
  keyed by the QuadConfig fingerprint.

Below t = 8pi the Riemann-Siegel route is too short to trust, so integrands
switch to the Euler-Maclaurin oracle there (for Z^2 that needs no phase at
all since Z^2 = |zeta(1/2+it)|^2).
"""

from __future__ import annotations

import hashlib
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import fsum
from typing import Callable, List, Tuple

import numpy as np
from numpy.polynomial import legendre as npleg

from . import special
from .errors import (DomainError, PrecisionError, RangeError,
                     TableIntegrityError)
from .special import RSConfig, TWO_PI

_RS_MIN = 4.0 * TWO_PI  # below this, evaluate through the oracle

# acceptance floor, relative to the panel's value scale.  Z^2 carries genuine
# broadband micro-structure at ~1e-11 relative amplitude (still present in a
# 25-digit reference evaluation, so it is signal, not kernel roundoff), but
# resolving it multiplies cost several-fold while moving 64-wide integrals by
# well under 1e-9.  Panels whose refinement estimate is below this floor are
# accepted with their estimate recorded, keeping the reported bound honest.
_NOISE_FLOOR = 1e-10

_GL_X, _GL_W = npleg.leggauss(15)
# projection of nodal values onto Legendre coefficients (exact for deg <= 14)
_GL_PROJ = (0.5 * (2.0 * np.arange(15) + 1.0))[:, None] \
    * (npleg.legvander(_GL_X, 14).T * _GL_W[None, :])


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("interval endpoints must be finite")
        if self.b < self.a:
            raise DomainError(f"interval needs a <= b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class QuadConfig:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    max_depth: int = 24
    osc_factor: float = 0.5

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if not (0 < self.osc_factor <= 1.0):
            raise DomainError("osc_factor must lie in (0, 1]")
        if not (4 <= self.max_depth <= 60):
            raise DomainError("max_depth must lie in [4, 60]")

    @property
    def fingerprint(self) -> str:
        """Short stable hash identifying results produced under this config
        (panel rule version included so cached tables invalidate on change)."""
        blob = (f"panelgl15-v1|abs={self.abs_tol!r}|rel={self.rel_tol!r}"
                f"|depth={self.max_depth}|osc={self.osc_factor!r}")
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _panel_freq(t: float) -> float:
    # theta' floored at its 8pi value; below 8pi the oracle integrand varies
    # on unit scales anyway
    return 0.5 * math.log(max(t, _RS_MIN) / TWO_PI)


def _initial_edges(a: float, b: float, osc_factor: float) -> np.ndarray:
    """Panel edges with width * theta'(right edge) <= osc_factor (theta' is
    nondecreasing, so sizing against a lookahead point is conservative)."""
    edges = [a]
    t = a
    while t < b:
        w = osc_factor / _panel_freq(t + osc_factor / _panel_freq(t))
        t = min(b, t + w)
        edges.append(t)
    return np.asarray(edges)


class QuadResult:
    __slots__ = ("value", "error_bound", "neval", "nodes", "values")

    def __init__(self, value, error_bound, neval, nodes=None, values=None):
        self.value = value
        self.error_bound = error_bound
        self.neval = neval
        self.nodes = nodes
        self.values = values


def _panel_sums(fvec, edges: np.ndarray) -> Tuple[np.ndarray, np.ndarray,
                                                  np.ndarray]:
    mids = 0.5 * (edges[:-1] + edges[1:])
    hws = 0.5 * np.diff(edges)
    nodes = mids[:, None] + hws[:, None] * _GL_X[None, :]
    vals = np.asarray(fvec(nodes.ravel()), dtype=np.float64)
    vals = vals.reshape(nodes.shape)
    return nodes, vals, vals.dot(_GL_W) * hws


def adaptive_integrate(fvec: Callable[[np.ndarray], np.ndarray], a: float,
                       b: float, cfg: QuadConfig,
                       collect: bool = False) -> QuadResult:
    """Deterministic adaptive integration of a vectorized integrand.

    The whole initial decomposition plus its first bisection level is
    evaluated in three vectorized sweeps (the common case ends there: a
    phase-bounded panel is already converged, the halves only certify it).
    Panels whose h-refinement estimate misses their width-proportional
    budget recurse scalar-wise, depth-first, left to right.
    """
    if b <= a:
        return QuadResult(0.0, 0.0, 0)
    edges = _initial_edges(a, b, cfg.osc_factor)
    mids_all = 0.5 * (edges[:-1] + edges[1:])
    _, _, coarse = _panel_sums(fvec, edges)
    half_edges = np.empty(2 * mids_all.size + 1)
    half_edges[0::2] = edges
    half_edges[1::2] = mids_all
    half_nodes, half_vals, half_sums = _panel_sums(fvec, half_edges)
    fine = half_sums[0::2] + half_sums[1::2]
    est0 = np.abs(fine - coarse)
    neval = [15 * (coarse.size + half_sums.size)]

    s0 = fsum(fine.tolist())
    # panel budgets come from abs_tol alone: additivity contracts compare
    # decompositions in abs_tol units, so the looser rel_tol allowance must
    # not leak into per-panel acceptance.  rel_tol only relaxes the final
    # achievability check below.
    target = max(cfg.abs_tol, cfg.rel_tol * abs(s0))
    inv_total = 1.0 / (b - a)
    widths = np.diff(edges)
    budgets = cfg.abs_tol * widths * inv_total
    # noise floor: integrand values carry ~1e-13 of phase roundoff at the top
    # of the supported t range, so |fine - coarse| stops meaning anything
    # below ~1e-12 * scale and bisection would drill to max_depth for nothing.
    # Panels accepted by the floor still report their est, so the returned
    # bound (and the PrecisionError check against it) stays honest.
    halfmax = np.abs(half_vals).reshape(coarse.size, -1).max(axis=1)
    floors = _NOISE_FLOOR * halfmax * widths

    parts: List[float] = []
    errs: List[float] = []
    kept_nodes: List[np.ndarray] = []
    kept_vals: List[np.ndarray] = []

    def refine(lo: float, hi: float, val: float, depth: int) -> None:
        mid = 0.5 * (lo + hi)
        sub_nodes, sub_vals, sums = _panel_sums(fvec, np.array([lo, mid, hi]))
        neval[0] += sub_nodes.size
        est = abs((sums[0] + sums[1]) - val)
        budget = cfg.abs_tol * (hi - lo) * inv_total
        # see the first-level floors: below value noise, est is meaningless
        floor = _NOISE_FLOOR * float(np.abs(sub_vals).max()) * (hi - lo)
        if est <= budget or est <= floor or depth >= cfg.max_depth:
            parts.append(sums[0])
            parts.append(sums[1])
            errs.append(est)
            if collect:
                kept_nodes.append(sub_nodes.ravel())
                kept_vals.append(sub_vals.ravel())
            return
        refine(lo, mid, sums[0], depth + 1)
        refine(mid, hi, sums[1], depth + 1)

    for i in range(coarse.size):
        if est0[i] <= budgets[i] or est0[i] <= floors[i]:
            parts.append(half_sums[2 * i])
            parts.append(half_sums[2 * i + 1])
            errs.append(est0[i])
            if collect:
                kept_nodes.append(half_nodes[2 * i:2 * i + 2].ravel())
                kept_vals.append(half_vals[2 * i:2 * i + 2].ravel())
        else:
            refine(edges[i], mids_all[i], half_sums[2 * i], 1)
            refine(mids_all[i], edges[i + 1], half_sums[2 * i + 1], 1)

    value = fsum(parts)
    bound = fsum(errs)
    if bound > target * (1.0 + 1e-9):
        raise PrecisionError(
            f"tolerance {target:.3e} not reachable (error bound {bound:.3e}"
            f" at max_depth={cfg.max_depth})",
            estimate=value, bound=bound)
    nodes = values = None
    if collect:
        nodes = np.concatenate(kept_nodes) if kept_nodes else np.empty(0)
        values = np.concatenate(kept_vals) if kept_vals else np.empty(0)
    return QuadResult(value, bound, neval[0], nodes, values)


def z_values(ts: np.ndarray, rs_cfg: RSConfig = RSConfig()) -> np.ndarray:
    """Signed Z on arrays: Riemann-Siegel for t >= 8pi, oracle below."""
    ts = np.asarray(ts, dtype=np.float64)
    out = np.empty_like(ts)
    hi = ts >= _RS_MIN
    if hi.any():
        out[hi] = special.riemann_siegel_z_values(ts[hi], rs_cfg)
    if (~hi).any():
        for i in np.nonzero(~hi)[0]:
            t = float(ts[i])
            out[i] = (special.z_phase(t) * special.em_zeta_half(t)).real
    return out


def z2_values(ts: np.ndarray, rs_cfg: RSConfig = RSConfig()) -> np.ndarray:
    """Z^2 on arrays; below 8pi uses |zeta|^2, which needs no phase."""
    ts = np.asarray(ts, dtype=np.float64)
    out = np.empty_like(ts)
    hi = ts >= _RS_MIN
    if hi.any():
        out[hi] = special.riemann_siegel_z_values(ts[hi], rs_cfg) ** 2
    if (~hi).any():
        for i in np.nonzero(~hi)[0]:
            out[i] = abs(special.em_zeta_half(float(ts[i]))) ** 2
    return out


def integrate_z(iv: Interval, cfg: QuadConfig = QuadConfig(),
                rs_cfg: RSConfig = RSConfig()) -> float:
    """Adaptive integral of Z over [a, b], a >= 10."""
    if iv.a < 10.0:
        raise DomainError(f"integrate_z needs a >= 10, got {iv.a}")
    return adaptive_integrate(lambda ts: z_values(ts, rs_cfg), iv.a, iv.b,
                              cfg).value


def integrate_z2(iv: Interval, cfg: QuadConfig = QuadConfig(),
                 rs_cfg: RSConfig = RSConfig()) -> float:
    """Adaptive integral of Z^2 over [a, b], a >= 0."""
    if iv.a < 0.0:
        raise DomainError(f"integrate_z2 needs a >= 0, got {iv.a}")
    return adaptive_integrate(lambda ts: z2_values(ts, rs_cfg), iv.a, iv.b,
                              cfg).value


class PanelChain:
    """Fixed panel grid over [a, b] with a closed-form prefix integral.

    Node values are projected onto Legendre series per panel (exact through
    degree 14, i.e. to roundoff for phase-bounded panels) and integrated
    termwise; prefix sums across panels are carried in longdouble so the
    chain can span ~1e6 units without losing the 1e-10 tail.
    """

    __slots__ = ("a", "b", "edges", "mids", "hws", "coef", "cum", "_dcoef")

    def __init__(self, a, b, edges, mids, hws, coef, cum):
        self.a = a
        self.b = b
        self.edges = edges
        self.mids = mids
        self.hws = hws
        self.coef = coef
        self.cum = cum
        self._dcoef = None

    @classmethod
    def build(cls, a: float, b: float, fvec, osc_factor: float = 0.5
              ) -> "PanelChain":
        if not b > a:
            raise DomainError("PanelChain needs b > a")
        edges = _initial_edges(a, b, osc_factor)
        mids = 0.5 * (edges[:-1] + edges[1:])
        hws = 0.5 * np.diff(edges)
        nodes = mids[:, None] + hws[:, None] * _GL_X[None, :]
        vals = np.asarray(fvec(nodes.ravel()), dtype=np.float64)
        vals = vals.reshape(nodes.shape)
        coef = npleg.legint(_GL_PROJ.dot(vals.T), lbnd=-1) * hws[None, :]
        totals = npleg.legval(1.0, coef)
        cum = np.concatenate(([np.longdouble(0.0)],
                              np.cumsum(totals.astype(np.longdouble))))
        return cls(float(a), float(b), edges, mids, hws, coef, cum)

    def prefix(self, t) -> np.ndarray:
        """Vectorized int_a^t of the interpolated integrand."""
        t = np.asarray(t, dtype=np.float64)
        if t.size and (t.min() < self.a - 1e-9 or t.max() > self.b + 1e-9):
            raise RangeError("prefix query outside the chain span")
        tc = np.clip(t, self.a, self.b)
        idx = np.clip(np.searchsorted(self.edges, tc, side="right") - 1, 0,
                      self.mids.size - 1)
        x = (tc - self.mids[idx]) / self.hws[idx]
        inner = npleg.legval(x, self.coef[:, idx], tensor=False)
        return (self.cum[idx] + inner).astype(np.float64)

    def integral(self, u, v) -> np.ndarray:
        return self.prefix(v) - self.prefix(u)

    def slope(self, t) -> np.ndarray:
        """Derivative of prefix: the interpolated integrand itself."""
        if self._dcoef is None:
            self._dcoef = npleg.legder(self.coef)
        t = np.asarray(t, dtype=np.float64)
        tc = np.clip(t, self.a, self.b)
        idx = np.clip(np.searchsorted(self.edges, tc, side="right") - 1, 0,
                      self.mids.size - 1)
        x = (tc - self.mids[idx]) / self.hws[idx]
        inner = npleg.legval(x, self._dcoef[:, idx], tensor=False)
        return inner / self.hws[idx]

    @property
    def total(self) -> float:
        return float(self.cum[-1])


def z_chain(a: float, b: float, cfg: QuadConfig = QuadConfig(),
            rs_cfg: RSConfig = RSConfig()) -> PanelChain:
    return PanelChain.build(a, b, lambda ts: z_values(ts, rs_cfg),
                            cfg.osc_factor)


def z2_chain(a: float, b: float, cfg: QuadConfig = QuadConfig(),
             rs_cfg: RSConfig = RSConfig()) -> PanelChain:
    return PanelChain.build(a, b, lambda ts: z2_values(ts, rs_cfg),
                            cfg.osc_factor)


class SecondMomentTable:
    """Append-only checkpoints of I(T) = int_0^T Z^2 at a fixed stride.

    Checkpoint values depend only on the stride grid and the configs, never
    on which caller triggered the extension, so concurrent use just needs
    the single-writer lock around extension.
    """

    STRIDE = 64.0

    def __init__(self, cfg: QuadConfig = QuadConfig(),
                 rs_cfg: RSConfig = RSConfig()):
        self.cfg = cfg
        self.rs_cfg = rs_cfg
        self.tolerance = cfg.abs_tol
        self.fingerprint = cfg.fingerprint
        self._ts: List[float] = [0.0]
        self._is: List[float] = [0.0]
        self._lock = threading.Lock()

    @property
    def top(self) -> float:
        return self._ts[-1]

    @property
    def checkpoints(self) -> List[Tuple[float, float]]:
        return list(zip(self._ts, self._is))

    def ensure(self, t: float, workers: int = 0) -> None:
        """Extend checkpoints so the last one is within one stride below t.

        Segments are independent integrals, so they may be evaluated by a
        thread pool; the fold into running totals stays in ascending order,
        which keeps the checkpoint values bit-identical for any worker count.
        """
        with self._lock:
            n_seg = int((t - self._ts[-1]) // self.STRIDE)
            if n_seg <= 0:
                return
            base = self._ts[-1]
            los = [base + i * self.STRIDE for i in range(n_seg)]

            def seg_value(lo: float) -> float:
                return adaptive_integrate(
                    lambda ts: z2_values(ts, self.rs_cfg), lo,
                    lo + self.STRIDE, self.cfg).value

            if workers <= 0:
                workers = min(8, os.cpu_count() or 1)
            if workers > 1 and n_seg > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    vals = list(pool.map(seg_value, los))
            else:
                vals = [seg_value(lo) for lo in los]
            for lo, v in zip(los, vals):
                self._ts.append(lo + self.STRIDE)
                self._is.append(self._is[-1] + v)

    def value_at(self, t: float) -> Tuple[float, float]:
        """Largest checkpoint (t_i, I_i) with t_i <= t."""
        i = int(t // self.STRIDE)
        i = min(i, len(self._ts) - 1)
        return self._ts[i], self._is[i]


def cumulative_I(T: float, table: SecondMomentTable,
                 cfg: QuadConfig = QuadConfig()) -> float:
    """I(T) = int_0^T Z^2 through the checkpoint table."""
    if T < 0:
        raise DomainError(f"cumulative_I needs T >= 0, got {T}")
    if cfg.fingerprint != table.fingerprint:
        raise TableIntegrityError(
            "table fingerprint does not match the quadrature config")
    if T == 0.0:
        return 0.0
    table.ensure(T)
    t0, i0 = table.value_at(T)
    if t0 == T:
        return i0
    part = adaptive_integrate(lambda ts: z2_values(ts, table.rs_cfg), t0, T,
                              cfg)
    return i0 + part.value


def save_table(table: SecondMomentTable, path) -> None:
    lines = [f"smtable-v1,{table.fingerprint},stride={table.STRIDE!r},"
             f"tolerance={table.tolerance!r}"]
    for t, i in zip(table._ts, table._is):
        lines.append(f"{t!r},{i!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_table(path, cfg: QuadConfig = QuadConfig(),
               rs_cfg: RSConfig = RSConfig()) -> SecondMomentTable:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("smtable-v1,"):
        raise TableIntegrityError(f"{path}: not an smtable-v1 file")
    header = lines[0].split(",")
    if header[1] != cfg.fingerprint:
        raise TableIntegrityError(
            f"{path}: fingerprint {header[1]} does not match config "
            f"{cfg.fingerprint}")
    table = SecondMomentTable(cfg, rs_cfg)
    ts: List[float] = []
    iis: List[float] = []
    for ln in lines[1:]:
        t_str, i_str = ln.split(",")
        ts.append(float(t_str))
        iis.append(float(i_str))
    if not ts or ts[0] != 0.0 or iis[0] != 0.0:
        raise TableIntegrityError(f"{path}: table must start at (0, 0)")
    for k in range(1, len(ts)):
        if ts[k] <= ts[k - 1] or iis[k] < iis[k - 1]:
            raise TableIntegrityError(f"{path}: checkpoints not monotone")
    table._ts = ts
    table._is = iis
    return table


@dataclass(frozen=True)
class MomentReport:
    """Windowed second-moment integral and its comparison value 2 pi H U0."""

    T: float
    H: float
    U0: float
    jbar: float
    ratio: float

    def as_dict(self) -> dict:
        return {"schema": "moment-v1", "T": self.T, "H": self.H,
                "U0": self.U0, "jbar": self.jbar, "ratio": self.ratio}


def admissible_h_range(T: float) -> Tuple[float, float]:
    """Open admissibility window (lnln T / ln T, T^{1/lnln T}) for H."""
    if T <= math.e:
        raise DomainError(f"admissible_h_range needs T > e, got {T}")
    lt = math.log(T)
    llt = math.log(lt)
    if llt <= 0:
        raise DomainError(f"T too small for an admissible window: {T}")
    return llt / lt, T ** (1.0 / llt)


def hl_moment(T: float, H: float, cfg: QuadConfig = QuadConfig(),
              rs_cfg: RSConfig = RSConfig(),
              u0_exponent: float = 0.5001) -> MomentReport:
    """Mean square of the windowed integral int_t^{t+H} Z over [T, T+U0].

    U0 = T^u0_exponent; the expected value of the mean square is 2 pi H, so
    ratio -> 1 as T grows for admissible H.  The chain antiderivative makes
    the inner window a difference of prefix integrals, so Z is evaluated
    once per grid node no matter how the outer points fall.
    """
    if T < 100.0:
        raise DomainError(f"hl_moment needs T >= 100, got {T}")
    lo, hi = admissible_h_range(T)
    if not (lo < H < hi):
        raise DomainError(
            f"H={H} not admissible at T={T}: need {lo:.6g} < H < {hi:.6g}")
    u0 = T ** u0_exponent
    chain = z_chain(T, T + u0 + H, cfg, rs_cfg)

    def windowed_sq(ts: np.ndarray) -> np.ndarray:
        return chain.integral(ts, ts + H) ** 2

    res = adaptive_integrate(windowed_sq, T, T + u0, cfg)
    jbar = res.value
    return MomentReport(T=T, H=H, U0=u0, jbar=jbar,
                       ratio=jbar / (TWO_PI * H * u0))
