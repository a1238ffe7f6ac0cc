"""Shared term tables for the Dirichlet-type sums.

Both the Riemann-Siegel kernel and the Euler-Maclaurin oracle spend their time
on sums over n of n^{-1/2} * trig(t * ln n).  The ln n and n^{-1/2} tables are
precomputed once and grown on demand; the longdouble copy of ln n keeps the
phase t*ln n accurate to ~1e-12 after mod-2pi reduction at t ~ 1e6, where a
float64 product alone would already carry ~1e-9 of roundoff.
"""

from __future__ import annotations

import threading

import numpy as np

_lock = threading.Lock()


def _build(size: int):
    ns64 = np.arange(1, size + 1, dtype=np.float64)
    ln_ld = np.log(np.arange(1, size + 1, dtype=np.longdouble))
    ln_hi = ln_ld.astype(np.float64)
    ln_lo = (ln_ld - ln_hi).astype(np.float64)
    return ln_hi, ln_lo, ln_ld, 1.0 / np.sqrt(ns64)


_ln, _ln_lo, _ln_ld, _rsqrt = _build(1024)


def ensure(n: int) -> None:
    """Grow the tables to cover 1..n."""
    global _ln, _ln_lo, _ln_ld, _rsqrt
    if n <= _ln.shape[0]:
        return
    with _lock:
        if n <= _ln.shape[0]:
            return
        _ln, _ln_lo, _ln_ld, _rsqrt = _build(max(n, 2 * _ln.shape[0]))


def ln_n(n: int) -> np.ndarray:
    """float64 ln(1..n), index k holds ln(k+1)."""
    ensure(n)
    return _ln[:n]


def ln_n_lo(n: int) -> np.ndarray:
    """float64 tail of the hi+lo split of ln(1..n): ln_n_lo[k] is the part of
    ln(k+1) that the float64 value drops.  The kernel folds t * lo back into
    the reduced phase so phase accuracy does not decay with t."""
    ensure(n)
    return _ln_lo[:n]


def ln_n_ld(n: int) -> np.ndarray:
    """longdouble ln(1..n)."""
    ensure(n)
    return _ln_ld[:n]


def rsqrt_n(n: int) -> np.ndarray:
    """float64 1/sqrt(1..n)."""
    ensure(n)
    return _rsqrt[:n]
