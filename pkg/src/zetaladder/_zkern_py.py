"""Pure numpy fallback for the Riemann-Siegel main-sum kernel.

Matches the compiled kernel's contract: thetas arrive reduced mod 2pi, and
the t * ln n phase products are formed in longdouble and reduced mod 2pi
before the float64 cos, keeping phase error ~1e-15 rad at t ~ 1e6.  Points
are grouped by the truncation length floor(tau) so the inner sum vectorizes
as a 2-d cos; groups are chunked to keep the scratch array below ~32 MB.
numpy's pairwise sum is deterministic for a fixed shape, and the grouping
depends only on the inputs, so repeated calls are bit-identical (though not
bit-identical to the compiled Kahan loop; the two agree to ~1e-12 and the
benchmark asserts it).
"""

from __future__ import annotations

import numpy as np

from . import _tables

TWO_PI = 6.283185307179586476925286766559
_TWO_PI_LD = np.longdouble("6.28318530717958647692528676655900577")

_CHUNK_FLOATS = 2_000_000


def z_main_sum(ts: np.ndarray, thetas: np.ndarray, ln_n: np.ndarray,
               ln_n_lo: np.ndarray, rsqrt_n: np.ndarray, order: int,
               out: np.ndarray) -> int:
    # ln_n_lo is unused here: this path rebuilds the phases from the
    # longdouble table directly
    tau = np.sqrt(ts / TWO_PI)
    nmax = np.floor(tau).astype(np.int64)
    ln_ld = _tables.ln_n_ld(int(nmax.max())) if nmax.size else None
    ts_ld = ts.astype(np.longdouble)
    for nv in np.unique(nmax):
        idx = np.nonzero(nmax == nv)[0]
        if nv == 0:
            out[idx] = 0.0
            continue
        rows = max(1, _CHUNK_FLOATS // int(nv))
        for lo in range(0, idx.shape[0], rows):
            sel = idx[lo:lo + rows]
            prod = np.mod(ts_ld[sel, None] * ln_ld[None, :nv], _TWO_PI_LD)
            phase = thetas[sel, None] - prod.astype(np.float64)
            out[sel] = 2.0 * np.cos(phase).dot(rsqrt_n[:nv])
    if order == 1:
        p = tau - nmax
        den = np.cos(TWO_PI * p)
        arg = TWO_PI * (p * p - p - 0.0625)
        near = np.abs(den) < 1e-3
        safe_den = np.where(near, 1.0, den)
        psi = np.cos(arg) / safe_den
        if near.any():
            psi = np.where(near,
                           (2.0 * p - 1.0) * np.sin(arg) / np.sin(TWO_PI * p),
                           psi)
        sign = np.where(nmax % 2 == 1, 1.0, -1.0)
        out += sign * psi / np.sqrt(np.maximum(tau, 1e-300))
    return 0
