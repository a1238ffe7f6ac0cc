# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loop: the Riemann-Siegel main sum over arrays of t.

For each t the sum runs over n <= sqrt(t / 2pi); with t ~ 1e6 that is ~400
cos evaluations per point and every quadrature in the package sits on top of
it, so this is where virtually all wall clock goes.  Accumulation is Kahan
compensated in a fixed ascending order so results do not depend on call
batching.

Phase handling: thetas arrive already reduced mod 2pi (the caller computes
them in extended precision).  The product t * ln n is reduced here with an
fma split against a triple-double 2pi, so the cos argument stays small and
carries ~1e-15 rad of error instead of the ~1e-10 a plain float64 product
would give at t ~ 1e5.  The reduction multiplier must stay below 2^27 for
the split products to be exact, i.e. t * ln n < ~8e8; the Python wrapper
enforces that bound.
"""

from libc.math cimport cos, sin, sqrt, floor, fabs, fma, nearbyint

cdef double TWO_PI = 6.283185307179586476925286766559
cdef double INV_TWO_PI = 0.15915494309189534561
# 2pi = P2_HI + P2_MID + P2_LO; HI and MID carry <= 26 mantissa bits
cdef double P2_HI = 6.283185303211212158203125
cdef double P2_MID = 3.9683742958374070848e-09
cdef double P2_LO = 2.2884754904439327260e-17


def z_main_sum(double[::1] ts, double[::1] thetas, double[::1] ln_n,
               double[::1] ln_n_lo, double[::1] rsqrt_n, int order,
               double[::1] out):
    """Main sum 2 * sum_{n<=floor(tau)} n^{-1/2} cos(theta - t ln n), plus the
    first correction term when order == 1.  ln_n + ln_n_lo is the hi+lo split
    of ln n; the tables are indexed by n-1 and must cover max floor(tau);
    thetas must be reduced mod 2pi."""
    cdef Py_ssize_t i, m = ts.shape[0]
    cdef long n, nmax
    cdef double t, th, tau, acc, comp, term, tmp, y
    cdef double p, e, k, r
    cdef double frac, num, den, psi
    with nogil:
        _run(ts, thetas, ln_n, ln_n_lo, rsqrt_n, order, out, m)
    return 0


cdef void _run(double[::1] ts, double[::1] thetas, double[::1] ln_n,
               double[::1] ln_n_lo, double[::1] rsqrt_n, int order,
               double[::1] out, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i
    cdef long n, nmax
    cdef double t, th, tau, acc, comp, term, tmp, y
    cdef double p, e, k, r
    cdef double frac, num, den, psi
    for i in range(m):
        t = ts[i]
        th = thetas[i]
        tau = sqrt(t / TWO_PI)
        nmax = <long>floor(tau)
        acc = 0.0
        comp = 0.0
        for n in range(1, nmax + 1):
            p = t * ln_n[n - 1]
            e = fma(t, ln_n[n - 1], -p)
            k = nearbyint(p * INV_TWO_PI)
            r = ((p - k * P2_HI) - k * P2_MID) - k * P2_LO + e
            r = fma(t, ln_n_lo[n - 1], r)
            term = rsqrt_n[n - 1] * cos(th - r)
            y = term - comp
            tmp = acc + y
            comp = (tmp - acc) - y
            acc = tmp
        acc = 2.0 * acc
        if order == 1:
            frac = tau - nmax
            den = cos(TWO_PI * frac)
            if fabs(den) < 1e-3:
                # removable singularity of psi at p = 1/4, 3/4
                psi = (2.0 * frac - 1.0) \
                    * sin(TWO_PI * (frac * frac - frac - 0.0625)) \
                    / sin(TWO_PI * frac)
            else:
                psi = cos(TWO_PI * (frac * frac - frac - 0.0625)) / den
            if nmax % 2 == 1:
                acc += psi / sqrt(tau)
            else:
                acc -= psi / sqrt(tau)
        out[i] = acc
