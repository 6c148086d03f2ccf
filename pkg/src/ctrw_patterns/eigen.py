"""Dense nonsymmetric eigenvalue solver.

Pipeline: diagonal balancing (powers of two, so exact in floating point),
Householder reduction to upper Hessenberg form, then the Francis implicit
double-shift QR iteration on the Hessenberg matrix with deflation on small
subdiagonal entries.  Everything stays in real arithmetic; complex eigenvalues
come out as conjugate pairs from the trailing 2x2 blocks.

Eigenvectors, when requested, are obtained by inverse iteration on the
original matrix and checked against a backward-error bound.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

MAX_ITERATIONS_PER_EIGENVALUE = 60
EXCEPTIONAL_SHIFT_EVERY = 10
BACKWARD_ERROR_TOL = 1e-8
# outside this magnitude range the matrix is rescaled before iterating
SAFE_RANGE = (2.0 ** -400, 2.0 ** 400)


class EigenConvergenceError(ArithmeticError):
    pass


def balance(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(b, d)`` with ``b = D^-1 a D``, ``D = diag(d)`` and ``d`` powers of two."""
    b = np.array(a, dtype=float, copy=True)
    n = b.shape[0]
    d = np.ones(n)
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.abs(b[:, i]).sum() - abs(b[i, i])
            r = np.abs(b[i, :]).sum() - abs(b[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                b[i, :] /= f
                b[:, i] *= f
                d[i] *= f
    return b, d


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Orthogonally similar upper Hessenberg matrix via Householder reflections."""
    h = np.array(a, dtype=float, copy=True)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        h[k + 1:, k:] -= 2.0 * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def hqr(h: np.ndarray) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.

    ``h`` is overwritten.  Raises :class:`EigenConvergenceError` if a block
    fails to deflate within the iteration cap.
    """
    a = h
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = float(np.sum(np.abs(np.triu(a, -1))))
    nn = n - 1
    t = 0.0  # accumulated exceptional shifts
    while nn >= 0:
        its = 0
        while True:
            # look for a negligible subdiagonal element to split the matrix
            l = 0
            for ll in range(nn, 0, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll, ll - 1]) + s == s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if its == MAX_ITERATIONS_PER_EIGENVALUE:
                raise EigenConvergenceError(
                    f"QR iteration did not deflate the trailing block at index {nn} after {its} sweeps")
            if its and its % EXCEPTIONAL_SHIFT_EVERY == 0:
                t += x
                idx = np.arange(nn + 1)
                a[idx, idx] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            # find two consecutive small subdiagonal elements
            m = nn - 2
            while True:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u + v == v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            # double-shift QR sweep on rows/columns l..nn, chasing the bulge
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                if k != nn - 1:
                    rows = a[k:k + 3, k:nn + 1]
                    pr = rows[0] + q * rows[1] + r * rows[2]
                    rows[2] -= pr * z
                    rows[1] -= pr * y
                    rows[0] -= pr * x
                    hi = min(nn, k + 3)
                    cols = a[l:hi + 1, k:k + 3]
                    pc = x * cols[:, 0] + y * cols[:, 1] + z * cols[:, 2]
                    cols[:, 2] -= pc * r
                    cols[:, 1] -= pc * q
                    cols[:, 0] -= pc
                else:
                    rows = a[k:k + 2, k:nn + 1]
                    pr = rows[0] + q * rows[1]
                    rows[1] -= pr * y
                    rows[0] -= pr * x
                    hi = min(nn, k + 3)
                    cols = a[l:hi + 1, k:k + 2]
                    pc = x * cols[:, 0] + y * cols[:, 1]
                    cols[:, 1] -= pc * q
                    cols[:, 0] -= pc
            if l >= nn - 1:
                break
    return wr + 1j * wi


def _inverse_iteration(a: np.ndarray, lam: complex, scale: float, rng: np.random.Generator) -> np.ndarray:
    n = a.shape[0]
    # perturb the shift slightly so the shifted matrix is numerically invertible
    shift = lam + (1e-10 * scale) * (1 + 1j)
    m = a.astype(complex) - shift * np.eye(n)
    lu = scipy.linalg.lu_factor(m, check_finite=False)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    for _ in range(3):
        v = scipy.linalg.lu_solve(lu, v, check_finite=False)
        v /= np.linalg.norm(v)
    # fix the phase so the largest component is real and positive
    i = int(np.argmax(np.abs(v)))
    v *= np.conj(v[i]) / abs(v[i])
    return v


def eigen_spectrum(a, vectors: bool = False, balance_matrix: bool = True):
    """All eigenvalues of a real square matrix.

    Returns a complex array; with ``vectors=True`` returns ``(values, V)`` where
    column ``V[:, i]`` is a unit eigenvector for ``values[i]`` satisfying
    ``||A v - lambda v|| <= 1e-8 ||A||``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    if n == 0:
        values = np.zeros(0, dtype=complex)
        return (values, np.zeros((0, 0), dtype=complex)) if vectors else values
    # near under- or overflow, work on an exact power-of-two multiple instead
    peak = np.abs(a).max()
    shift = 0 if peak == 0 or SAFE_RANGE[0] < peak < SAFE_RANGE[1] else -math.frexp(peak)[1]
    a = np.ldexp(a, shift)
    b = balance(a)[0] if balance_matrix else a.copy()
    values = hqr(hessenberg(b))
    if not vectors:
        return _unscale(values, shift)
    norm_a = max(np.linalg.norm(a, 2), np.finfo(float).tiny)
    gen = np.random.Generator(np.random.PCG64(0x5EED))
    vecs = np.empty((n, n), dtype=complex)
    for i, lam in enumerate(values):
        v = _inverse_iteration(a, lam, norm_a, gen)
        err = np.linalg.norm(a @ v - lam * v)
        if err > BACKWARD_ERROR_TOL * norm_a:
            raise EigenConvergenceError(
                f"eigenvector for {lam:.6g} has backward error {err:.3e} > {BACKWARD_ERROR_TOL} * ||A||")
        vecs[:, i] = v
    return _unscale(values, shift), vecs


def _unscale(values: np.ndarray, shift: int) -> np.ndarray:
    if shift == 0:
        return values
    return np.ldexp(values.real, -shift) + 1j * np.ldexp(values.imag, -shift)


def leading(values: np.ndarray) -> int:
    """Index of the eigenvalue with the largest real part (ties broken by larger imaginary part)."""
    re = values.real
    best = np.flatnonzero(re == re.max())
    return int(best[np.argmax(values.imag[best])])
