"""Dense non-symmetric eigensolver.

Householder reduction to Hessenberg form, then implicit single-shift QR
iteration in complex arithmetic (Wilkinson shifts, deflation, exceptional
shifts on stagnation). The unitary factor is accumulated so eigenvectors
come out of the triangular Schur factor by back-substitution, with an
inverse-iteration polish for any pair whose residual is above contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, ContractError, DimensionError, NumericalError

_DEFLATE = 4e-15
_SWEEPS_PER_N = 100  # QR sweep budget is 100 * n


@dataclass
class ComplexSpectrum:
    """Eigenvalues (complex, length n) and optional matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray | None = None

    @property
    def pairs(self):
        return [(float(v.real), float(v.imag)) for v in self.values]

    def max_imag(self):
        return float(np.abs(self.values.imag).max()) if len(self.values) else 0.0


def _hessenberg(A):
    """Orthogonal reduction A = Q H Q^T with H upper Hessenberg."""
    n = A.shape[0]
    H = np.array(A, dtype=np.float64)
    Q = np.eye(n)
    for k in range(n - 2):
        x = H[k + 1 :, k]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            continue
        v = x.copy()
        v[0] += np.copysign(normx, x[0]) if x[0] != 0.0 else normx
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        H[k + 1 :, k:] -= 2.0 * np.outer(v, v @ H[k + 1 :, k:])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v)
        Q[:, k + 1 :] -= 2.0 * np.outer(Q[:, k + 1 :] @ v, v)
        H[k + 2 :, k] = 0.0
    return H, Q


def _givens(f, g):
    """Unitary [[c, s], [-conj(s), c]] (c real) annihilating the second entry of (f, g)."""
    if g == 0:
        return 1.0, 0.0 + 0.0j
    if f == 0:
        return 0.0, 1.0 + 0.0j
    af = abs(f)
    r = np.hypot(af, abs(g))
    return af / r, (f / af) * np.conj(g) / r


def _wilkinson_shift(a, b, c, d):
    """Eigenvalue of [[a, b], [c, d]] closest to d."""
    half = 0.5 * (a + d)
    disc = np.sqrt(complex((a - d) * (a - d) * 0.25 + b * c))
    mu1, mu2 = half + disc, half - disc
    if abs(mu1 - d) < abs(mu2 - d):
        return mu1
    if abs(mu2 - d) < abs(mu1 - d):
        return mu2
    return mu1 if mu1.imag >= 0 else mu2


def _schur(H, Q, n, anorm):
    """Complex triangular Schur form of a real Hessenberg matrix."""
    T = H.astype(np.complex128)
    U = Q.astype(np.complex128)
    cap = _SWEEPS_PER_N * max(n, 1)
    sweeps = 0
    stagnation = 0
    hi = n - 1
    while hi > 0:
        base = abs(T[hi - 1, hi - 1]) + abs(T[hi, hi])
        thresh = _DEFLATE * (base if base > 0.0 else max(anorm, 1.0))
        if abs(T[hi, hi - 1]) <= thresh:
            T[hi, hi - 1] = 0.0
            hi -= 1
            stagnation = 0
            continue
        lo = hi
        while lo > 0:
            base = abs(T[lo - 1, lo - 1]) + abs(T[lo, lo])
            thresh = _DEFLATE * (base if base > 0.0 else max(anorm, 1.0))
            if abs(T[lo, lo - 1]) <= thresh:
                T[lo, lo - 1] = 0.0
                break
            lo -= 1

        if stagnation > 0 and stagnation % 12 == 0:
            mu = T[hi, hi] + 0.75 * abs(T[hi, hi - 1])
        else:
            mu = _wilkinson_shift(T[hi - 1, hi - 1], T[hi - 1, hi], T[hi, hi - 1], T[hi, hi])

        x = T[lo, lo] - mu
        y = T[lo + 1, lo]
        for k in range(lo, hi):
            c, s = _givens(x, y)
            sc = np.conj(s)
            rk, rk1 = T[k, :].copy(), T[k + 1, :]
            T[k, :] = c * rk + s * rk1
            T[k + 1, :] = -sc * rk + c * rk1
            ck, ck1 = T[:, k].copy(), T[:, k + 1]
            T[:, k] = c * ck + sc * ck1
            T[:, k + 1] = -s * ck + c * ck1
            uk, uk1 = U[:, k].copy(), U[:, k + 1]
            U[:, k] = c * uk + sc * uk1
            U[:, k + 1] = -s * uk + c * uk1
            if k < hi - 1:
                x = T[k + 1, k]
                y = T[k + 2, k]

        sweeps += 1
        stagnation += 1
        if sweeps > cap:
            raise NumericalError(
                f"QR iteration exceeded {cap} sweeps; stuck block spans rows {lo}..{hi}"
            )
    return T, U


def _triangular_vectors(T, U):
    """Eigenvectors of U T U^H from back-substitution on the triangular factor."""
    n = T.shape[0]
    tscale = max(float(np.abs(T).max()), 1e-300)
    V = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        y = np.zeros(n, dtype=np.complex128)
        y[i] = 1.0
        lam = T[i, i]
        for k in range(i - 1, -1, -1):
            d = T[k, k] - lam
            if abs(d) < 1e-15 * tscale:
                d = 1e-15 * tscale
            y[k] = -(T[k, k + 1 : i + 1] @ y[k + 1 : i + 1]) / d
        u = U @ y
        V[:, i] = u / np.linalg.norm(u)
    return V


def _polish(A, values, V, anorm):
    """Inverse-iteration touch-up for eigenpairs whose residual misses contract."""
    Ac = A.astype(np.complex128)
    eye = np.eye(A.shape[0], dtype=np.complex128)
    for i in range(len(values)):
        v = V[:, i]
        res = np.linalg.norm(Ac @ v - values[i] * v)
        if res <= 0.5e-8 * anorm:
            continue
        shift = values[i] + 1e-12 * max(anorm, 1.0)
        for _ in range(3):
            try:
                w = np.linalg.solve(Ac - shift * eye, v)
            except np.linalg.LinAlgError:
                shift = shift + 1e-10 * max(anorm, 1.0) * (1.0 + 1.0j)
                continue
            v = w / np.linalg.norm(w)
            if np.linalg.norm(Ac @ v - values[i] * v) <= 0.5e-8 * anorm:
                break
        V[:, i] = v
    return V


def eig_dense(A, want_vectors: bool = True, max_n: int = 2000) -> ComplexSpectrum:
    """All eigenvalues (and optionally eigenvectors) of a real square matrix."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"eigensolver needs a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n > max_n:
        raise ConfigurationError(f"matrix dimension {n} exceeds the configured cap {max_n}")
    if not np.isfinite(A).all():
        raise ContractError("matrix has non-finite entries")
    if n == 0:
        return ComplexSpectrum(np.zeros(0, dtype=np.complex128), np.zeros((0, 0), np.complex128))
    if n == 1:
        return ComplexSpectrum(
            A[0, 0] + np.zeros(1, dtype=np.complex128),
            np.ones((1, 1), dtype=np.complex128) if want_vectors else None,
        )

    anorm = float(np.linalg.norm(A))
    H, Q = _hessenberg(A)
    T, U = _schur(H, Q, n, anorm)
    values = np.diag(T).copy()
    if not want_vectors:
        return ComplexSpectrum(values, None)
    V = _triangular_vectors(T, U)
    V = _polish(A, values, V, anorm if anorm > 0 else 1.0)
    return ComplexSpectrum(values, V)
