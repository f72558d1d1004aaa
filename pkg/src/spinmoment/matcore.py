"""Dense complex / Hermitian linear algebra primitives shared by all modules."""

from __future__ import annotations

import math

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-8

_JACOBI_MAX_SWEEPS = 64


def hermitize(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return (A + A^dag)/2, rejecting inputs further than ``tol`` from Hermitian.

    The symmetrization makes diagonal imaginary parts exactly zero; deviations
    beyond ``tol`` are treated as caller bugs rather than numerical noise.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dev = float(np.abs(a - a.conj().T).max()) if a.size else 0.0
    if dev > tol:
        raise ValueError(
            f"matrix is not Hermitian: max |A - A^dag| = {dev:.3e} exceeds {tol:.1e}"
        )
    return (a + a.conj().T) / 2.0


def hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Hilbert-Schmidt inner product tr(A^dag B), real part."""
    return float(np.real(np.sum(np.conj(a) * b)))


def _jacobi(a: np.ndarray, want_vectors: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Cyclic complex Jacobi diagonalization of a Hermitian matrix.

    Rotations sweep the strict upper triangle in a fixed row-major order, so
    the iteration is bit-reproducible for identical inputs.  Returns the
    unsorted diagonal and the accumulated unitary (or None).
    """
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    v = np.eye(n, dtype=complex) if want_vectors else None
    if n == 1:
        return h.real.diagonal().copy(), v

    scale = max(1.0, float(np.abs(h).max()))
    stop = 1e-15 * scale
    skip = 1e-2 * stop

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            row = np.abs(h[p, p + 1 :])
            if row.size:
                off = max(off, float(row.max()))
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                beta = h[p, q]
                r = abs(beta)
                if r <= skip:
                    continue
                tau = (h[q, q].real - h[p, p].real) / (2.0 * r)
                t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = (t * c) * (beta / r)
                sc = np.conj(s)

                hp = h[:, p].copy()
                hq = h[:, q].copy()
                h[:, p] = c * hp - sc * hq
                h[:, q] = s * hp + c * hq
                rp = h[p, :].copy()
                rq = h[q, :].copy()
                h[p, :] = c * rp - s * rq
                h[q, :] = sc * rp + c * rq
                h[p, q] = 0.0
                h[q, p] = 0.0
                h[p, p] = h[p, p].real
                h[q, q] = h[q, q].real

                if v is not None:
                    vp = v[:, p].copy()
                    vq = v[:, q].copy()
                    v[:, p] = c * vp - sc * vq
                    v[:, q] = s * vp + c * vq
    else:
        raise ArithmeticError("Jacobi eigensolver failed to converge")

    return h.real.diagonal().copy(), v


def hermitian_eig(h: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition H = U diag(w) U^dag of a Hermitian matrix.

    Eigenvalues are returned in ascending order; U's columns are the matching
    orthonormal eigenvectors.
    """
    a = hermitize(h, tol=tol)
    vals, vecs = _jacobi(a, want_vectors=True)
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def hermitian_eigvals(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Eigenvalues only (ascending); skips eigenvector accumulation."""
    a = hermitize(h, tol=tol)
    vals, _ = _jacobi(a, want_vectors=False)
    return np.sort(vals)


def min_eigenvalue(h: np.ndarray, tol: float = HERMITIAN_TOL) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(hermitian_eigvals(h, tol=tol)[0])


def is_psd(h: np.ndarray, tol: float = PSD_TOL) -> bool:
    """True iff the minimum eigenvalue is >= -tol."""
    return min_eigenvalue(h) >= -tol


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_transpose_b(x: np.ndarray) -> np.ndarray:
    """Partial transpose on the second factor of a 2 (x) 2 qubit pair.

    Entry (i k, j l) of the output equals entry (i l, j k) of the input.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (4, 4):
        raise ValueError(f"partial transpose expects a 4x4 two-qubit matrix, got {x.shape}")
    return x.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def partial_trace(x: np.ndarray, dims: tuple[int, int], keep: int | str) -> np.ndarray:
    """Trace out one factor of a bipartite operator on C^dA (x) C^dB.

    ``keep`` selects the surviving subsystem: 0/"A" or 1/"B".
    """
    da, db = int(dims[0]), int(dims[1])
    x = np.asarray(x, dtype=complex)
    if x.shape != (da * db, da * db):
        raise ValueError(f"operator shape {x.shape} does not match dims {dims}")
    t = x.reshape(da, db, da, db)
    if keep in (0, "A", "a"):
        return np.einsum("ikjk->ij", t)
    if keep in (1, "B", "b"):
        return np.einsum("kikj->ij", t)
    raise ValueError(f"keep must be 0/'A' or 1/'B', got {keep!r}")


def symmetric_isometry(n: int, cap: int = 12) -> np.ndarray:
    """Isometry from C^(n+1) onto the permutation-symmetric subspace of n qubits.

    Column m is the normalized sum of all computational basis vectors of
    Hamming weight m, so V^dag V = I_(n+1).  ``cap`` bounds the 2^n memory.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    if n > cap:
        raise ValueError(f"n = {n} exceeds the configured memory cap of {cap} qubits")
    dim = 1 << n
    v = np.zeros((dim, n + 1), dtype=complex)
    weights = np.array([bin(i).count("1") for i in range(dim)])
    for m in range(n + 1):
        hits = weights == m
        v[hits, m] = 1.0 / math.sqrt(int(hits.sum()))
    return v


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal Hermitian basis of d x d matrices, identity-first.

    Element 0 is I/sqrt(d); the rest are traceless (generalized Gell-Mann
    matrices), so tr(B_i B_j) = delta_ij and tr(B_i) is nonzero only for i=0.
    """
    mats = [np.eye(d, dtype=complex) / math.sqrt(d)]
    for level in range(1, d):
        g = np.zeros((d, d), dtype=complex)
        g[np.arange(level), np.arange(level)] = 1.0
        g[level, level] = -level
        mats.append(g / math.sqrt(level * (level + 1)))
    for k in range(d):
        for l in range(k + 1, d):
            g = np.zeros((d, d), dtype=complex)
            g[k, l] = g[l, k] = 1.0 / math.sqrt(2.0)
            mats.append(g)
            g = np.zeros((d, d), dtype=complex)
            g[k, l] = -1j / math.sqrt(2.0)
            g[l, k] = 1j / math.sqrt(2.0)
            mats.append(g)
    return np.stack(mats)
