"""Dense complex factorizations used for unitary projection and gate compilation.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Everything here is
written out by hand (Householder QR, Hessenberg + shifted QR for Schur,
one-sided Jacobi for the SVD) so that results are deterministic bit-for-bit
and independent of the LAPACK build underneath numpy.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DimensionError, NotUnitaryError, SingularMatrixError

_EPS = np.finfo(float).eps


class FactorPair(NamedTuple):
    first: np.ndarray
    second: np.ndarray


class SVDResult(NamedTuple):
    w: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


class UnitaryEig(NamedTuple):
    vectors: np.ndarray
    phases: np.ndarray


def as_complex_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _square(m) -> np.ndarray:
    a = as_complex_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def _householder(x):
    """Return (v, beta) with (I - beta v v^H) x = alpha e_1, or None if x is already aligned."""
    tail = np.linalg.norm(x[1:])
    if tail == 0.0:
        return None
    norm = np.hypot(abs(x[0]), tail)
    phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
    v = x.copy()
    v[0] += phase * norm
    beta = 2.0 / np.vdot(v, v).real
    return v, beta


def qr_decompose(m) -> FactorPair:
    """Householder QR with the diagonal of R made real and non-negative.

    The sign convention makes Q unique for full-rank input, so a unitary input
    comes back as Q == input, R == I (to rounding).
    """
    a = _square(m)
    n = a.shape[0]
    r = a.copy()
    q = np.eye(n, dtype=complex)
    for k in range(n - 1):
        h = _householder(r[k:, k])
        if h is None:
            continue
        v, beta = h
        r[k:, k:] -= beta * np.outer(v, v.conj() @ r[k:, k:])
        q[:, k:] -= beta * np.outer(q[:, k:] @ v, v.conj())
        r[k + 1:, k] = 0.0
    d = np.diag(r)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    q = q * phase[None, :]
    r = phase.conj()[:, None] * r
    r[np.diag_indices(n)] = mag
    return FactorPair(q, np.triu(r))


def hessenberg(m) -> FactorPair:
    """Reduce to upper Hessenberg form: m = Q H Q^H."""
    h = _square(m).copy()
    n = h.shape[0]
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        hv = _householder(h[k + 1:, k])
        if hv is None:
            continue
        v, beta = hv
        h[k + 1:, :] -= beta * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= beta * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= beta * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return FactorPair(q, h)


def _givens(a, b):
    r = np.hypot(abs(a), abs(b))
    if r == 0.0:
        return 1.0 + 0j, 0j
    return a / r, b / r


def _wilkinson_shift(a, b, c, d):
    half = 0.5 * (a - d)
    root = np.sqrt(half * half + b * c)
    mu1 = d - b * c / (half + root) if half + root != 0 else d
    mu2 = d - b * c / (half - root) if half - root != 0 else d
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def schur_decompose(m) -> FactorPair:
    """Complex Schur form m = Q T Q^H with Q unitary and T upper triangular.

    Hessenberg reduction followed by single-shift QR sweeps with a Wilkinson
    shift. Eigenvalues are left in whatever order deflation produces them; an
    input that is already triangular comes back untouched (Q = I).
    """
    a = _square(m)
    n = a.shape[0]
    q, h = hessenberg(a)
    h = h.copy()
    anorm = np.linalg.norm(a)
    budget = 100 * n
    iters = 0
    stalled = 0
    hi = n - 1
    while hi > 0:
        lo = hi
        while lo > 0:
            scale = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if scale == 0.0:
                scale = anorm
            if abs(h[lo, lo - 1]) <= 1e-14 * scale:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            stalled = 0
            continue
        if iters >= budget:
            raise ConvergenceError(
                f"Schur iteration did not converge in {budget} sweeps",
                residual=abs(h[hi, hi - 1]),
            )
        iters += 1
        stalled += 1
        if stalled % 11 == 10:
            # exceptional shift to break cycles
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            mu = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        idx = np.arange(lo, hi + 1)
        h[idx, idx] -= mu
        rots = []
        for k in range(lo, hi):
            c, s = _givens(h[k, k], h[k + 1, k])
            rows = h[[k, k + 1], k:].copy()
            h[k, k:] = c.conjugate() * rows[0] + s.conjugate() * rows[1]
            h[k + 1, k:] = -s * rows[0] + c * rows[1]
            h[k + 1, k] = 0.0
            rots.append((k, c, s))
        for k, c, s in rots:
            top = min(k + 2, hi) + 1
            cols = h[:top, [k, k + 1]].copy()
            h[:top, k] = cols[:, 0] * c + cols[:, 1] * s
            h[:top, k + 1] = -cols[:, 0] * s.conjugate() + cols[:, 1] * c.conjugate()
            qc = q[:, [k, k + 1]].copy()
            q[:, k] = qc[:, 0] * c + qc[:, 1] * s
            q[:, k + 1] = -qc[:, 0] * s.conjugate() + qc[:, 1] * c.conjugate()
        h[idx, idx] += mu
    return FactorPair(q, np.triu(h))


def _complete_basis(cols: np.ndarray, dim: int) -> np.ndarray:
    """Extend orthonormal columns to a full dim x dim unitary."""
    basis = [c for c in cols.T]
    eye = np.eye(dim, dtype=complex)
    while len(basis) < dim:
        best, best_norm = None, -1.0
        for e in eye:
            r = e.copy()
            for _ in range(2):
                for b in basis:
                    r -= np.vdot(b, r) * b
            nr = np.linalg.norm(r)
            if nr > best_norm:
                best, best_norm = r, nr
        basis.append(best / best_norm)
    return np.array(basis).T


def _jacobi_tall(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 80):
    m, n = a.shape
    u = a.copy()
    v = np.eye(n, dtype=complex)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                up, uq = u[:, p], u[:, q]
                alpha = np.vdot(up, up).real
                beta = np.vdot(uq, uq).real
                gamma = np.vdot(up, uq)
                g = abs(gamma)
                if g == 0.0 or g <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                phase = gamma / g
                zeta = (beta - alpha) / (2.0 * g)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                new_p = c * up - s * phase.conjugate() * uq
                new_q = s * phase * up + c * uq
                u[:, p], u[:, q] = new_p, new_q
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * phase.conjugate() * vq
                v[:, q] = s * phase * vp + c * vq
        if not rotated:
            return u, v
    gram = u.conj().T @ u
    off = np.linalg.norm(gram - np.diag(np.diag(gram)))
    raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps", residual=off)


def svd(m) -> SVDResult:
    """Singular value decomposition m = W diag(sigma) V^H, sigma descending.

    W and V are square unitaries; sigma has min(rows, cols) entries.
    """
    a = as_complex_matrix(m)
    rows, cols = a.shape
    if rows < cols:
        w, sigma, v = svd(a.conj().T)
        return SVDResult(v, sigma, w)
    u, v = _jacobi_tall(a)
    sigma = np.linalg.norm(u, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    u = u[:, order]
    v = v[:, order]
    smax = sigma[0] if sigma.size else 0.0
    keep = sigma > max(smax * 1e-15, np.finfo(float).tiny)
    w_cols = u[:, keep] / sigma[keep]
    w = _complete_basis(w_cols, rows)
    return SVDResult(w, sigma, v)


def polar_decompose(m) -> FactorPair:
    """Polar factors m = U P with U unitary (the Frobenius-nearest) and P PSD."""
    a = _square(m)
    w, sigma, v = svd(a)
    if sigma[0] == 0.0 or sigma[-1] <= 1e-12 * sigma[0]:
        raise SingularMatrixError(
            f"polar factor is not unique: sigma_min/sigma_max = {sigma[-1] / max(sigma[0], _EPS):.3e}"
        )
    u = w @ v.conj().T
    p = (v * sigma[None, :]) @ v.conj().T
    p = 0.5 * (p + p.conj().T)
    return FactorPair(u, p)


def unitarity_residual(m) -> float:
    a = np.asarray(m, dtype=complex)
    return float(np.linalg.norm(a.conj().T @ a - np.eye(a.shape[0])))


def eig_unitary(u) -> UnitaryEig:
    """Eigendecomposition u = V diag(exp(i*phases)) V^H of a unitary matrix.

    Phases lie in (-pi, pi]. Relies on the Schur form of a normal matrix being
    diagonal.
    """
    a = _square(u)
    res = unitarity_residual(a)
    if res > 1e-8:
        raise NotUnitaryError(f"eig_unitary needs a unitary input (residual {res:.3e})", residual=res)
    q, t = schur_decompose(a)
    phases = np.angle(np.diag(t))
    phases = np.where(phases <= -np.pi, np.pi, phases)
    return UnitaryEig(q, phases)


def frobenius_distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def dist_up_to_global_phase(a, b) -> float:
    """min over phi of ||a - exp(i phi) b||_F.

    The minimizing phase is arg tr(b^H a); the norm is then evaluated directly
    rather than through ||a||^2 + ||b||^2 - 2|tr(a^H b)|, which cancels badly
    when a and b are close.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if overlap != 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


def random_complex(n: int, rng: np.random.Generator, cols: int | None = None) -> np.ndarray:
    cols = n if cols is None else cols
    return rng.standard_normal((n, cols)) + 1j * rng.standard_normal((n, cols))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    return qr_decompose(random_complex(n, rng)).first


def matrix_to_json(m) -> dict:
    a = _square(m)
    return {
        "n": a.shape[0],
        "re": a.real.ravel().tolist(),
        "im": a.imag.ravel().tolist(),
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    n = int(obj["n"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.size != n * n or im.size != n * n:
        raise DimensionError(f"expected {n * n} entries for n={n}")
    return (re + 1j * im).reshape(n, n)


def save_matrix(path, m) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(m)))


def load_matrix(path) -> np.ndarray:
    return matrix_from_json(json.loads(Path(path).read_text()))
