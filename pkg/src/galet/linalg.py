"""Dense linear-algebra helpers on numpy arrays.

Vectors are 1-d float arrays, matrices 2-d float arrays. Everything here is
a pure function of its arguments.
"""
import numpy as np

from .errors import InvalidInputError

DEFAULT_RANK_TOL = 1e-9
DEFAULT_FD_STEP = 1e-5


def _as_matrix(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise InvalidInputError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    return m


def matvec(m, v):
    m = _as_matrix(m)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != m.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: matrix {m.shape} times vector {v.shape}"
        )
    return m @ v


def singular_values(m):
    """Singular values in decreasing order."""
    return np.linalg.svd(_as_matrix(m), compute_uv=False)


def pseudoinverse(m, tol=DEFAULT_RANK_TOL):
    """Moore-Penrose inverse via SVD.

    Singular values at or below ``tol * sigma_max`` are treated as zero.
    """
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    m = _as_matrix(m)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]))
    keep = s > tol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vt.T * s_inv) @ u.T


def numerical_rank(m, tol=DEFAULT_RANK_TOL):
    s = singular_values(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def smallest_nonzero_singular_value(m, tol=DEFAULT_RANK_TOL):
    s = singular_values(m)
    if s.size == 0 or s[0] == 0.0:
        raise InvalidInputError("all-zero matrix has no nonzero singular value")
    return float(s[s > tol * s[0]].min())


def central_diff_grad(h, p, step=DEFAULT_FD_STEP):
    """Central-difference gradient of the scalar field ``h`` at ``p``."""
    if not step > 0:
        raise InvalidInputError("step must be positive")
    p = np.asarray(p, dtype=float)
    grad = np.empty_like(p)
    e = np.zeros_like(p)
    for i in range(p.size):
        e[i] = step
        hp, hm = h(p + e), h(p - e)
        e[i] = 0.0
        if not (np.isfinite(hp) and np.isfinite(hm)):
            raise FloatingPointError(f"non-finite function value along coordinate {i}")
        grad[i] = (hp - hm) / (2 * step)
    return grad


def central_diff_directional(fn, p, direction, step=DEFAULT_FD_STEP):
    """Central difference of a vector-valued ``fn`` along ``direction``."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(direction, dtype=float)
    out = (np.asarray(fn(p + step * d)) - np.asarray(fn(p - step * d))) / (2 * step)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite directional difference")
    return out
