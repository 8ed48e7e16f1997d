"""Pure-numpy implementations of the hot kernels.

Everything is chunked over evaluation points so peak memory stays bounded
even when the n_points x n_directions phase matrix would not fit.
"""

import numpy as np

# max elements of a (chunk x n_directions) temporary, ~128 MB complex128
_CHUNK_ELEMS = 8_000_000


def _chunk_rows(n_points: int, n_dir: int) -> int:
    return max(1, min(n_points, _CHUNK_ELEMS // max(1, n_dir)))


def boundary_forward(X, S, d, k, face_idx, hw, rsrc, store_E=True):
    """Boundary residuals r_i = (1/Q) sum_j E_ij hw[face_i, j] + rsrc_i
    with E_ij = exp(i k (x_i . s_j + d_j)).

    Returns (r, E); E is None when store_E is False (it is then recomputed
    by boundary_backward).
    """
    n, Q = X.shape[0], S.shape[0]
    r = np.empty(n, dtype=complex)
    E = np.empty((n, Q), dtype=complex) if store_E else None
    step = _chunk_rows(n, Q)
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        Ec = np.exp(1j * k * (X[lo:hi] @ S.T + d[None, :]))
        r[lo:hi] = np.einsum("ij,ij->i", Ec, hw[face_idx[lo:hi]]) / Q
        if store_E:
            E[lo:hi] = Ec
    return r + rsrc, E


def boundary_backward(X, S, d, k, face_idx, wtab, normal_axis, normal_sign,
                      wadj, E=None):
    """Per-direction adjoint sums of the boundary loss.

    g_j = (1/Q) sum_i wadj_i E_ij wtab[face_i, j]
    A_jd = (1/Q) sum_i wadj_i E_ij wtab[face_i, j] x_id
    B_jd = (1/Q) sum_i wadj_i E_ij n_id
    """
    n, D = X.shape
    Q = S.shape[0]
    g = np.zeros(Q, dtype=complex)
    A = np.zeros((Q, D), dtype=complex)
    B = np.zeros((Q, D), dtype=complex)
    nrm = np.zeros((n, D))
    nrm[np.arange(n), normal_axis] = normal_sign
    step = _chunk_rows(n, Q)
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        Ec = (E[lo:hi] if E is not None
              else np.exp(1j * k * (X[lo:hi] @ S.T + d[None, :])))
        Cc = Ec * wtab[face_idx[lo:hi]]
        u = wadj[lo:hi]
        g += Cc.T @ u
        A += Cc.T @ (u[:, None] * X[lo:hi])
        B += Ec.T @ (u[:, None] * nrm[lo:hi])
    return g / Q, A / Q, B / Q


def field_eval(X, S, d, h, k):
    """Plane-wave sum p and its spatial gradient at interior points.

    p_i = (1/Q) sum_j E_ij h_j,  grad_id = (1/Q) sum_j i k s_jd E_ij h_j.
    """
    n, D = X.shape
    Q = S.shape[0]
    p = np.empty(n, dtype=complex)
    grad = np.empty((n, D), dtype=complex)
    step = _chunk_rows(n, Q)
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        Ec = np.exp(1j * k * (X[lo:hi] @ S.T + d[None, :]))
        Eh = Ec * h[None, :]
        p[lo:hi] = Eh.sum(axis=1) / Q
        grad[lo:hi] = 1j * k * (Eh @ S) / Q
    return p, grad
