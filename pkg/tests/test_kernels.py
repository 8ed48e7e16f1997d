"""Cross-checks the numba kernels against the pure-numpy lane."""

import numpy as np
import pytest

from hergnet import _kernels_numpy as knp

try:
    from hergnet import _kernels_numba as knb
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def _instance(D, n, Q, seed):
    rng = np.random.default_rng(seed)
    X = rng.random((n, D)) * 2.0
    theta = rng.uniform(0, 2 * np.pi, Q)
    if D == 2:
        S = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    else:
        z = rng.uniform(-1, 1, Q)
        st = np.sqrt(1 - z * z)
        S = np.stack([st * np.cos(theta), st * np.sin(theta), z], axis=1)
    d = rng.uniform(-1, 1, Q)
    k = 9.17
    n_faces = 2 * D
    face = rng.integers(0, n_faces, n)
    wtab = rng.normal(size=(n_faces, Q)) + 1j * rng.normal(size=(n_faces, Q))
    h = rng.normal(size=Q) + 1j * rng.normal(size=Q)
    hw = wtab * h[None, :]
    rsrc = rng.normal(size=n) + 1j * rng.normal(size=n)
    wadj = rng.normal(size=n) + 1j * rng.normal(size=n)
    naxis = rng.integers(0, D, n)
    nsign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return X, S, d, k, face, wtab, hw, h, rsrc, wadj, naxis, nsign


@needs_numba
@pytest.mark.parametrize("D", [2, 3])
@pytest.mark.parametrize("store_E", [True, False])
def test_boundary_forward_backward_lanes_agree(D, store_E):
    X, S, d, k, face, wtab, hw, h, rsrc, wadj, naxis, nsign = _instance(D, 257, 33, D)
    r1, E1 = knp.boundary_forward(X, S, d, k, face, hw, rsrc, store_E=store_E)
    r2, E2 = knb.boundary_forward(X, S, d, k, face, hw, rsrc, store_E=store_E)
    assert np.allclose(r1, r2, rtol=1e-11, atol=1e-12)
    g1, A1, B1 = knp.boundary_backward(X, S, d, k, face, wtab, naxis, nsign,
                                       wadj, E1)
    g2, A2, B2 = knb.boundary_backward(X, S, d, k, face, wtab, naxis, nsign,
                                       wadj, E2)
    assert np.allclose(g1, g2, rtol=1e-10, atol=1e-11)
    assert np.allclose(A1, A2, rtol=1e-10, atol=1e-11)
    assert np.allclose(B1, B2, rtol=1e-10, atol=1e-11)


@needs_numba
@pytest.mark.parametrize("D", [2, 3])
def test_field_eval_lanes_agree(D):
    X, S, d, k, _, _, _, h, _, _, _, _ = _instance(D, 101, 29, 10 + D)
    p1, g1 = knp.field_eval(X, S, d, h, k)
    p2, g2 = knb.field_eval(X, S, d, h, k)
    assert np.allclose(p1, p2, rtol=1e-11, atol=1e-12)
    assert np.allclose(g1, g2, rtol=1e-11, atol=1e-12)


def test_numpy_chunking_is_transparent(monkeypatch):
    # force tiny chunks and check results do not change
    X, S, d, k, face, wtab, hw, h, rsrc, wadj, naxis, nsign = _instance(3, 64, 16, 42)
    r1, _ = knp.boundary_forward(X, S, d, k, face, hw, rsrc, store_E=False)
    p1, gr1 = knp.field_eval(X, S, d, h, k)
    g1, A1, B1 = knp.boundary_backward(X, S, d, k, face, wtab, naxis, nsign, wadj)
    monkeypatch.setattr(knp, "_CHUNK_ELEMS", 50)
    r2, _ = knp.boundary_forward(X, S, d, k, face, hw, rsrc, store_E=False)
    p2, gr2 = knp.field_eval(X, S, d, h, k)
    g2, A2, B2 = knp.boundary_backward(X, S, d, k, face, wtab, naxis, nsign, wadj)
    assert np.allclose(r1, r2) and np.allclose(p1, p2) and np.allclose(gr1, gr2)
    assert np.allclose(g1, g2) and np.allclose(A1, A2) and np.allclose(B1, B2)


def test_backend_env_flag():
    import subprocess
    import sys
    out = subprocess.run(
        [sys.executable, "-c", "import hergnet; print(hergnet.backend_name())"],
        env={"PATH": "/usr/bin:/bin", "HERGNET_NO_NUMBA": "1"},
        capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"
