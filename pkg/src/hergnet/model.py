"""The trainable plane-wave field representation.

The pressure is an average of N_quad plane waves e^{ik(x.s_j + d_j)} whose
complex amplitudes h(s_j) come from a small complex-valued network (input
D -> 10 -> 10 -> 1, split-ReLU activations, linear complex output).  The
direction angles, the phase offsets d_j and the network weights are all
trainable.  Every term solves the homogeneous Helmholtz equation exactly,
so the sum does too; a monopole term is added when the domain has a point
source.

Time convention e^{-i omega t}: the outgoing monopole carries e^{+ikr} and
the normal velocity is v_n = i (grad p . n) / (rho c k).
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import kernels
from .geometry import DirectionAngles, PhysicalConfig, ShoeboxDomain, sample_directions
from .special import hankel1_0, hankel1_1

HIDDEN = (10, 10)


@dataclass
class CVNNParams:
    """Complex-valued fully connected network, layers as (weight, bias).

    Fixed architecture input_dim -> 10 -> 10 -> 1.  Hidden layers use the
    split ReLU max(Re, 0) + i max(Im, 0); the output layer is linear so the
    density can range over all of C.
    """
    layers: List[Tuple[np.ndarray, np.ndarray]]

    def __post_init__(self):
        for li in range(1, len(self.layers)):
            if self.layers[li][0].shape[1] != self.layers[li - 1][0].shape[0]:
                raise ValueError("layer dimensions do not chain")
        for W, b in self.layers:
            if b.shape[0] != W.shape[0]:
                raise ValueError("bias length does not match layer output")
        if self.layers[-1][0].shape[0] != 1:
            raise ValueError("output dimension must be 1")

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    def n_real_params(self) -> int:
        return 2 * sum(W.size + b.size for W, b in self.layers)


@dataclass
class HergNetParams:
    """Trainable state: direction angles, phase offsets, network weights."""
    angles: DirectionAngles
    d: np.ndarray
    net: CVNNParams

    def __post_init__(self):
        if len(self.d) != len(self.angles):
            raise ValueError("phase offsets and directions must have equal length")
        if self.net.input_dim != self.angles.ndim:
            raise ValueError("network input dimension must match D")

    @property
    def ndim(self) -> int:
        return self.angles.ndim

    @property
    def n_quad(self) -> int:
        return len(self.d)

    def n_real_params(self) -> int:
        n_angle = self.n_quad * (self.ndim - 1)
        return n_angle + self.n_quad + self.net.n_real_params()


@dataclass
class FieldSample:
    p: complex
    grad: np.ndarray


def param_count(D: int, n_quad: int) -> int:
    """Total real trainable parameter count for the fixed architecture."""
    sizes = [D, *HIDDEN, 1]
    n_net = 2 * sum(sizes[i + 1] * sizes[i] + sizes[i + 1] for i in range(len(sizes) - 1))
    return (D - 1) * n_quad + n_quad + n_net


def init_params(D: int, n_quad: int, rng: np.random.Generator) -> HergNetParams:
    """Directions uniform on the circle/sphere, d_j ~ U(-1, 1), He-style
    complex init: Re and Im of each weight i.i.d. N(0, 1/fan_in), zero bias.
    The per-part variance 1/fan_in is half the real-valued He variance."""
    if n_quad < 1:
        raise ValueError("n_quad must be >= 1")
    angles = sample_directions(D, n_quad, rng)
    d = rng.uniform(-1.0, 1.0, n_quad)
    sizes = [D, *HIDDEN, 1]
    layers = []
    for fan_out, fan_in in zip(sizes[1:], sizes[:-1]):
        sd = np.sqrt(1.0 / fan_in)
        W = rng.normal(0.0, sd, (fan_out, fan_in)) + 1j * rng.normal(0.0, sd, (fan_out, fan_in))
        b = np.zeros(fan_out, dtype=complex)
        layers.append((W, b))
    return HergNetParams(angles=angles, d=d, net=CVNNParams(layers))


def _crelu(z):
    return np.maximum(z.real, 0.0) + 1j * np.maximum(z.imag, 0.0)


def cvnn_forward(net: CVNNParams, s: np.ndarray) -> complex:
    """Density h(s) for a single real direction vector s."""
    return cvnn_forward_batch(net, np.asarray(s, dtype=float)[None, :])[0]


def cvnn_forward_batch(net: CVNNParams, S: np.ndarray) -> np.ndarray:
    """h(s_j) for a batch of direction vectors, shape (Q, D) -> (Q,)."""
    a = S.astype(complex)
    for W, b in net.layers[:-1]:
        a = _crelu(a @ W.T + b)
    W, b = net.layers[-1]
    return (a @ W.T + b)[:, 0]


def cvnn_forward_cached(net: CVNNParams, S: np.ndarray):
    """Forward pass keeping pre-activations for the backward pass."""
    a = S.astype(complex)
    acts = [a]
    pre = []
    for W, b in net.layers[:-1]:
        z = a @ W.T + b
        pre.append(z)
        a = _crelu(z)
        acts.append(a)
    W, b = net.layers[-1]
    z = a @ W.T + b
    pre.append(z)
    return z[:, 0], (acts, pre)


def cvnn_backward(net: CVNNParams, cache, out_cotangent: np.ndarray):
    """Reverse pass treating each complex parameter as a Re/Im pair.

    out_cotangent is complex with Re = dL/dRe(h), Im = dL/dIm(h) per sample.
    Returns ([(dW, db), ...] in the layer convention dL/dRe + i dL/dIm, and
    the cotangent of the real input vectors, shape (Q, D).

    The algebra below is the real-pair chain rule written with complex
    arithmetic: for z = a @ W.T + b one gets dW = u.T @ conj(a),
    db = sum(u), u_a = u @ conj(W); the split ReLU masks Re and Im of u
    independently, with subgradient 0 at exactly 0.
    """
    acts, pre = cache
    u = out_cotangent[:, None]
    grads = [None] * len(net.layers)
    for li in range(len(net.layers) - 1, -1, -1):
        W, _ = net.layers[li]
        if li < len(net.layers) - 1:
            z = pre[li]
            u = u.real * (z.real > 0.0) + 1j * (u.imag * (z.imag > 0.0))
        a_in = acts[li]
        grads[li] = (u.T @ np.conj(a_in), u.sum(axis=0))
        u = u @ np.conj(W)
    ds = u.real
    return grads, ds


def herglotz_pressure(params: HergNetParams, x: np.ndarray, k: float) -> complex:
    """The plane-wave average at a single point x."""
    p, _ = evaluate_herglotz(params, np.asarray(x, dtype=float)[None, :], k)
    return p[0]


def herglotz_gradient(params: HergNetParams, x: np.ndarray, k: float) -> np.ndarray:
    """Analytic spatial gradient (1/Q) sum i k s_j e^{ik(x.s_j+d_j)} h(s_j)."""
    _, g = evaluate_herglotz(params, np.asarray(x, dtype=float)[None, :], k)
    return g[0]


def evaluate_herglotz(params: HergNetParams, X: np.ndarray, k: float):
    """Batched pressure and gradient at points X, shape (n, D)."""
    S = params.angles.unit_vectors()
    h = cvnn_forward_batch(params.net, S)
    return kernels.field_eval(np.asarray(X, dtype=float), S, params.d, h, float(k))


def monopole_batch(X: np.ndarray, x0: np.ndarray, k: float, D: int):
    """Outgoing free-field monopole G and its gradient at points X.

    3D: G = e^{ikr}/(4 pi r).  2D: G = (i/4) H0^(1)(kr).  Both satisfy
    (lap + k^2) G = -delta(x - x0).
    """
    X = np.asarray(X, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    dv = X - x0[None, :]
    r = np.sqrt((dv * dv).sum(axis=1))
    if np.any(r == 0.0):
        raise ZeroDivisionError("monopole evaluated at the source point")
    rhat = dv / r[:, None]
    if D == 3:
        G = np.exp(1j * k * r) / (4.0 * np.pi * r)
        dGdr = (1j * k * r - 1.0) * np.exp(1j * k * r) / (4.0 * np.pi * r * r)
    elif D == 2:
        G = 0.25j * hankel1_0(k * r)
        dGdr = -0.25j * k * hankel1_1(k * r)
    else:
        raise ValueError("D must be 2 or 3")
    return G, dGdr[:, None] * rhat


def monopole(x, x0, k: float, D: int) -> FieldSample:
    G, dG = monopole_batch(np.asarray(x, dtype=float)[None, :], x0, k, D)
    return FieldSample(p=G[0], grad=dG[0])


def total_field_batch(params: HergNetParams, X: np.ndarray,
                      config: PhysicalConfig, domain: ShoeboxDomain):
    """Plane-wave field plus the monopole correction when a source exists."""
    p, grad = evaluate_herglotz(params, X, config.k)
    if domain.source is not None:
        G, dG = monopole_batch(X, np.asarray(domain.source), config.k, domain.ndim)
        p = p + G
        grad = grad + dG
    return p, grad


def total_field(params: HergNetParams, x, config: PhysicalConfig,
                domain: ShoeboxDomain) -> FieldSample:
    p, grad = total_field_batch(params, np.asarray(x, dtype=float)[None, :], config, domain)
    return FieldSample(p=p[0], grad=grad[0])


def normal_velocity(sample: FieldSample, n: np.ndarray, config: PhysicalConfig) -> complex:
    """v_n = i (grad p . n) / (rho c k), plain (unconjugated) dot product."""
    return 1j * np.dot(sample.grad, n) / (config.rho * config.c * config.k)


# ---------------------------------------------------------------------------
# Flat parameter vector and serialization.
#
# Layout of the flat real vector (documented contract, also used by the
# optimizer): theta (Q), then phi (Q, 3D only), then d (Q), then for each
# layer its weight matrix row-major with Re/Im interleaved per element,
# followed by its bias Re/Im interleaved.
# ---------------------------------------------------------------------------

def params_to_flat(params: HergNetParams) -> np.ndarray:
    parts = [params.angles.theta]
    if params.angles.phi is not None:
        parts.append(params.angles.phi)
    parts.append(params.d)
    for W, b in params.net.layers:
        parts.append(np.ascontiguousarray(W).ravel().view(np.float64))
        parts.append(np.ascontiguousarray(b).view(np.float64))
    return np.concatenate(parts)


def flat_to_params(flat: np.ndarray, D: int, n_quad: int) -> HergNetParams:
    if flat.shape[0] != param_count(D, n_quad):
        raise ValueError("flat vector length does not match (D, n_quad)")
    Q = n_quad
    off = 0
    theta = flat[off:off + Q].copy(); off += Q
    phi = None
    if D == 3:
        phi = flat[off:off + Q].copy(); off += Q
    d = flat[off:off + Q].copy(); off += Q
    sizes = [D, *HIDDEN, 1]
    layers = []
    for fan_out, fan_in in zip(sizes[1:], sizes[:-1]):
        nw = 2 * fan_out * fan_in
        W = flat[off:off + nw].copy().view(complex).reshape(fan_out, fan_in); off += nw
        nb = 2 * fan_out
        b = flat[off:off + nb].copy().view(complex); off += nb
        layers.append((W, b))
    return HergNetParams(angles=DirectionAngles(theta=theta, phi=phi), d=d,
                         net=CVNNParams(layers))


def save_params(path, params: HergNetParams) -> None:
    """Write the flat vector plus a small header (D, n_quad, layer sizes)."""
    sizes = [params.net.input_dim] + [W.shape[0] for W, _ in params.net.layers]
    np.savez(path, dim=params.ndim, n_quad=params.n_quad,
             layer_sizes=np.asarray(sizes), flat=params_to_flat(params))


def load_params(path) -> HergNetParams:
    with np.load(path) as f:
        D = int(f["dim"])
        n_quad = int(f["n_quad"])
        sizes = [int(v) for v in f["layer_sizes"]]
        expected = [D, *HIDDEN, 1]
        if sizes != expected:
            raise ValueError(f"unsupported layer sizes {sizes}, expected {expected}")
        return flat_to_params(f["flat"], D, n_quad)
