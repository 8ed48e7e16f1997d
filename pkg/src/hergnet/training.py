"""Boundary loss, exact reverse-mode gradients, Adam and the training loop.

The loss is the MSE of the impedance boundary residual r = p - Z v_n over
points sampled uniformly on the walls; squared means squared complex
modulus, the only reading that yields a real non-negative loss.  Gradients
are derived by hand through the plane-wave sum and the complex network,
treating every complex parameter as a Re/Im pair (Wirtinger-equivalent),
and Adam runs coordinate-wise on the flat real vector.

Boundary points are sampled once before training and reused every epoch;
with N_train >= batch_threshold the fixed dataset is split into two halves
visited in order each epoch.
"""

import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import kernels
from .geometry import (BoundarySet, PhysicalConfig, ShoeboxDomain,
                       quad_count, sample_boundary, training_point_count)
from .model import (HergNetParams, cvnn_backward, cvnn_forward_cached,
                    flat_to_params, init_params, monopole_batch, normal_velocity,
                    param_count, params_to_flat, total_field)


@dataclass
class TrainConfig:
    epochs: int = 1000
    lr: float = 2e-3
    # cosine-anneal the step size down to lr * lr_decay; 1.0 keeps it fixed
    lr_decay: float = 1.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    ppw: float = 6.0
    n_min: int = 1000
    # low-frequency clamp for the direction count; defaults to n_min
    quad_min: Optional[int] = None
    # redraw the boundary dataset every this many epochs (0 = fixed
    # dataset); resampling averages out the Monte Carlo bias of any one
    # draw of the boundary integral
    resample_every: int = 0
    batch_threshold: int = 50_000
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0):
            raise ValueError("Adam betas must lie in [0, 1)")
        if not (0.0 < self.lr_decay <= 1.0):
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.resample_every < 0:
            raise ValueError("resample_every must be >= 0")

    def lr_at(self, epoch: int) -> float:
        if self.lr_decay == 1.0:
            return self.lr
        lo = self.lr * self.lr_decay
        frac = epoch / max(1, self.epochs - 1)
        return lo + 0.5 * (self.lr - lo) * (1.0 + np.cos(np.pi * frac))


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), t=0)


@dataclass
class TrainReport:
    loss_history: List[float]
    wall_time: float
    n_train: int
    n_quad: int
    n_param: int


class TrainingError(RuntimeError):
    """Raised when a non-finite loss is encountered; carries the epoch."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch


class _BoundaryData:
    """Precomputed per-dataset quantities reused every step."""

    def __init__(self, bset: BoundarySet, phys: PhysicalConfig, domain: ShoeboxDomain):
        self.x = np.ascontiguousarray(bset.x)
        self.face = np.ascontiguousarray(bset.face)
        self.normal_axis = np.ascontiguousarray(bset.normal_axis)
        self.normal_sign = np.ascontiguousarray(bset.normal_sign)
        faces = domain.faces()
        self.face_axis = np.array([a for (a, _, _) in faces])
        self.face_sign = np.array([1.0 if s else -1.0 for (_, s, _) in faces])
        self.zeta = phys.Z / (phys.rho * phys.c)  # normalized impedance, 1/beta
        if domain.source is not None:
            G, dG = monopole_batch(bset.x, np.asarray(domain.source), phys.k, domain.ndim)
            dGn = np.einsum("ij,ij->i", dG, bset.normal)
            self.rsrc = G - 1j * self.zeta * dGn / phys.k
        else:
            self.rsrc = np.zeros(len(bset), dtype=complex)

    def subset(self, idx) -> "_BoundaryDataView":
        return _BoundaryDataView(self, idx)


class _BoundaryDataView:
    def __init__(self, parent: _BoundaryData, idx):
        self.x = np.ascontiguousarray(parent.x[idx])
        self.face = np.ascontiguousarray(parent.face[idx])
        self.normal_axis = np.ascontiguousarray(parent.normal_axis[idx])
        self.normal_sign = np.ascontiguousarray(parent.normal_sign[idx])
        self.face_axis = parent.face_axis
        self.face_sign = parent.face_sign
        self.zeta = parent.zeta
        self.rsrc = parent.rsrc[idx]


# store the phase matrix between forward and backward only below this size
_STORE_E_LIMIT = 30_000_000


def _step(params: HergNetParams, data, k: float, want_grad: bool):
    """One loss (and optionally gradient) evaluation on a point set.

    The residual at point x on face f is
        r = (1/Q) sum_j E_xj (1 + zeta (s_j . n_x)) h(s_j) + rsrc_x
    so the (1 + zeta s.n) factor only takes one value per (face, direction)
    pair: it is tabulated as wtab (n_faces x Q).
    """
    S = params.angles.unit_vectors()
    Q = len(S)
    zeta = data.zeta
    h, cache = cvnn_forward_cached(params.net, S)
    wtab = 1.0 + zeta * data.face_sign[:, None] * S[:, data.face_axis].T
    hw = wtab * h[None, :]
    n = data.x.shape[0]
    store = want_grad and n * Q <= _STORE_E_LIMIT
    r, E = kernels.boundary_forward(data.x, S, params.d, k, data.face,
                                    hw, data.rsrc, store_E=store)
    loss = float(np.mean(np.abs(r) ** 2))
    if not want_grad:
        return loss, None

    wadj = 2.0 * np.conj(r) / n
    g, A, B = kernels.boundary_backward(data.x, S, params.d, k, data.face,
                                        wtab, data.normal_axis,
                                        data.normal_sign, wadj, E)
    # d_j enters the exponent as k d_j
    d_grad = np.real(1j * k * h * g)
    # direction vector gradient: exponent and impedance-factor terms plus
    # the chain through the density network input
    s_grad = np.real(h[:, None] * (1j * k * A + zeta * B))
    net_grads, ds = cvnn_backward(params.net, cache, np.conj(g))
    s_grad = s_grad + ds

    theta = params.angles.theta
    if params.ndim == 2:
        th_grad = -np.sin(theta) * s_grad[:, 0] + np.cos(theta) * s_grad[:, 1]
        angle_parts = [th_grad]
    else:
        phi = params.angles.phi
        ct, st = np.cos(theta), np.sin(theta)
        cp, sp = np.cos(phi), np.sin(phi)
        th_grad = s_grad[:, 0] * ct * cp + s_grad[:, 1] * ct * sp - s_grad[:, 2] * st
        ph_grad = -s_grad[:, 0] * st * sp + s_grad[:, 1] * st * cp
        angle_parts = [th_grad, ph_grad]

    parts = angle_parts + [d_grad]
    for dW, db in net_grads:
        parts.append(np.ascontiguousarray(dW).ravel().view(np.float64))
        parts.append(np.ascontiguousarray(db).view(np.float64))
    return loss, np.concatenate(parts)


def boundary_residual(params: HergNetParams, point, phys: PhysicalConfig,
                      domain: ShoeboxDomain) -> complex:
    """r = p(x) - Z v_n(x) at a single boundary point (source-corrected)."""
    sample = total_field(params, point.x, phys, domain)
    return sample.p - phys.Z * normal_velocity(sample, point.n, phys)


def loss(params: HergNetParams, batch: BoundarySet, phys: PhysicalConfig,
         domain: ShoeboxDomain) -> float:
    """Mean squared complex modulus of the boundary residual over a batch."""
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    data = _BoundaryData(batch, phys, domain)
    val, _ = _step(params, data, phys.k, want_grad=False)
    return val


def loss_gradient(params: HergNetParams, batch: BoundarySet,
                  phys: PhysicalConfig, domain: ShoeboxDomain) -> np.ndarray:
    """Exact gradient of the loss with respect to the flat real vector."""
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    data = _BoundaryData(batch, phys, domain)
    _, grad = _step(params, data, phys.k, want_grad=True)
    return grad


def adam_step(params_flat: np.ndarray, grad: np.ndarray, state: AdamState,
              config: TrainConfig, lr: Optional[float] = None
              ) -> Tuple[np.ndarray, AdamState]:
    """Standard bias-corrected Adam update on a flat real vector."""
    if params_flat.shape != grad.shape:
        raise ValueError("parameter and gradient dimensions disagree")
    if lr is None:
        lr = config.lr
    b1, b2 = config.adam_beta1, config.adam_beta2
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * grad
    v = b2 * state.v + (1.0 - b2) * grad * grad
    mhat = m / (1.0 - b1 ** t)
    vhat = v / (1.0 - b2 ** t)
    new = params_flat - lr * mhat / (np.sqrt(vhat) + config.adam_eps)
    return new, AdamState(m=m, v=v, t=t)


def train(config: TrainConfig, phys: PhysicalConfig, domain: ShoeboxDomain,
          rng: np.random.Generator) -> Tuple[HergNetParams, TrainReport]:
    """Full training run; deterministic for a given rng state.

    rng draw order: boundary dataset first, then parameter init.
    """
    t0 = time.perf_counter()
    D = domain.ndim
    n_train = training_point_count(domain, phys.f, phys.c, config.ppw, config.n_min)
    n_quad = quad_count(phys.f, config.quad_min or config.n_min)
    bset = sample_boundary(domain, n_train, rng)
    params = init_params(D, n_quad, rng)

    def make_batches(bs):
        d = _BoundaryData(bs, phys, domain)
        if n_train < config.batch_threshold:
            return [d]
        half = n_train // 2
        return [d.subset(np.arange(0, half)),
                d.subset(np.arange(half, n_train))]

    batches = make_batches(bset)
    flat = params_to_flat(params)
    state = AdamState.zeros(flat.shape[0])
    history = []
    for epoch in range(config.epochs):
        if config.resample_every and epoch > 0 \
                and epoch % config.resample_every == 0:
            batches = make_batches(sample_boundary(domain, n_train, rng))
        epoch_loss = 0.0
        lr = config.lr_at(epoch)
        for b in batches:
            params = flat_to_params(flat, D, n_quad)
            lval, grad = _step(params, b, phys.k, want_grad=True)
            if not np.isfinite(lval):
                raise TrainingError(epoch, lval)
            flat, state = adam_step(flat, grad, state, config, lr=lr)
            epoch_loss += lval
        history.append(epoch_loss / len(batches))
    params = flat_to_params(flat, D, n_quad)
    report = TrainReport(loss_history=history,
                         wall_time=time.perf_counter() - t0,
                         n_train=n_train, n_quad=n_quad,
                         n_param=param_count(D, n_quad))
    return params, report


@dataclass
class GradcheckReport:
    max_rel_error: float
    n_checked: int
    errors: np.ndarray = field(repr=False, default=None)


def gradcheck(phys: PhysicalConfig, domain: ShoeboxDomain,
              rng: np.random.Generator, n_quad: int = 8, n_points: int = 3,
              n_coords: int = 20, fd_step: float = 1e-6) -> GradcheckReport:
    """Compare the analytic gradient against central finite differences on a
    small random instance."""
    bset = sample_boundary(domain, n_points, rng)
    params = init_params(domain.ndim, n_quad, rng)
    data = _BoundaryData(bset, phys, domain)
    _, grad = _step(params, data, phys.k, want_grad=True)
    flat = params_to_flat(params)
    coords = rng.choice(flat.shape[0], size=min(n_coords, flat.shape[0]), replace=False)
    errs = np.empty(len(coords))
    scale = np.linalg.norm(grad)
    for idx, ci in enumerate(coords):
        h = fd_step * max(1.0, abs(flat[ci]))
        fp = flat.copy(); fp[ci] += h
        fm = flat.copy(); fm[ci] -= h
        lp, _ = _step(flat_to_params(fp, domain.ndim, n_quad), data, phys.k, False)
        lm, _ = _step(flat_to_params(fm, domain.ndim, n_quad), data, phys.k, False)
        fd = (lp - lm) / (2.0 * h)
        denom = max(abs(grad[ci]), abs(fd), 1e-10 * max(scale, 1.0))
        errs[idx] = abs(grad[ci] - fd) / denom
    return GradcheckReport(max_rel_error=float(errs.max()), n_checked=len(coords),
                           errors=errs)


def write_report(path, report: TrainReport) -> None:
    """Key-value text serialization of a training report."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n_train = {report.n_train}\n")
        fh.write(f"n_quad = {report.n_quad}\n")
        fh.write(f"n_param = {report.n_param}\n")
        fh.write(f"wall_time_s = {report.wall_time:.3f}\n")
        fh.write("loss_history = " + " ".join(f"{v:.9e}" for v in report.loss_history) + "\n")
