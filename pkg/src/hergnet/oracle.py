"""Analytic reference solution for impedance-walled shoebox rooms.

The Green's function separates per axis: each axis contributes eigenpairs
of X'' + ka^2 X = 0 with Robin ends X'(0) = ik beta X(0) and
X'(L) = -ik beta X(L).  Nontrivial solutions require

    F(ka) = ((ik beta)^2 - ka^2) sin(ka L) + 2 ik beta ka cos(ka L) = 0

with eigenfunction X(x) = cos(ka x) + (ik beta / ka) sin(ka x); the roots
are found by Newton iteration from the rigid-wall seeds n pi / L.  ka = 0
is always a root of F but never an eigenvalue (the would-be eigenfunction
violates the far boundary condition), so the n = 0 order is seeded at the
perturbative location sqrt(2 ik beta / L) instead.

The problem is complex symmetric, not self adjoint, so mode normalization
uses the unconjugated integral of X^2.  The series uses the g = -delta
source convention:  G = sum psi(x) psi(x0) / (Lambda (kn^2 - k^2)).

A second-order finite-difference solver (ghost-point Robin closure, sparse
direct solve) provides an independent cross-check.
"""

from dataclasses import dataclass
from itertools import product
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import PhysicalConfig, ShoeboxDomain

_ROOT_TOL = 1e-12
_MAX_NEWTON = 50


class NewtonError(RuntimeError):
    pass


class NearSingularMode(RuntimeError):
    pass


def characteristic(ka, L: float, k: float, beta: complex):
    """Characteristic function F and its derivative dF/dka."""
    ikb = 1j * k * beta
    sin = np.sin(ka * L)
    cos = np.cos(ka * L)
    F = (ikb * ikb - ka * ka) * sin + 2.0 * ikb * ka * cos
    dF = (-2.0 * ka) * sin + (ikb * ikb - ka * ka) * L * cos \
        + 2.0 * ikb * cos - 2.0 * ikb * ka * L * sin
    return F, dF


def axis_eigenfunction(ka: complex, k: float, beta: complex, x):
    """X(x) = cos(ka x) + (ik beta / ka) sin(ka x)."""
    gamma = 1j * k * beta / ka
    return np.cos(ka * x) + gamma * np.sin(ka * x)


def _axis_norm(ka, L, k, beta):
    """Unconjugated norm integral of X^2 over [0, L], closed form."""
    g = 1j * k * beta / ka
    s2 = np.sin(2.0 * ka * L)
    c2 = np.cos(2.0 * ka * L)
    return (1.0 + g * g) * L / 2.0 + (1.0 - g * g) * s2 / (4.0 * ka) \
        + g * (1.0 - c2) / (2.0 * ka)


@dataclass
class AxisModes:
    L: float
    roots: np.ndarray   # complex axial wavenumbers, ascending real part
    norms: np.ndarray   # unconjugated norm integrals


def _newton_root(seed, L, k, beta, order):
    ka = seed
    for _ in range(_MAX_NEWTON):
        F, dF = characteristic(ka, L, k, beta)
        if abs(F) < _ROOT_TOL * max(1.0, abs(ka) ** 2):
            return ka
        step = F / dF
        ka_new = ka - step
        if abs(ka_new - seed) > np.pi / L:
            # left the basin; restart with damped steps
            ka = seed
            for _ in range(10):
                F, dF = characteristic(ka, L, k, beta)
                ka = ka - 0.5 * F / dF
        else:
            ka = ka_new
    F, _ = characteristic(ka, L, k, beta)
    if abs(F) < _ROOT_TOL * max(1.0, abs(ka) ** 2):
        return ka
    raise NewtonError(f"no convergence for axial order {order} "
                      f"(last iterate {ka!r}, |F| = {abs(F):.3e})")


def newton_modes(L: float, k: float, beta: complex, f: float, c: float,
                 fmax: Optional[float] = None) -> AxisModes:
    """Axial modes whose rigid-wall frequency n c / (2 L) is <= fmax
    (default twice the problem frequency)."""
    if fmax is None:
        fmax = 2.0 * f
    n_max = int(np.floor(2.0 * fmax * L / c))
    if beta == 0:
        # rigid walls: the spectrum is exact, skip the iteration
        roots = np.arange(n_max + 1) * np.pi / L + 0j
        norms = np.full(n_max + 1, L / 2.0, dtype=complex)
        norms[0] = L
        return AxisModes(L=L, roots=roots, norms=norms)
    roots = np.empty(n_max + 1, dtype=complex)
    for n in range(n_max + 1):
        seed = n * np.pi / L if n > 0 else np.sqrt(2j * k * beta / L)
        roots[n] = _newton_root(seed, L, k, beta, n)
    order = np.argsort(roots.real)
    roots = roots[order]
    scale = np.maximum(np.abs(roots[1:]), np.abs(roots[:-1]))
    if np.any(np.abs(np.diff(roots)) < 1e-8 * np.maximum(scale, 1.0)):
        raise NewtonError("two axial seeds converged to the same root")
    return AxisModes(L=L, roots=roots, norms=_axis_norm(roots, L, k, beta))


@dataclass
class ModeTable:
    axes: List[AxisModes]
    k: float
    fmax: float
    beta: complex
    c: float

    def mode_indices(self) -> np.ndarray:
        """(n_modes, D) integer orders whose rigid frequency is <= fmax."""
        D = len(self.axes)
        grids = np.meshgrid(*[np.arange(len(a.roots)) for a in self.axes],
                            indexing="ij")
        fr = np.zeros(grids[0].shape)
        for a in range(D):
            fr = fr + (grids[a] / (2.0 * self.axes[a].L)) ** 2
        fr = np.sqrt(fr) * self.c
        return np.argwhere(fr <= self.fmax)

    def n_modes(self) -> int:
        return self.mode_indices().shape[0]


def build_mode_table(phys: PhysicalConfig, domain: ShoeboxDomain,
                     freq_factor: float = 2.0) -> ModeTable:
    """Per-axis Newton modes up to freq_factor times the problem frequency
    (the reference setup uses factor 2; larger factors reduce series
    truncation error at low frequency)."""
    fmax = freq_factor * phys.f
    axes = [newton_modes(L, phys.k, phys.beta, phys.f, phys.c, fmax=fmax)
            for L in domain.dims]
    return ModeTable(axes=axes, k=phys.k, fmax=fmax, beta=phys.beta, c=phys.c)


_MODE_CHUNK = 4000


def _modal_series(table: ModeTable, pts: np.ndarray, x0: np.ndarray) -> np.ndarray:
    D = len(table.axes)
    k, beta = table.k, table.beta
    idx = table.mode_indices()
    if idx.shape[0] == 0:
        return np.zeros(pts.shape[0], dtype=complex)
    tabs = []
    tab0 = []
    for a in range(D):
        roots = table.axes[a].roots
        tabs.append(axis_eigenfunction(roots[:, None], k, beta, pts[:, a][None, :]))
        tab0.append(axis_eigenfunction(roots, k, beta, x0[a]))
    kn2 = sum(table.axes[a].roots[idx[:, a]] ** 2 for a in range(D))
    lam = np.prod([table.axes[a].norms[idx[:, a]] for a in range(D)], axis=0)
    denom = kn2 - k * k
    bad = np.abs(denom) < 1e-12 * max(k * k, 1.0)
    if np.any(bad):
        which = idx[np.argmax(bad)]
        raise NearSingularMode(f"mode {tuple(which)} resonates with k = {k:.6g}")
    amp = np.prod([tab0[a][idx[:, a]] for a in range(D)], axis=0) / (lam * denom)
    G = np.zeros(pts.shape[0], dtype=complex)
    for lo in range(0, idx.shape[0], _MODE_CHUNK):
        hi = min(idx.shape[0], lo + _MODE_CHUNK)
        psi = tabs[0][idx[lo:hi, 0]]
        for a in range(1, D):
            psi = psi * tabs[a][idx[lo:hi, a]]
        G += amp[lo:hi] @ psi
    return G


def modal_green_batch(pts: np.ndarray, x0, phys: PhysicalConfig,
                      domain: ShoeboxDomain, table: Optional[ModeTable] = None,
                      freq_factor: float = 2.0) -> np.ndarray:
    """Modal series Green's function at points pts for a source at x0."""
    if table is None:
        table = build_mode_table(phys, domain, freq_factor=freq_factor)
    pts = np.asarray(pts, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    return _modal_series(table, pts, x0)


def modal_green(x, x0, phys: PhysicalConfig, domain: ShoeboxDomain,
                table: Optional[ModeTable] = None,
                freq_factor: float = 2.0) -> complex:
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if np.allclose(x, x0):
        raise ValueError("modal Green's function is singular at the source")
    return modal_green_batch(x[None, :], x0, phys, domain, table, freq_factor)[0]


# ---------------------------------------------------------------------------
# Independent finite-difference reference
# ---------------------------------------------------------------------------

def _axis_operator(L: float, n: int, k: float, beta: complex):
    """1D second-difference matrix with ghost-point Robin closure."""
    h = L / n
    m = n + 1
    main = np.full(m, -2.0, dtype=complex)
    off = np.ones(m - 1, dtype=complex)
    A = sp.diags([off, main, off], [-1, 0, 1], format="lil", dtype=complex)
    A[0, 1] = 2.0
    A[m - 1, m - 2] = 2.0
    A[0, 0] = -2.0 - 2j * k * beta * h
    A[m - 1, m - 1] = -2.0 - 2j * k * beta * h
    return A.tocsr() / (h * h), h


def fd_reference(phys: PhysicalConfig, domain: ShoeboxDomain,
                 grid_n: Union[int, Sequence[int]],
                 boundary_data: Optional[Callable] = None):
    """Second-order FD solve of the Helmholtz problem with impedance walls.

    grid_n: intervals per axis (int, or one per axis).  The point source,
    when present, is a discrete delta 1/cell-volume at the nearest node.
    boundary_data, if given, is a callable q(points, axis, side) adding
    inhomogeneous Robin data dp/dn = -ik beta p + q on the given face
    (used for manufactured solutions); the face is passed explicitly
    because corner nodes belong to several faces at once.

    Returns (axes, p) with axes the node coordinate arrays and p the
    complex solution grid of shape (n0+1, ..., nD+1).
    """
    D = domain.ndim
    if np.isscalar(grid_n):
        grid_n = [int(grid_n)] * D
    ops = []
    hs = []
    for a in range(D):
        A, h = _axis_operator(domain.dims[a], grid_n[a], phys.k, phys.beta)
        ops.append(A)
        hs.append(h)
    eyes = [sp.identity(n + 1, dtype=complex, format="csr") for n in grid_n]
    A = None
    for a in range(D):
        term = None
        for b in range(D):
            factor = ops[b] if b == a else eyes[b]
            term = factor if term is None else sp.kron(term, factor, format="csr")
        A = term if A is None else A + term
    A = A + phys.k ** 2 * sp.identity(A.shape[0], dtype=complex)

    shape = tuple(n + 1 for n in grid_n)
    b = np.zeros(shape, dtype=complex)
    if domain.source is not None:
        nearest = tuple(int(round(domain.source[a] / hs[a])) for a in range(D))
        b[nearest] = -1.0 / np.prod(hs)
    if boundary_data is not None:
        axes = [np.linspace(0.0, domain.dims[a], grid_n[a] + 1) for a in range(D)]
        for a in range(D):
            for side in (0, 1):
                sel = [slice(None)] * D
                sel[a] = -1 if side else 0
                mesh = np.meshgrid(*[axes[c] for c in range(D) if c != a], indexing="ij")
                pts = np.zeros(mesh[0].shape + (D,))
                oi = 0
                for c in range(D):
                    if c == a:
                        pts[..., c] = domain.dims[a] * side
                    else:
                        pts[..., c] = mesh[oi]
                        oi += 1
                q = boundary_data(pts.reshape(-1, D), a, side).reshape(mesh[0].shape)
                b[tuple(sel)] -= 2.0 * q / hs[a]

    p = spla.spsolve(A.tocsc(), b.ravel())
    if not np.all(np.isfinite(p)):
        raise RuntimeError("singular FD system: k matches a discrete eigenvalue")
    axes = [np.linspace(0.0, domain.dims[a], grid_n[a] + 1) for a in range(D)]
    return axes, p.reshape(shape)


def export_mode_table(path, table: ModeTable) -> None:
    """Structured-text dump: per-axis roots and norms, real/imag columns."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# k = {table.k:.12g}, fmax = {table.fmax:.12g}\n")
        fh.write(f"# beta = {table.beta.real:.12g} {table.beta.imag:+.12g}i\n")
        for a, ax in enumerate(table.axes):
            fh.write(f"# axis {a}: L = {ax.L:.12g}, {len(ax.roots)} orders\n")
            fh.write("# order root_re root_im norm_re norm_im\n")
            for n, (r, lam) in enumerate(zip(ax.roots, ax.norms)):
                fh.write(f"{a} {n} {r.real:.15e} {r.imag:.15e} "
                         f"{lam.real:.15e} {lam.imag:.15e}\n")
