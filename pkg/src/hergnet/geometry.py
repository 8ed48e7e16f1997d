"""Domains, physical constants, boundary/direction sampling and size rules.

All frequency-dependent discretization rules live here: the points-per-
wavelength rule for boundary training points and the f^2/2000 rule for the
number of plane-wave directions, both clamped from below at low frequency.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class PhysicalConfig:
    """Medium and frequency constants shared by model, loss and oracle.

    k and beta are derived: k = 2 pi f / c, beta = rho c / Z.
    """
    c: float
    rho: float
    f: float
    Z: complex
    k: float = field(init=False)
    beta: complex = field(init=False)

    def __post_init__(self):
        if self.f <= 0 or self.c <= 0 or self.rho <= 0:
            raise ValueError("f, c and rho must be positive")
        if self.Z == 0:
            raise ValueError("surface impedance must be nonzero")
        object.__setattr__(self, "k", 2.0 * np.pi * self.f / self.c)
        object.__setattr__(self, "beta", self.rho * self.c / self.Z)

    def with_frequency(self, f: float) -> "PhysicalConfig":
        return PhysicalConfig(self.c, self.rho, f, self.Z)


def make_config(c: float, rho: float, f: float, Z: complex) -> PhysicalConfig:
    return PhysicalConfig(c=c, rho=rho, f=f, Z=complex(Z))


def absorption_coefficient(Z: complex, rho: float, c: float) -> float:
    """Normal-incidence absorption 1 - |R|^2 with R = (Z - rho c)/(Z + rho c)."""
    zc = rho * c
    if Z == -zc:
        raise ZeroDivisionError("Z = -rho*c gives an infinite reflection coefficient")
    refl = (Z - zc) / (Z + zc)
    return 1.0 - abs(refl) ** 2


@dataclass(frozen=True)
class ShoeboxDomain:
    """Axis-aligned box [0, L1] x ... with an optional interior point source."""
    dims: tuple
    source: Optional[tuple] = None

    def __post_init__(self):
        dims = tuple(float(v) for v in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) not in (2, 3):
            raise ValueError("shoebox dimension must be 2 or 3")
        if any(L <= 0 for L in dims):
            raise ValueError("axial lengths must be positive")
        if self.source is not None:
            src = tuple(float(v) for v in self.source)
            if len(src) != len(dims):
                raise ValueError("source dimension does not match the box")
            if any(not (0.0 < s < L) for s, L in zip(src, dims)):
                raise ValueError("source must be strictly inside the box")
            object.__setattr__(self, "source", src)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def boundary_measure(self) -> float:
        """Perimeter in 2D, surface area in 3D."""
        d = self.dims
        if len(d) == 2:
            return 2.0 * (d[0] + d[1])
        return 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2])

    def faces(self):
        """All (axis, side) pairs with the face measure; side 0 is the
        face at coordinate 0, side 1 the face at dims[axis]."""
        out = []
        for axis in range(self.ndim):
            other = [self.dims[a] for a in range(self.ndim) if a != axis]
            measure = float(np.prod(other))
            for side in (0, 1):
                out.append((axis, side, measure))
        return out

    def interior_grid(self, n_per_axis: int) -> np.ndarray:
        """Regular interior grid, n_per_axis points per axis, boundary excluded."""
        axes = [np.linspace(0.0, L, n_per_axis + 2)[1:-1] for L in self.dims]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class BoundaryPoint:
    x: np.ndarray
    n: np.ndarray


class BoundarySet:
    """Boundary samples in struct-of-arrays form.

    x: (n, D) positions; normal: (n, D) outward unit normals; face: (n,)
    index into domain.faces(); normal_axis/normal_sign give the single
    nonzero normal component (normals of a box face are axis aligned).
    """

    def __init__(self, x, normal, face, normal_axis, normal_sign):
        self.x = x
        self.normal = normal
        self.face = face
        self.normal_axis = normal_axis
        self.normal_sign = normal_sign

    def __len__(self):
        return self.x.shape[0]

    def __getitem__(self, i) -> BoundaryPoint:
        return BoundaryPoint(self.x[i], self.normal[i])

    def subset(self, idx) -> "BoundarySet":
        return BoundarySet(self.x[idx], self.normal[idx], self.face[idx],
                           self.normal_axis[idx], self.normal_sign[idx])


def training_point_count(domain: ShoeboxDomain, f: float, c: float,
                         ppw: float = 6.0, n_min: int = 1000) -> int:
    """Boundary sample count from the points-per-wavelength rule.

    3D: floor(area * (ppw f / c)^2); 2D the boundary is a curve, so the
    count scales linearly: floor(perimeter * ppw f / c).
    """
    if ppw < 1:
        raise ValueError("ppw must be >= 1")
    S = domain.boundary_measure()
    density = ppw * f / c
    if domain.ndim == 3:
        n = int(np.floor(S * density * density))
    else:
        n = int(np.floor(S * density))
    return max(int(n_min), n)


def quad_count(f: float, n_min: int = 1000) -> int:
    """Number of plane-wave directions: round(f^2/2000), clamped at n_min."""
    if f <= 0:
        raise ValueError("frequency must be positive")
    return max(int(n_min), int(np.floor(f * f / 2000.0 + 0.5)))


def sample_boundary(domain: ShoeboxDomain, n: int, rng: np.random.Generator) -> BoundarySet:
    """n i.i.d. uniform samples on the box boundary.

    A face is drawn with probability proportional to its measure, then the
    point is uniform on that face; the normal is the face's outward normal.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    D = domain.ndim
    faces = domain.faces()
    measures = np.array([m for (_, _, m) in faces])
    fidx = rng.choice(len(faces), size=n, p=measures / measures.sum())
    x = rng.random((n, D)) * np.asarray(domain.dims)
    normal = np.zeros((n, D))
    normal_axis = np.empty(n, dtype=np.int64)
    normal_sign = np.empty(n)
    for fi, (axis, side, _) in enumerate(faces):
        sel = fidx == fi
        x[sel, axis] = domain.dims[axis] * side
        normal[sel, axis] = 1.0 if side else -1.0
        normal_axis[sel] = axis
        normal_sign[sel] = 1.0 if side else -1.0
    return BoundarySet(x, normal, fidx, normal_axis, normal_sign)


@dataclass
class DirectionAngles:
    """Unit directions in angle parametrization (unit norm is structural).

    2D: s_j = [cos theta_j, sin theta_j].
    3D: s_j = [sin theta cos phi, sin theta sin phi, cos theta].
    """
    theta: np.ndarray
    phi: Optional[np.ndarray] = None

    @property
    def ndim(self) -> int:
        return 2 if self.phi is None else 3

    def __len__(self):
        return self.theta.shape[0]

    def unit_vectors(self) -> np.ndarray:
        if self.phi is None:
            return np.stack([np.cos(self.theta), np.sin(self.theta)], axis=1)
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi),
                         np.cos(self.theta)], axis=1)


def sample_directions(D: int, n_quad: int, rng: np.random.Generator) -> DirectionAngles:
    """Uniform directions: theta ~ U(0, 2pi) in 2D; in 3D phi ~ U(0, 2pi)
    and cos(theta) ~ U(-1, 1) (uniform measure on the sphere)."""
    if D == 2:
        return DirectionAngles(theta=rng.uniform(0.0, 2.0 * np.pi, n_quad))
    if D == 3:
        phi = rng.uniform(0.0, 2.0 * np.pi, n_quad)
        theta = np.arccos(rng.uniform(-1.0, 1.0, n_quad))
        return DirectionAngles(theta=theta, phi=phi)
    raise ValueError("D must be 2 or 3")
