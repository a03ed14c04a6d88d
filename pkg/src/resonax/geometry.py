"""Particle domains and midpoint quadrature meshes.

A particle occupies Omega = delta*D + z for a reference shape D, a size
factor 0 < delta << 1 and a position z.  All integral operators downstream
are discretized on a regular grid of square/cubic cells covering D: the
quadrature nodes are the centers of the cells whose center lies strictly
inside the shape, each carrying the full cell measure h^d (midpoint rule,
no cut cells).  Node ordering is lexicographic in the integer grid index,
so meshes -- and everything assembled on them -- are bit-reproducible.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

_SHAPES_2D = ("disk", "ellipse", "rectangle", "raster")
_SHAPES_3D = ("ball", "ellipsoid", "box", "raster")


@dataclass(frozen=True)
class DomainSpec:
    """Reference shape D together with its placement delta*D + z.

    Parameters
    ----------
    dimension : int
        2 or 3.
    shape : str
        One of disk/ellipse/rectangle/raster (2D) or ball/ellipsoid/box/
        raster (3D).  "radii" holds the radius, semi-axes or half-widths.
    radii : tuple of float
        Size parameters of the reference shape (ignored for raster).
    center : tuple of float
        Position z.
    scale : float
        Size factor delta > 0.
    raster_bits : tuple, optional
        Row-major nested tuples of 0/1 for raster shapes.
    raster_cell : float, optional
        Edge length of one raster cell.
    """

    dimension: int
    shape: str
    radii: tuple = ()
    center: tuple = None
    scale: float = 1.0
    raster_bits: tuple = None
    raster_cell: float = 0.0

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise GeometryError(f"dimension must be 2 or 3, got {self.dimension}")
        allowed = _SHAPES_2D if self.dimension == 2 else _SHAPES_3D
        if self.shape not in allowed:
            raise GeometryError(
                f"shape {self.shape!r} not valid in {self.dimension}D "
                f"(allowed: {allowed})")
        if self.center is None:
            object.__setattr__(self, "center", (0.0,) * self.dimension)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != self.dimension:
            raise GeometryError("center has wrong number of coordinates")
        if not self.scale > 0:
            raise GeometryError("scale delta must be positive")
        if self.shape == "raster":
            if self.raster_bits is None:
                raise GeometryError("raster shape needs raster_bits")
            bits = np.asarray(self.raster_bits)
            if bits.ndim != self.dimension:
                raise GeometryError("raster_bits rank must equal dimension")
            if not np.any(bits):
                raise GeometryError("raster shape has no filled cell")
            if not self.raster_cell > 0:
                raise GeometryError("raster_cell must be positive")
        else:
            object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
            if len(self.radii) not in (1, self.dimension):
                raise GeometryError("radii must have 1 or dimension entries")
            if any(r <= 0 for r in self.radii):
                raise GeometryError("radii must be strictly positive")

    # -- helpers -----------------------------------------------------------

    def semi_axes(self):
        """Per-axis extent of the reference shape's bounding box."""
        if self.shape == "raster":
            bits = np.asarray(self.raster_bits)
            return tuple(0.5 * n * self.raster_cell for n in bits.shape)
        if len(self.radii) == 1:
            return (self.radii[0],) * self.dimension
        return self.radii

    def contains(self, points):
        """Strict interior test for points in reference (unit-scale) frame."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.shape in ("disk", "ball", "ellipse", "ellipsoid"):
            ax = np.asarray(self.semi_axes())
            return np.sum((pts / ax) ** 2, axis=1) < 1.0
        if self.shape in ("rectangle", "box"):
            ax = np.asarray(self.semi_axes())
            return np.all(np.abs(pts) < ax, axis=1)
        raise GeometryError("contains() is not defined for raster shapes")

    def diameter(self):
        ax = self.semi_axes()
        if self.shape in ("disk", "ball", "ellipse", "ellipsoid"):
            return 2.0 * max(ax)
        return 2.0 * float(np.hypot.reduce(np.asarray(ax)))


def disk(radius=1.0, center=(0.0, 0.0), scale=1.0):
    return DomainSpec(2, "disk", (radius,), center, scale)


def ball(radius=1.0, center=(0.0, 0.0, 0.0), scale=1.0):
    return DomainSpec(3, "ball", (radius,), center, scale)


def ellipse(a, b, center=(0.0, 0.0), scale=1.0):
    return DomainSpec(2, "ellipse", (a, b), center, scale)


def ellipsoid(a, b, c, center=(0.0, 0.0, 0.0), scale=1.0):
    return DomainSpec(3, "ellipsoid", (a, b, c), center, scale)


def rectangle(a, b, center=(0.0, 0.0), scale=1.0):
    """Rectangle with half-widths a, b."""
    return DomainSpec(2, "rectangle", (a, b), center, scale)


def box(a, b, c, center=(0.0, 0.0, 0.0), scale=1.0):
    return DomainSpec(3, "box", (a, b, c), center, scale)


def raster(bits, cell_size, center=(0.0, 0.0), scale=1.0):
    bits = np.asarray(bits)
    return DomainSpec(bits.ndim, "raster",
                      center=center, scale=scale,
                      raster_bits=tuple(map(tuple, bits.tolist())) if bits.ndim == 2
                      else tuple(tuple(map(tuple, p)) for p in bits.tolist()),
                      raster_cell=float(cell_size))


def load_raster(path, center=(0.0, 0.0), scale=1.0):
    """Read a raster domain from a text file.

    First line: "rows cols cell_size"; then `rows` lines of 0/1 characters.
    """
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise GeometryError(f"bad raster header in {path}")
        rows, cols, cell = int(header[0]), int(header[1]), float(header[2])
        bits = []
        for _ in range(rows):
            line = fh.readline().strip()
            if len(line) != cols or set(line) - {"0", "1"}:
                raise GeometryError(f"bad raster row in {path}: {line!r}")
            bits.append([int(c) for c in line])
    return raster(np.asarray(bits), cell, center=center, scale=scale)


@dataclass(frozen=True)
class QuadratureMesh:
    """Midpoint-rule quadrature mesh.

    nodes : (N, d) array of cell centers, weights : (N,) cell measures,
    h : cell edge length.  lattice/grid_shape/origin record the integer
    grid the nodes came from (node = origin + lattice*h), which grid-based
    algorithms (FFT convolution) rely on.
    """

    dimension: int
    nodes: np.ndarray
    weights: np.ndarray
    h: float
    domain: DomainSpec = None
    lattice: np.ndarray = None
    grid_shape: tuple = None
    origin: np.ndarray = None

    def __post_init__(self):
        if self.nodes.ndim != 2 or self.nodes.shape[1] != self.dimension:
            raise GeometryError("nodes must be (N, dimension)")
        if len(self.nodes) == 0:
            raise GeometryError("mesh has no nodes")
        if np.any(self.weights <= 0):
            raise GeometryError("weights must be positive")
        for arr in (self.nodes, self.weights, self.lattice, self.origin):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self):
        return len(self.nodes)

    def volume(self):
        return float(np.sum(self.weights))

    def centroid(self):
        return self.weights @ self.nodes / self.volume()


def build_mesh(domain, cells_per_axis):
    """Mesh a domain with `cells_per_axis` cells across its largest extent.

    Cells whose center lies strictly inside the (scaled, centered) shape
    become nodes with weight h^d.  Raster domains are meshed at their
    native bit-grid resolution and cells_per_axis is ignored.
    """
    if domain.shape == "raster":
        return _build_raster_mesh(domain)
    if cells_per_axis < 2:
        raise GeometryError("cells_per_axis must be >= 2")
    ax = np.asarray(domain.semi_axes())
    d = domain.dimension
    h = 2.0 * float(np.max(ax)) / cells_per_axis
    m = np.ceil(2.0 * ax / h - 1e-12).astype(int)
    # cell centers of an m_i-cell grid symmetric about the origin
    axes = [(np.arange(mi) - 0.5 * (mi - 1)) * h for mi in m]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    inside = domain.contains(pts)
    if not np.any(inside):
        raise GeometryError("shape smaller than one cell: empty mesh")
    lattice = np.stack([g.ravel() for g in np.meshgrid(
        *[np.arange(mi) for mi in m], indexing="ij")], axis=1)[inside]
    nodes = pts[inside] * domain.scale + np.asarray(domain.center)
    hs = h * domain.scale
    origin = (np.asarray(domain.center)
              - 0.5 * (m - 1) * hs)
    return QuadratureMesh(
        dimension=d,
        nodes=nodes,
        weights=np.full(len(nodes), hs ** d),
        h=hs,
        domain=domain,
        lattice=lattice,
        grid_shape=tuple(int(mi) for mi in m),
        origin=origin,
    )


def _build_raster_mesh(domain):
    bits = np.asarray(domain.raster_bits)
    h = domain.raster_cell
    m = np.asarray(bits.shape)
    filled = np.argwhere(bits != 0)
    pts = (filled - 0.5 * (m - 1)) * h
    nodes = pts * domain.scale + np.asarray(domain.center)
    hs = h * domain.scale
    return QuadratureMesh(
        dimension=domain.dimension,
        nodes=nodes.astype(float),
        weights=np.full(len(nodes), hs ** domain.dimension),
        h=hs,
        domain=domain,
        lattice=filled,
        grid_shape=tuple(int(mi) for mi in m),
        origin=np.asarray(domain.center) - 0.5 * (m - 1) * hs,
    )


def scale_translate(mesh, delta, z):
    """Map a mesh for D onto Omega = delta*D + z.

    Nodes x -> delta*x + z, weights w -> delta^d * w, h -> delta*h.
    """
    if not delta > 0:
        raise GeometryError("delta must be positive")
    z = np.asarray(z, dtype=float)
    if z.shape != (mesh.dimension,):
        raise GeometryError("translation has wrong dimension")
    dom = mesh.domain
    if dom is not None:
        dom = dataclasses.replace(
            dom, scale=dom.scale * delta,
            center=tuple(delta * np.asarray(dom.center) + z))
    return QuadratureMesh(
        dimension=mesh.dimension,
        nodes=mesh.nodes * delta + z,
        weights=mesh.weights * delta ** mesh.dimension,
        h=mesh.h * delta,
        domain=dom,
        lattice=mesh.lattice,
        grid_shape=mesh.grid_shape,
        origin=(mesh.origin * delta + z) if mesh.origin is not None else None,
    )
