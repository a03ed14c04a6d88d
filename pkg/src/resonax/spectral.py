"""Operator assembly, Newtonian spectra, perturbed eigenvalues and shape
constants.

All operators are realized as dense matrices A with entry(i,j) =
kernel(x_i - y_j) * w_j; singular diagonals are replaced by the analytic
integral of the kernel over an equal-measure disk/ball cell (see
kernels.cell_integral).  Eigendecompositions of the Newtonian potential
use the weight-symmetrized form S = W^{1/2} A W^{-1/2}, which is real
symmetric; eigenvectors are returned in nodal coordinates with unit
discrete L^2 norm and the global phase fixed so the entry of largest
modulus is real positive.

Shape constants for a normalized nodal vector u:

    B = (int u)^2
    F = intint |x-y| u(y) conj(u(x))
    P = intint log|x-y| u(y) conj(u(x))
    G = intint u(y) conj(u(x)) / |x-y|
    S = intint u(y) conj(u(x)) / |x-y|^2

as discrete double sums with weights; inner products are sesquilinear,
<f, g> = int f conj(g).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import GeometryError, KernelError
from .geometry import build_mesh
from .kernels import (MODE_CONSISTENT, MODE_PAPER, KernelKind,
                      PUNCTURED_CELL_R2, cell_integral, equal_measure_radius,
                      gamma_hat, kernel_values, log_factor)


@dataclass(frozen=True)
class OperatorMatrix:
    entries: np.ndarray
    row_mesh: object
    col_mesh: object
    kind: KernelKind
    includes_weights: bool = True

    def __post_init__(self):
        self.entries.setflags(write=False)


def _distance_matrix(xa, xb):
    return np.linalg.norm(xa[:, None, :] - xb[None, :, :], axis=2)


def assemble(row_mesh, col_mesh, kind):
    """Assemble the dense operator matrix of `kind` on a mesh (pair).

    Same-mesh diagonals get the self-term cell integral.  Distinct meshes
    must be disjoint: any node pair closer than h/2 raises GeometryError.
    """
    if row_mesh.dimension != col_mesh.dimension:
        raise GeometryError("meshes must share dimension")
    if kind.dimension != row_mesh.dimension:
        raise KernelError("kernel/mesh dimension mismatch")
    same = row_mesh is col_mesh or (
        row_mesh.nodes.shape == col_mesh.nodes.shape
        and np.array_equal(row_mesh.nodes, col_mesh.nodes))
    r = _distance_matrix(row_mesh.nodes, col_mesh.nodes)
    if same:
        np.fill_diagonal(r, 1.0)   # placeholder, overwritten below
    elif np.min(r) < 0.5 * min(row_mesh.h, col_mesh.h):
        raise GeometryError("mesh pair overlaps; dimer shapes must be disjoint")
    entries = np.asarray(kernel_values(kind, r), dtype=complex) \
        * col_mesh.weights[None, :]
    if same:
        diag = np.array([cell_integral(kind, w, col_mesh.h)
                         for w in col_mesh.weights])
        entries[np.arange(len(diag)), np.arange(len(diag))] = diag
    return OperatorMatrix(entries, row_mesh, col_mesh, kind)


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue and nodal eigenvector, discrete-L2 normalized."""
    value: float
    vector: np.ndarray
    index: int

    def __post_init__(self):
        self.vector.setflags(write=False)


def _phase_fix(v):
    i = int(np.argmax(np.abs(v)))
    piv = v[i]
    if piv == 0:
        return v
    if np.iscomplexobj(v):
        return v * (abs(piv) / piv)
    return v if piv > 0 else -v


def eig_sym(matrix):
    """Full eigendecomposition of a weight-symmetrizable operator matrix.

    Valid for same-mesh real symmetric kernels (Newtonian K^(0), the
    rank-one K^(-1), ...); anything whose symmetrized form is not real
    symmetric to 1e-12 is rejected.
    """
    mesh = matrix.row_mesh
    if not (matrix.col_mesh is mesh
            or np.array_equal(matrix.col_mesh.nodes, mesh.nodes)):
        raise KernelError("eig_sym needs a same-mesh matrix")
    w = mesh.weights
    sq = np.sqrt(w)
    S = matrix.entries * (sq[:, None] / sq[None, :])
    scale = np.max(np.abs(S))
    if np.max(np.abs(S.imag)) > 1e-12 * scale:
        raise KernelError("matrix is not symmetrizable: complex kernel")
    S = S.real
    if np.max(np.abs(S - S.T)) > 1e-12 * scale:
        raise KernelError("matrix is not symmetrizable: asymmetric kernel")
    S = 0.5 * (S + S.T)
    vals, vecs = np.linalg.eigh(S)
    order = np.argsort(vals)[::-1]          # descending
    pairs = []
    for rank, j in enumerate(order):
        u = _phase_fix(vecs[:, j] / sq)     # nodal coords, sum |u|^2 w = 1
        pairs.append(EigenPair(float(vals[j]), u, rank))
    return pairs


def eig_general(matrix):
    """Eigendecomposition of a complex-symmetric (exact-kernel) matrix.

    Validation oracle only: symmetrizes with the weights, runs a general
    dense eigensolver, returns (values, nodal eigenvector columns) sorted
    by descending |value|.
    """
    w = matrix.row_mesh.weights
    sq = np.sqrt(w)
    S = matrix.entries * (sq[:, None] / sq[None, :])
    vals, vecs = np.linalg.eig(S)
    order = np.argsort(np.abs(vals))[::-1]
    return vals[order], vecs[:, order] / sq[:, None]


def inner(u, v, weights):
    """Discrete sesquilinear L^2 inner product <u, v> = sum u conj(v) w."""
    return complex(np.sum(u * np.conj(v) * weights))


def quadratic_form(matrix, u, v=None):
    """<A u, v> with the mesh inner product (v defaults to u)."""
    if v is None:
        v = u
    Au = matrix.entries @ u
    return inner(Au, v, matrix.row_mesh.weights)


@dataclass(frozen=True)
class ShapeConstants:
    B: complex
    F: complex
    P: complex
    G: complex
    S: complex


def shape_constants(mesh, u):
    """Shape constants B, F, P, G, S for a normalized nodal vector u.

    Singular diagonals (1/r, 1/r^2, log r and the benign r) use the same
    equal-measure-cell averages as assemble(); the 2D 1/r^2 diagonal uses
    the punctured-cell value.
    """
    x = mesh.nodes
    w = mesh.weights
    d = mesh.dimension
    r = _distance_matrix(x, x)
    np.fill_diagonal(r, 1.0)
    a = np.array([equal_measure_radius(d, wi) for wi in w])
    uw = u * w
    outer = np.outer(np.conj(u) * w, uw)    # conj(u_i) w_i u_j w_j

    def dsum(kern, diag_avg):
        k = kern(r)
        k[np.arange(len(x)), np.arange(len(x))] = diag_avg
        return complex(np.sum(outer * k))

    B = complex(np.sum(uw)) ** 2
    if d == 2:
        F = dsum(lambda r: r, 2.0 * a / 3.0)
        P = dsum(np.log, np.log(a) - 0.5)
        G = dsum(lambda r: 1.0 / r, 2.0 / a)
        S = dsum(lambda r: 1.0 / r ** 2, PUNCTURED_CELL_R2 / w)
    else:
        F = dsum(lambda r: r, 0.75 * a)
        P = dsum(np.log, np.log(a) - 1.0 / 3.0)
        G = dsum(lambda r: 1.0 / r, 1.5 / a)
        S = dsum(lambda r: 1.0 / r ** 2, 3.0 / a ** 2)
    return ShapeConstants(B, F, P, G, S)


def newtonian_eigenpairs(mesh, count=None):
    """Eigenpairs of the (consistent-sign) Newtonian potential K^(0).

    The consistent kernel (+1/(4 pi r) in 3D, -(1/2pi) log r in 2D) is the
    self-adjoint positive realization; descending order puts the monopole
    first.  Printed-convention formulas that need the opposite 3D sign
    should negate the eigenvalue (perturbed_eigenvalue_3d does this
    internally for paper mode).
    """
    op = assemble(mesh, mesh, KernelKind.series(mesh.dimension, 0,
                                                MODE_CONSISTENT))
    pairs = eig_sym(op)
    return pairs if count is None else pairs[:count]


def indicator_eigenpair(mesh):
    """Leading eigenpair of the rank-one 2D term K^(-1).

    Eigenvalue -|D|/2pi with the normalized indicator as eigenvector."""
    if mesh.dimension != 2:
        raise KernelError("K^(-1) exists only in 2D")
    op = assemble(mesh, mesh, KernelKind.series(2, -1, MODE_CONSISTENT))
    return eig_sym(op)[-1]   # most negative = the nonzero eigenvalue


def perturbed_eigenvalue_3d(pair, delta, k0, constants, order=1,
                            mode=MODE_PAPER):
    """Truncated expansion lambda_delta of the 3D perturbed eigenvalue.

    `pair` must come from newtonian_eigenpairs (consistent sign); paper
    mode flips it to the printed convention.  Order 1 adds the first-order
    B term, order 2 additionally the (delta k0)^2 <K^(2) u, u> term.
    """
    eps = delta * k0
    if mode == MODE_PAPER:
        lam = -pair.value - 0.25j / np.pi * eps * constants.B
        if order >= 2:
            lam = lam + eps ** 2 * constants.F / (8.0 * np.pi)
    else:
        lam = pair.value + 0.25j / np.pi * eps * constants.B
        if order >= 2:
            lam = lam - eps ** 2 * constants.F / (8.0 * np.pi)
    return complex(lam)


def perturbed_eigenvalue_2d(pair, delta, k0, constants, order=1,
                            mode=MODE_PAPER, mesh=None):
    """Truncated 2D expansion around the rank-one eigenvalue lambda_-1.

    paper mode: log(d k0 ghat) lam_-1 - P/2pi - i (d k0)^2 log(.) G/4pi,
    order 2 appending (d k0)^4 log(.) (i/4pi) S.  consistent mode replaces
    the printed 1/r and 1/r^2 kernels by the true Taylor terms (r^2/8pi
    plus its non-log companion, ...) and needs the mesh to assemble them.
    """
    eps = delta * k0
    lf = log_factor(eps, k0, mode)
    lam = lf * pair.value - constants.P / (2.0 * np.pi)
    if mode == MODE_PAPER:
        lam = lam - 0.25j / np.pi * eps ** 2 * lf * constants.G
        if order >= 2:
            lam = lam + eps ** 4 * lf * 0.25j / np.pi * constants.S
        return complex(lam)
    if mesh is None:
        raise KernelError("consistent 2D expansion needs the mesh")
    u = pair.vector
    for n in range(1, order + 1):
        base = quadratic_form(
            assemble(mesh, mesh, KernelKind.series(2, n, MODE_CONSISTENT)), u)
        comp = quadratic_form(
            assemble(mesh, mesh, KernelKind.series(2, n, MODE_CONSISTENT,
                                                   companion=True)), u)
        lam = lam + eps ** (2 * n) * (lf * base + comp)
    return complex(lam)


@dataclass(frozen=True)
class IndicatorExpansion2D:
    """Truncated indicator quadratic form nu(delta) = <M I, I>.

    nu0 = -|D|/2pi, nu1 = -(|D|/2pi) log(k0 ghat) + <K0 I, I>,
    nu2 = k0^2 <K1 I, I>.  The assembled value keeps the full logarithm
    log(delta k0 ghat) on the quadratic term, so it reproduces the direct
    quadratic form of the truncated operator exactly (the printed ansatz
    writes log(delta) there, an O(delta^2) difference).
    """
    nu0: float
    nu1: complex
    nu2: complex
    delta: float
    k0: complex
    mode: str
    value: complex


def indicator_expansion_2d(mesh, delta, k0, mode=MODE_PAPER):
    if mesh.dimension != 2:
        raise KernelError("indicator expansion is 2D only")
    vol = mesh.volume()
    ihat = np.full(len(mesh), 1.0 / np.sqrt(vol))
    q0 = quadratic_form(assemble(mesh, mesh, KernelKind.series(2, 0, mode)),
                        ihat)
    q1 = quadratic_form(assemble(mesh, mesh, KernelKind.series(2, 1, mode)),
                        ihat)
    nu0 = -vol / (2.0 * np.pi)
    gh = gamma_hat(k0, mode)
    nu1 = nu0 * np.log(k0 * gh) + q0
    nu2 = k0 ** 2 * q1
    lf = log_factor(delta * k0, k0, mode)
    value = nu0 * lf + q0 + (delta * k0) ** 2 * lf * q1
    if mode == MODE_CONSISTENT:
        q1c = quadratic_form(
            assemble(mesh, mesh,
                     KernelKind.series(2, 1, MODE_CONSISTENT, companion=True)),
            ihat)
        value = value + (delta * k0) ** 2 * q1c
    return IndicatorExpansion2D(float(nu0), complex(nu1), complex(nu2),
                                float(delta), complex(k0), mode,
                                complex(value))


def appendix_F(lambda_delta_order2, lambda0, B, delta, k0):
    """Closed form F = (8pi/(d k0)^2)(lam_d - lam0 + (i/4pi) d k0 B).

    Equals 8 pi <K^(2) u0, u0> when lambda_delta carries the order-2 term;
    vacuous (0) at order 1.
    """
    eps = delta * k0
    if eps == 0:
        raise KernelError("appendix F formula needs delta*k0 != 0")
    return (8.0 * np.pi / eps ** 2) * (lambda_delta_order2 - lambda0
                                       + 0.25j / np.pi * eps * B)


def appendix_S(lambda_delta, lambda_m1, P, G, delta, k0, gamma_hat_value):
    """Closed form for S from the order-extended 2D expansion.

    S = [-i/((d k0)^4 log(d k0 ghat))] (4pi(lam_d - log(.) lam_-1) + 2P
        + i (d k0)^2 log(.) G); consistent with <K^(2)u,u> = (i/4pi) S.
    """
    eps = delta * k0
    arg = eps * gamma_hat_value
    if arg == 0:
        raise KernelError("appendix S formula needs delta*k0 != 0")
    lf = np.log(arg)
    if lf == 0:
        raise KernelError("log(delta k0 ghat) = 0: resonant logarithm, "
                          "the closed form degenerates at this delta*k0")
    return (-1j / (eps ** 4 * lf)) * (4.0 * np.pi * (lambda_delta
                                                     - lf * lambda_m1)
                                      + 2.0 * P + 1j * eps ** 2 * lf * G)


def expansion_residual(mesh, delta, k0, mode, n_terms=None):
    """Relative Frobenius residual of the truncated series vs the exact
    kernel matrix at eps = delta*k0.

    3D sums n = 0..3 with coefficients eps^n; 2D uses terms {-1, 0, 1}
    with the shared log factor (consistent mode adds the non-log
    companion, which the Taylor expansion produces at the same order).
    This is the expansion-matching oracle that arbitrates the kernel
    conventions.
    """
    eps = delta * k0
    exact = assemble(mesh, mesh, KernelKind.exact(mesh.dimension, eps)).entries
    if mesh.dimension == 3:
        nmax = 3 if n_terms is None else n_terms - 1
        series = sum(
            eps ** n * assemble(mesh, mesh,
                                KernelKind.series(3, n, mode)).entries
            for n in range(nmax + 1))
    else:
        lf = log_factor(eps, k0, mode)
        series = (lf * assemble(mesh, mesh,
                                KernelKind.series(2, -1, mode)).entries
                  + assemble(mesh, mesh,
                             KernelKind.series(2, 0, mode)).entries
                  + eps ** 2 * lf * assemble(
                      mesh, mesh, KernelKind.series(2, 1, mode)).entries)
        if mode == MODE_CONSISTENT:
            series = series + eps ** 2 * assemble(
                mesh, mesh,
                KernelKind.series(2, 1, mode, companion=True)).entries
    num = np.linalg.norm(exact - series)
    return float(num / np.linalg.norm(exact))


# -- grid-convolution path for high-resolution leading eigenvalues ---------

def _fft_matvec_factory(mesh, kind):
    """Matvec v -> A v for a grid-structured mesh via FFT convolution.

    Exact same entries as assemble() (uniform weights h^d, analytic
    diagonal), but O(M log M); enables the 512-resolution self-oracle that
    a dense matrix cannot reach.
    """
    if mesh.lattice is None or mesh.grid_shape is None:
        raise GeometryError("FFT matvec needs a grid-structured mesh")
    h = mesh.h
    d = mesh.dimension
    wcell = h ** d
    if not np.allclose(mesh.weights, wcell):
        raise GeometryError("FFT matvec needs uniform weights")
    m = mesh.grid_shape
    offs = np.meshgrid(*[np.arange(-(mi - 1), mi) * h for mi in m],
                       indexing="ij")
    r = np.sqrt(sum(o ** 2 for o in offs))
    center = tuple(mi - 1 for mi in m)
    r[center] = 1.0
    table = np.asarray(kernel_values(kind, r)) * wcell
    if np.max(np.abs(np.imag(table))) > 0:
        raise KernelError("FFT path implemented for real kernels only")
    table = table.real.copy()
    table[center] = cell_integral(kind, wcell, h).real
    shape = [scipy.fft.next_fast_len(2 * mi - 1) for mi in m]
    tf = scipy.fft.rfftn(table, shape)
    idx = tuple(mesh.lattice.T)
    crop = tuple(slice(mi - 1, 2 * mi - 1) for mi in m)

    def matvec(v):
        vol = np.zeros(m)
        vol[idx] = v
        out = scipy.fft.irfftn(scipy.fft.rfftn(vol, shape) * tf, shape)
        return out[crop][idx]

    return matvec


def leading_newtonian_eigenvalue(mesh, tol=1e-10, max_iter=5000):
    """Leading eigenvalue of the weight-symmetrized Newtonian potential.

    Power iteration with the FFT matvec; with uniform weights the
    symmetrized matrix equals the weighted matrix, so this is the same
    leading eigenvalue eig_sym would report.  Deterministic (constant
    start vector).
    """
    kind = KernelKind.series(mesh.dimension, 0, MODE_CONSISTENT)
    matvec = _fft_matvec_factory(mesh, kind)
    v = np.full(len(mesh), 1.0 / np.sqrt(len(mesh)))
    lam = 0.0
    for _ in range(max_iter):
        av = matvec(v)
        lam = float(v @ av)
        res = np.linalg.norm(av - lam * v)
        nrm = np.linalg.norm(av)
        if nrm == 0:
            raise KernelError("power iteration collapsed to zero vector")
        v = av / nrm
        if res <= tol * abs(lam):
            return lam, v
    return lam, v


def leading_eigenvalue_at_resolution(domain, cells_per_axis, tol=1e-10):
    """Convenience wrapper: mesh the domain and run the FFT eigensolve."""
    mesh = build_mesh(domain, cells_per_axis)
    lam, _ = leading_newtonian_eigenvalue(mesh, tol=tol)
    return lam


# -- CSV export -------------------------------------------------------------

def mesh_hash(mesh):
    hsh = hashlib.sha256()
    hsh.update(mesh.nodes.tobytes())
    hsh.update(mesh.weights.tobytes())
    return hsh.hexdigest()[:16]


def _kind_label(kind):
    if kind.variant == "exact":
        return f"exact(k={kind.k!r})"
    tag = f"series(n={kind.n})"
    if kind.companion:
        tag += "+companion"
    return tag


def save_matrix_csv(matrix, path):
    """Write an operator matrix as CSV: one `i,j,re,im` line per entry."""
    with open(path, "w") as fh:
        fh.write("# resonax operator-matrix v1\n")
        fh.write(f"# kind={_kind_label(matrix.kind)} mode={matrix.kind.mode} "
                 f"dimension={matrix.kind.dimension}\n")
        fh.write(f"# row_mesh={mesh_hash(matrix.row_mesh)} "
                 f"col_mesh={mesh_hash(matrix.col_mesh)} "
                 f"includes_weights={int(matrix.includes_weights)}\n")
        if matrix.kind.dimension == 2 and matrix.kind.variant == "series" \
                and matrix.kind.n == 2 and matrix.kind.mode == MODE_PAPER:
            fh.write("# diagonal=punctured-cell(r>h/4) regularization\n")
        fh.write("i,j,re,im\n")
        ent = matrix.entries
        for i in range(ent.shape[0]):
            for j in range(ent.shape[1]):
                fh.write(f"{i},{j},{ent[i, j].real:.17g},"
                         f"{ent[i, j].imag:.17g}\n")


def save_eigenpairs_csv(pairs, mesh, path, kind_label="series(n=0)",
                        mode=MODE_CONSISTENT):
    with open(path, "w") as fh:
        fh.write("# resonax eigenpairs v1\n")
        fh.write(f"# kind={kind_label} mode={mode} mesh={mesh_hash(mesh)} "
                 f"nodes={len(mesh)} h={mesh.h:.17g}\n")
        fh.write("index,value\n")
        for p in pairs:
            fh.write(f"{p.index},{p.value:.17g}\n")
