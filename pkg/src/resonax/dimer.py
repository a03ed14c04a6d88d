"""Hybridized resonances of a dimer of two identical resonators.

Two identical particles delta*D + z1 and delta*D + z2 couple through the
off-diagonal propagation operators R_{D1 D2}, R_{D2 D1}.  A pole-pencil
reduction of the 2x2 block system collapses the coupled resonance problem
to the pair of scalar conditions

    1 - delta^2 w^2 xi(w, k) (Lambda +/- C) = 0,

where Lambda is the single-particle spectral quantity (the perturbed
eigenvalue lambda_delta in 3D, the indicator form nu_hat in 2D) and C the
coupling (sqrt(KM) in 3D, eta_hat in 2D).  The symmetric combination picks
up the + sign: it sees the larger effective eigenvalue, so its root -- the
monopole omega_m -- shifts below the single-particle resonance, while the
antisymmetric (dipole) root omega_d shifts above it.

Everything is computed in the rescaled frame x -> x/delta, where the
particles are unit-size copies of D at centers z_i/delta; the physical size
enters only through eps = delta*k0 in the kernels and the delta^2 prefactor
of the resonance condition.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, KernelError, NoPhysicalRootError
from .geometry import build_mesh, scale_translate
from .kernels import MODE_PAPER, MODE_CONSISTENT, KernelKind, gamma_hat, \
    log_factor
from .spectral import (OperatorMatrix, assemble, indicator_expansion_2d,
                       perturbed_eigenvalue_3d, quadratic_form)
from .single import (ORDER_TAG_2D, ORDER_TAG_3D, SingleParticleData, _polish,
                     _resolve_seed, contrast, omega_k_delta_2d,
                     omega_k_delta_3d, quadratic_roots)


@dataclass(frozen=True)
class DimerConfig:
    """Two identical particles delta*D + z1 and delta*D + z2.

    `domain` is the shared reference shape D, centered at the origin with
    unit scale; z1, z2 are the physical particle centers.  The scaled
    particles must be disjoint: |z2 - z1| > delta * diam(D).
    """

    domain: object
    center1: tuple
    center2: tuple
    delta: float

    def __post_init__(self):
        d = self.domain.dimension
        if any(c != 0.0 for c in self.domain.center) or self.domain.scale != 1.0:
            raise GeometryError("dimer base domain must be origin-centered "
                                "with unit scale")
        object.__setattr__(self, "center1",
                           tuple(float(c) for c in self.center1))
        object.__setattr__(self, "center2",
                           tuple(float(c) for c in self.center2))
        if len(self.center1) != d or len(self.center2) != d:
            raise GeometryError("dimer centers have wrong dimension")
        if not self.delta > 0:
            raise GeometryError("delta must be positive")
        if self.separation() <= self.delta * self.domain.diameter():
            raise GeometryError("dimer particles overlap: need "
                                "|z2 - z1| > delta * diam(D)")

    def separation(self):
        """Center-to-center distance |z2 - z1|."""
        return float(np.linalg.norm(np.subtract(self.center2, self.center1)))

    def separation_in_diameters(self):
        return self.separation() / (self.delta * self.domain.diameter())

    def build_meshes(self, cells_per_axis):
        """Congruent quadrature meshes in the rescaled (unit-size) frame.

        Both particles reuse one base mesh of D, translated to z_i/delta,
        so their nodes, weights and spectral data are exactly congruent.
        """
        base = build_mesh(self.domain, cells_per_axis)
        z1 = np.asarray(self.center1) / self.delta
        z2 = np.asarray(self.center2) / self.delta
        return scale_translate(base, 1.0, z1), scale_translate(base, 1.0, z2)


def _check_congruent(mesh1, mesh2):
    if len(mesh1) != len(mesh2) or mesh1.dimension != mesh2.dimension:
        raise GeometryError("dimer meshes must be congruent translated copies")
    if not np.array_equal(mesh1.weights, mesh2.weights):
        raise GeometryError("dimer meshes must share quadrature weights")
    off1 = mesh1.nodes - mesh1.nodes[0]
    off2 = mesh2.nodes - mesh2.nodes[0]
    if not np.allclose(off1, off2, rtol=0.0, atol=1e-12 * mesh1.h):
        raise GeometryError("dimer meshes must be congruent translated copies")


def assemble_cross(source_mesh, target_mesh, delta_k0, k0=None,
                   mode=MODE_PAPER, series=False):
    """Off-diagonal propagation matrix R_{D_source D_target}.

    Default: the exact kernel, entry(i,j) = -G(x_i - y_j, delta_k0) w_j with
    rows on the target mesh; disjointness is enforced (no singular entries).
    With series=True (2D only) the truncated operator N = Khat + R^(0) +
    (delta k0)^2 log(delta k0 ghat) R^(1) is assembled from the same series
    kernels as the diagonal blocks (consistent mode appends the non-log
    companion term); the result approximates the exact matrix to
    O(delta^4 log delta) and is tagged with the exact kind it stands for.
    """
    if not series:
        return assemble(target_mesh, source_mesh,
                        KernelKind.exact(source_mesh.dimension, delta_k0))
    if source_mesh.dimension != 2:
        raise KernelError("the truncated N operator exists only in 2D")
    if k0 is None:
        raise KernelError("series cross assembly needs k0 for the log factor")
    lf = log_factor(delta_k0, k0, mode)
    parts = [lf * assemble(target_mesh, source_mesh,
                           KernelKind.series(2, -1, mode)).entries,
             assemble(target_mesh, source_mesh,
                      KernelKind.series(2, 0, mode)).entries,
             delta_k0 ** 2 * lf * assemble(
                 target_mesh, source_mesh,
                 KernelKind.series(2, 1, mode)).entries]
    if mode == MODE_CONSISTENT:
        parts.append(delta_k0 ** 2 * assemble(
            target_mesh, source_mesh,
            KernelKind.series(2, 1, mode, companion=True)).entries)
    entries = np.asarray(sum(parts), dtype=complex)
    return OperatorMatrix(entries, target_mesh, source_mesh,
                          KernelKind.exact(2, delta_k0))


@dataclass(frozen=True)
class DimerCouplings:
    """Coupling constants of the dimer.

    K = <R_{D1 D2} phi1, phi2>, M = <R_{D2 D1} phi2, phi1>, with sqrt_km the
    principal square root of K*M; eta_hat = <N_{D1 D2} I1, I2> (2D only).
    gamma_plus/minus are the quadratic leading coefficients
    -1 - delta^2 mu0 alpha lambda_delta +/- mu0 alpha delta^2 sqrt_km,
    filled in by the 3D hybrid solver.
    """
    K: complex
    M: complex
    sqrt_km: complex
    eta_hat: complex = None
    gamma_plus: complex = None
    gamma_minus: complex = None


def coupling_constants(mesh1, mesh2, phi1, phi2, delta_k0, k0=None,
                       mode=MODE_PAPER):
    """Discrete coupling constants K, M (and eta_hat in 2D).

    phi_i are same-index eigenvectors (or normalized indicators) on the two
    congruent meshes.  eta_hat is computed from the truncated N operator and
    needs k0; omitted when k0 is None or in 3D.
    """
    cross12 = assemble_cross(mesh1, mesh2, delta_k0)
    cross21 = assemble_cross(mesh2, mesh1, delta_k0)
    K = quadratic_form(cross12, phi1, phi2)
    M = quadratic_form(cross21, phi2, phi1)
    eta_hat = None
    if mesh1.dimension == 2 and k0 is not None:
        n12 = assemble_cross(mesh1, mesh2, delta_k0, k0=k0, mode=mode,
                             series=True)
        i1 = np.full(len(mesh1), 1.0 / np.sqrt(mesh1.volume()))
        i2 = np.full(len(mesh2), 1.0 / np.sqrt(mesh2.volume()))
        eta_hat = quadratic_form(n12, i1, i2)
    return DimerCouplings(complex(K), complex(M), complex(np.sqrt(K * M)),
                          eta_hat=eta_hat)


@dataclass(frozen=True)
class DimerResult:
    omega_m: complex
    omega_d: complex
    couplings: DimerCouplings
    residuals: tuple
    k: complex
    order_tag: str
    mode: str
    k0: complex = None
    delta_k0: complex = None
    iterations: tuple = (0, 0)
    flags: tuple = ()


# branch sign s on the effective eigenvalue Lambda + s*C: the symmetric
# (monopole) combination takes s = +1, the antisymmetric (dipole) s = -1
_BRANCHES = (("monopole", 1.0), ("dipole", -1.0))

# relative |omega_m - omega_d| below which the resonators are reported as
# effectively uncoupled
DECOUPLE_TOL = 1e-6


def _solve_branches(mat, delta, lam_single, coupling, k, seed, tol, max_iter):
    roots = {}
    rhs = mat.beta + mat.eta * k ** 2
    for label, s in _BRANCHES:
        lam = lam_single + s * coupling
        a_coeff = 1.0 + delta ** 2 * mat.mu0 * mat.alpha * lam
        cand = [w for w in quadratic_roots(a_coeff, mat.gamma, rhs)
                if w.real > 0]
        start = cand[0] if cand else seed
        try:
            roots[label] = _polish(mat, delta, lam, k, start, tol, max_iter)
        except NoPhysicalRootError:
            roots[label] = None
    if all(r is None for r in roots.values()):
        raise NoPhysicalRootError("all four hybrid sign combinations yield "
                                  "nonphysical roots")
    for label, r in roots.items():
        if r is None:
            raise NoPhysicalRootError(f"hybrid {label} branch has no root "
                                      "with Re(omega) > 0")
    return roots


def _order_flags(w_m, w_d, flags_m, flags_d):
    flags = tuple(sorted(set(flags_m) | set(flags_d)))
    if not w_m.real < w_d.real:
        flags = flags + ("label-order-mismatch",)
    if abs(w_m - w_d) <= DECOUPLE_TOL * abs(w_m):
        flags = flags + ("decoupled",)
    return flags


def hybrid_frequencies_3d(mat, lam_delta, couplings, k, delta,
                          tol=1e-12, max_iter=100):
    """Closed-form 3D hybridized frequencies from the coupled quadratic.

    Each branch of 1 - delta^2 w^2 xi (lambda_delta -/+ sqrt(KM)) = 0 is an
    exact quadratic Gamma w^2 - i gamma w + beta + eta k^2 = 0 with
    Gamma = -1 - delta^2 mu0 alpha lambda_delta +/- mu0 alpha delta^2
    sqrt(KM); its physical root is polished by the same Newton used for the
    single particle.  Residuals are evaluated against the unfactored
    condition (1 - delta^2 w^2 xi lambda_delta)^2 = delta^4 w^4 xi^2 K M.
    """
    sq = couplings.sqrt_km
    roots = _solve_branches(mat, delta, lam_delta, sq, k,
                            seed=None, tol=tol, max_iter=max_iter)
    w_m, it_m, _, fl_m = roots["monopole"]
    w_d, it_d, _, fl_d = roots["dipole"]

    def hybrid3(w):
        fac = 1.0 - delta ** 2 * w ** 2 * contrast(w, k, mat) * lam_delta
        rhs = delta ** 4 * w ** 4 * contrast(w, k, mat) ** 2 \
            * couplings.K * couplings.M
        return abs(fac ** 2 - rhs)

    mu_a = mat.mu0 * mat.alpha
    coup = dataclasses.replace(
        couplings,
        gamma_plus=-1.0 - delta ** 2 * mu_a * lam_delta
        + mu_a * delta ** 2 * sq,
        gamma_minus=-1.0 - delta ** 2 * mu_a * lam_delta
        - mu_a * delta ** 2 * sq)
    return DimerResult(w_m, w_d, coup, (hybrid3(w_m), hybrid3(w_d)),
                       k, ORDER_TAG_3D, MODE_PAPER,
                       iterations=(it_m, it_d),
                       flags=_order_flags(w_m, w_d, fl_m, fl_d))


def hybrid_condition_2d(mat, mesh1, mesh2, delta, dispersion,
                        mode=MODE_PAPER, tol=1e-12, max_iter=100, data=None):
    """2D hybridized frequencies from the indicator conditions.

    Solves 1 - delta^2 w^2 xi (nu_hat +/- eta_hat) = 0 per coherent branch
    (the log, diagonal and cross terms all carry the same sign, so the
    shared -(|D|/2pi) log(delta k0 ghat) term doubles on the + branch and
    cancels on the - branch).  The + branch is the monopole, the - branch
    the dipole; the ordering Re(omega_m) < Re(omega_d) is verified and a
    violation flagged rather than swapped.
    """
    if mesh1.dimension != 2:
        raise GeometryError("hybrid_condition_2d needs 2D meshes")
    _check_congruent(mesh1, mesh2)
    if mat.gamma == 0:
        raise NoPhysicalRootError("gamma = 0: omega_delta = 0 is filtered "
                                  "as nonphysical")
    data = data or SingleParticleData.build(mesh1)

    def seed_formula(k0):
        return omega_k_delta_2d(mat, delta, k0, data.pair.value,
                                data.constants.P, data.constants.G,
                                gamma_hat(k0, mode))

    w_seed, k, k0 = _resolve_seed(mat, delta, dispersion, seed_formula, 2)
    eps = delta * k0
    nu1 = indicator_expansion_2d(mesh1, delta, k0, mode=mode).value
    nu2 = indicator_expansion_2d(mesh2, delta, k0, mode=mode).value
    if abs(nu1 - nu2) > 1e-10 * abs(nu1):
        raise GeometryError("dimer particles are not identical: nu_hat "
                            "differs between the meshes")
    i1 = np.full(len(mesh1), 1.0 / np.sqrt(mesh1.volume()))
    i2 = np.full(len(mesh2), 1.0 / np.sqrt(mesh2.volume()))
    couplings = coupling_constants(mesh1, mesh2, i1, i2, eps, k0=k0,
                                   mode=mode)
    roots = _solve_branches(mat, delta, nu1, couplings.eta_hat, k,
                            seed=w_seed, tol=tol, max_iter=max_iter)
    w_m, it_m, res_m, fl_m = roots["monopole"]
    w_d, it_d, res_d, fl_d = roots["dipole"]
    return DimerResult(w_m, w_d, couplings, (res_m, res_d), k,
                       ORDER_TAG_2D, mode, k0=k0, delta_k0=eps,
                       iterations=(it_m, it_d),
                       flags=_order_flags(w_m, w_d, fl_m, fl_d))


def solve_dimer_3d(mat, config, dispersion, mode=MODE_PAPER,
                   cells_per_axis=10, tol=1e-12, max_iter=100,
                   meshes=None, data=None):
    """Hybridized resonances of a 3D dimer described by a DimerConfig.

    Resolves (k0, k) exactly as the single-particle solver does (so the
    decoupling limit reproduces solve_single_3d), computes the coupling
    constants on the congruent meshes, and evaluates the closed-form
    hybridized quadratics.
    """
    if config.domain.dimension != 3:
        raise GeometryError("solve_dimer_3d needs a 3D dimer")
    if mat.gamma == 0:
        raise NoPhysicalRootError("gamma = 0: omega_delta = 0 is filtered "
                                  "as nonphysical")
    mesh1, mesh2 = meshes if meshes is not None \
        else config.build_meshes(cells_per_axis)
    _check_congruent(mesh1, mesh2)
    data = data or SingleParticleData.build(mesh1)
    lam0 = -data.pair.value if mode == MODE_PAPER else data.pair.value

    def seed_formula(k0):
        return omega_k_delta_3d(mat, config.delta, k0, lam0,
                                data.constants.B)

    _, k, k0 = _resolve_seed(mat, config.delta, dispersion, seed_formula, 1)
    eps = config.delta * k0
    lam_delta = perturbed_eigenvalue_3d(data.pair, config.delta, k0,
                                        data.constants, order=2, mode=mode)
    phi = data.pair.vector
    couplings = coupling_constants(mesh1, mesh2, phi, phi, eps)
    res = hybrid_frequencies_3d(mat, lam_delta, couplings, k, config.delta,
                                tol=tol, max_iter=max_iter)
    return dataclasses.replace(res, mode=mode, k0=k0, delta_k0=eps)


def solve_dimer_2d(mat, config, dispersion, mode=MODE_PAPER,
                   cells_per_axis=16, tol=1e-12, max_iter=100,
                   meshes=None, data=None):
    """Hybridized resonances of a 2D dimer described by a DimerConfig."""
    if config.domain.dimension != 2:
        raise GeometryError("solve_dimer_2d needs a 2D dimer")
    mesh1, mesh2 = meshes if meshes is not None \
        else config.build_meshes(cells_per_axis)
    return hybrid_condition_2d(mat, mesh1, mesh2, config.delta, dispersion,
                               mode=mode, tol=tol, max_iter=max_iter,
                               data=data)
