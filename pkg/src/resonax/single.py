"""Single-particle subwavelength resonances.

The particle's dispersive permittivity follows the excitonic model

    eps(omega, k) = eps0 + alpha / (beta - omega^2 + eta k^2 - i gamma omega)

and the contrast xi = mu0 (eps - eps0) couples the integral operator to the
frequency.  A resonance is a frequency with Re(omega) > 0 at which

    1 - delta^2 omega^2 xi(omega, k) Lambda = 0

holds, where Lambda is the truncated perturbed eigenvalue lambda_delta
(including its order-2 correction, which carries the printed right-hand
sides of the O(delta^4) conditions) or the 2D indicator expansion nu(delta).

The wavenumbers k0 (background) and k (interior) are handled as in the
source model: k0 is resolved by a fixed-point pass against the closed-form
seed omega_delta, then frozen; k is frozen at the closed-form k_delta.
With both frozen the resonance condition is a quadratic in omega, so the
damped Newton iteration from the omega_delta seed converges in a handful
of steps and the returned residual is at rounding level.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (ConvergenceError, KernelError, NoPhysicalRootError,
                     PoleError, ResonaxError)
from .kernels import MODE_CONSISTENT, MODE_PAPER, gamma_hat, green, log_factor
from .spectral import (indicator_eigenpair, indicator_expansion_2d,
                       newtonian_eigenpairs, perturbed_eigenvalue_2d,
                       perturbed_eigenvalue_3d, shape_constants)

ORDER_TAG_3D = "O(delta^4)"
ORDER_TAG_2D = "O(delta^4 log delta)"
ORDER_TAG_INDICATOR = "indicator nu(delta)"


@dataclass(frozen=True)
class MaterialParams:
    """Excitonic permittivity constants plus background eps0, mu0.

    gamma = 0 is admitted as the undamped limit; the closed-form seed
    omega_delta is then 0 and the solvers report "no physical root", as
    omega = 0 roots are discarded.
    """
    alpha: float
    beta: float
    gamma: float
    eta: float
    eps0: float
    mu0: float

    def __post_init__(self):
        for name in ("alpha", "beta", "eta", "eps0", "mu0"):
            if not getattr(self, name) > 0:
                raise ResonaxError(f"material constant {name} must be positive")
        if self.gamma < 0:
            raise ResonaxError("damping gamma must be nonnegative")


@dataclass(frozen=True)
class BackgroundDispersion:
    """How the background wavenumber k0 relates to omega.

    mode "paper" uses k0 = omega eps0 mu0 as written in the source model,
    "standard" the dimensionally conventional omega sqrt(eps0 mu0), and
    "fixed" a caller-supplied complex k0 (no omega dependence).
    """
    mode: str
    k0: complex = None

    def __post_init__(self):
        if self.mode not in ("paper", "standard", "fixed"):
            raise ResonaxError(f"unknown dispersion mode {self.mode!r}")
        if self.mode == "fixed":
            if self.k0 is None or self.k0 == 0 or not np.isfinite(self.k0):
                raise ResonaxError("fixed dispersion needs finite nonzero k0")

    @classmethod
    def paper(cls):
        return cls("paper")

    @classmethod
    def standard(cls):
        return cls("standard")

    @classmethod
    def fixed(cls, k0):
        return cls("fixed", complex(k0))

    def k0_of(self, omega, mat):
        if self.mode == "paper":
            return omega * mat.eps0 * mat.mu0
        if self.mode == "standard":
            return omega * np.sqrt(mat.eps0 * mat.mu0)
        return self.k0


def _denominator(omega, k, mat):
    return mat.beta - omega ** 2 + mat.eta * k ** 2 - 1j * mat.gamma * omega


def permittivity(omega, k, mat):
    """eps(omega, k); errors exactly at the excitonic pole."""
    den = _denominator(omega, k, mat)
    if den == 0:
        raise PoleError("permittivity evaluated at the excitonic pole")
    return mat.eps0 + mat.alpha / den


def contrast(omega, k, mat):
    """xi(omega, k) = mu0 (eps - eps0)."""
    den = _denominator(omega, k, mat)
    if den == 0:
        raise PoleError("contrast evaluated at the excitonic pole")
    return mat.mu0 * mat.alpha / den


def omega_k_delta_3d(mat, delta, k0, lam0, B):
    """Closed-form 3D seed (omega_delta, k_delta).

    omega_delta = 4 pi gamma / (alpha mu0 delta^3 k0 B); k_delta is the
    principal root of the printed radicand, warning (not erroring) when a
    negative real radicand makes it purely imaginary (evanescent regime).
    lam0 must be in the convention matching downstream use (printed sign
    for paper mode).
    """
    if delta == 0 or k0 == 0 or B == 0:
        raise ResonaxError("omega_k_delta_3d needs delta, k0, B nonzero")
    w = 4.0 * np.pi * mat.gamma / (mat.alpha * mat.mu0 * delta ** 3 * k0 * B)
    rad = (16.0 * np.pi ** 2 * mat.gamma ** 2
           * (1.0 + mat.alpha * mat.mu0 * delta ** 2 * lam0)
           / (mat.alpha ** 2 * mat.mu0 ** 2 * delta ** 6 * k0 ** 2
              * B ** 2 * mat.eta)) - mat.beta / mat.eta
    return complex(w), _principal_k(rad)


def omega_k_delta_2d(mat, delta, k0, lam_m1, P, G, gamma_hat_value):
    """Closed-form 2D seed (omega_delta, k_delta) from the printed system."""
    eps = delta * k0
    arg = eps * gamma_hat_value
    if arg == 0:
        raise ResonaxError("omega_k_delta_2d needs delta*k0 != 0")
    lf = np.log(arg)
    if lf == 0 or G == 0:
        raise ResonaxError("omega_k_delta_2d needs log(delta k0 ghat), G != 0")
    w = 4.0 * np.pi * mat.gamma / (mat.alpha * delta ** 4 * mat.mu0
                                   * k0 ** 2 * lf * G)
    rad = (16.0 * np.pi ** 2 * mat.gamma ** 2
           * (1.0 + mat.alpha * mat.mu0 * delta ** 2 * lam_m1 * lf
              - mat.alpha * mat.mu0 * delta ** 2 * P / (2.0 * np.pi))
           / (mat.eta * mat.alpha ** 2 * mat.mu0 ** 2 * delta ** 8
              * k0 ** 4 * lf ** 2 * G ** 2)) - mat.beta / mat.eta
    return complex(w), _principal_k(rad)


def _principal_k(rad):
    rad = complex(rad)
    if rad.imag == 0 and rad.real < 0:
        warnings.warn("negative radicand: purely imaginary wavenumber "
                      "(evanescent regime)", stacklevel=3)
    k = np.sqrt(rad)
    if k.real < 0:
        k = -k
    return complex(k)


def newton_complex(func, seed, tol=1e-12, max_iter=100, guard=1e6,
                   residual_func=None):
    """Damped complex Newton with a central-difference derivative.

    Iterates on `func`; convergence is judged on |residual_func| (default
    func itself), which lets callers iterate on a well-conditioned
    polynomial form of an equation while reporting the residual of the
    original one.  Returns (root, iterations, residual); raises
    ConvergenceError with the best iterate on failure or divergence past
    guard*|seed|.
    """
    if residual_func is None:
        residual_func = func
    z = complex(seed)
    fz = func(z)
    best, best_res = z, abs(residual_func(z))
    for it in range(1, max_iter + 1):
        res = abs(residual_func(z))
        if res < best_res:
            best, best_res = z, res
        if res <= tol:
            return z, it - 1, res
        step_h = 1e-7 * (1.0 + abs(z))
        dfz = (func(z + step_h) - func(z - step_h)) / (2.0 * step_h)
        if dfz == 0:
            raise ConvergenceError("Newton derivative vanished",
                                   best=best, residual=best_res, iterations=it)
        dz = -fz / dfz
        lam = 1.0
        while lam > 1.0 / 64.0:
            trial = z + lam * dz
            ftrial = func(trial)
            if abs(ftrial) < abs(fz):
                break
            lam *= 0.5
        else:
            trial = z + lam * dz
            ftrial = func(trial)
        z, fz = trial, ftrial
        if abs(z) > guard * (1.0 + abs(seed)):
            raise ConvergenceError("Newton iterate diverged",
                                   best=best, residual=best_res, iterations=it)
    res = abs(residual_func(z))
    if res <= tol:
        return z, max_iter, res
    raise ConvergenceError(
        f"Newton did not reach tolerance {tol:g} in {max_iter} iterations",
        best=best, residual=best_res, iterations=max_iter)


def quadratic_roots(a_coeff, gamma, rhs):
    """Roots of a w^2 + i gamma w - rhs = 0 (frozen-parameter resonance)."""
    disc = np.sqrt(-gamma ** 2 + 4.0 * a_coeff * rhs + 0j)
    return ((-1j * gamma + disc) / (2.0 * a_coeff),
            (-1j * gamma - disc) / (2.0 * a_coeff))


@dataclass(frozen=True)
class ResonanceResult:
    omega: complex
    k: complex
    order_tag: str
    residual: float
    iterations: int
    mode: str
    k0: complex = None
    delta_k0: complex = None
    seed: complex = None
    flags: tuple = ()


@dataclass(frozen=True)
class SingleParticleData:
    """Cached spectral data (eigenpair + shape constants) for one mesh."""
    mesh: object
    pair: object
    constants: object

    @classmethod
    def build(cls, mesh):
        if mesh.dimension == 3:
            pair = newtonian_eigenpairs(mesh, 1)[0]
        else:
            pair = indicator_eigenpair(mesh)
        return cls(mesh, pair, shape_constants(mesh, pair.vector))


def _resolve_seed(mat, delta, dispersion, seed_formula, power):
    """Fixed-point pass coupling k0 = k0(omega) with the omega_delta formula.

    seed_formula(k0) -> (omega, k).  For dispersive modes the naive map is
    marginally stable, so the update uses the contraction
    omega <- (omega^power * formula(k0(omega)))^(1/(power+1)) with the
    principal root (Re > 0); power matches the k0-degree of the formula
    (1 in 3D, 2 in 2D).
    """
    if dispersion.mode == "fixed":
        k0 = complex(dispersion.k0)
        w, k = seed_formula(k0)
        return w, k, k0
    # initial guess from a unit k0, then iterate
    w = seed_formula(1.0 + 0.0j)[0]
    w = complex(abs(w)) if w != 0 else 1.0 + 0j
    for _ in range(50):
        k0 = dispersion.k0_of(w, mat)
        if k0 == 0:
            raise NoPhysicalRootError("dispersive k0 collapsed to zero")
        target = seed_formula(k0)[0]
        w_new = (w ** power * target) ** (1.0 / (power + 1))
        if w_new.real < 0:
            w_new = -w_new
        if abs(w_new - w) <= 1e-10 * abs(w_new):
            w = w_new
            break
        w = w_new
    k0 = dispersion.k0_of(w, mat)
    w_final, k = seed_formula(k0)
    return w_final, k, k0


def resonance_condition(mat, delta, lam, k):
    """F(w) = 1 - delta^2 w^2 xi(w, k) lam, the defining equation."""

    def F(w):
        return 1.0 - delta ** 2 * w ** 2 * contrast(w, k, mat) * lam

    return F


ACCEPT_TOL = 1e-10


def _polish(mat, delta, lam, k, seed, tol, max_iter):
    """Newton for the resonance condition with frozen (k0, k).

    With xi's denominator cleared the condition is the polynomial
    a w^2 + i gamma w - (beta + eta k^2) with a = 1 + delta^2 mu0 alpha
    lam; the root can sit very close to the excitonic pole for small
    gamma, so Newton iterates on the polynomial while the reported
    residual (and the stopping rule) is the defining F itself.  When the
    root hugs the pole, |F| has an evaluation noise floor of roughly
    eps_machine/(delta^2 |lam|); a best iterate below ACCEPT_TOL is then
    accepted and flagged rather than erroring.  Falls back to the
    closed-form quadratic root with Re(omega) > 0 when the seed basin
    yields a nonphysical root.
    """
    F = resonance_condition(mat, delta, lam, k)
    a_coeff = 1.0 + delta ** 2 * mat.mu0 * mat.alpha * lam
    rhs = mat.beta + mat.eta * k ** 2
    scale = max(abs(rhs), abs(a_coeff) * abs(seed) ** 2, 1e-300)

    def F_poly(w):
        return (a_coeff * w ** 2 + 1j * mat.gamma * w - rhs) / scale

    def run(start):
        try:
            return newton_complex(F_poly, start, tol=tol, max_iter=max_iter,
                                  residual_func=F) + ((),)
        except ConvergenceError as err:
            if err.residual is not None and err.residual <= ACCEPT_TOL:
                return (err.best, err.iterations, err.residual,
                        ("residual-floor",))
            raise

    flags = ()
    try:
        root, iters, res, flags = run(seed)
    except ConvergenceError:
        root = None
    if root is None or root.real <= 0:
        cand = [w for w in quadratic_roots(a_coeff, mat.gamma, rhs)
                if w.real > 0]
        if not cand:
            raise NoPhysicalRootError(
                "resonance condition has no root with Re(omega) > 0")
        root, iters, res, flags = run(cand[0])
        flags = flags + ("seed-fallback",)
        if root.real <= 0:
            raise NoPhysicalRootError(
                "resonance condition has no root with Re(omega) > 0")
    return root, iters, res, flags


def solve_single_3d(mat, mesh, delta, dispersion, mode=MODE_PAPER,
                    tol=1e-12, max_iter=100, data=None,
                    constants_override=None):
    """Single-particle resonance of a 3D particle delta*D.

    Solves 1 - delta^2 w^2 xi lam_delta = -(delta^4 k0^2 w^2 xi / 8 pi) F,
    folded into the order-2 truncation lam_delta(order 2), by damped
    Newton from the closed-form seed omega_delta, with k0 and k frozen
    after the seed fixed point.
    """
    if mesh.dimension != 3:
        raise ResonaxError("solve_single_3d needs a 3D mesh")
    if mat.gamma == 0:
        raise NoPhysicalRootError("gamma = 0: omega_delta = 0 is filtered "
                                  "as nonphysical")
    data = data or SingleParticleData.build(mesh)
    constants = constants_override or data.constants
    lam0 = -data.pair.value if mode == MODE_PAPER else data.pair.value

    def seed_formula(k0):
        return omega_k_delta_3d(mat, delta, k0, lam0, constants.B)

    w_seed, k, k0 = _resolve_seed(mat, delta, dispersion, seed_formula, 1)
    eps = delta * k0
    if abs(eps) > 0.5:
        warnings.warn(f"delta*k0 = {abs(eps):.3g} > 0.5: the asymptotic "
                      "expansion is questionable", stacklevel=2)
    lam = perturbed_eigenvalue_3d(data.pair, delta, k0, constants,
                                  order=2, mode=mode)
    root, iters, res, flags = _polish(mat, delta, lam, k, w_seed, tol,
                                      max_iter)
    return ResonanceResult(root, k, ORDER_TAG_3D, res, iters, mode,
                           k0=k0, delta_k0=eps, seed=w_seed, flags=flags)


def solve_single_2d(mat, mesh, delta, dispersion, mode=MODE_PAPER,
                    variant="eigen", tol=1e-12, max_iter=100, data=None,
                    constants_override=None):
    """Single-particle resonance of a 2D particle delta*D.

    variant "eigen" uses the order-2 perturbed eigenvalue truncation
    (carrying the printed S term); variant "indicator" solves
    1 - delta^2 w^2 xi nu(delta) = 0 with the indicator quadratic form.
    """
    if mesh.dimension != 2:
        raise ResonaxError("solve_single_2d needs a 2D mesh")
    if variant not in ("eigen", "indicator"):
        raise ResonaxError(f"unknown variant {variant!r}")
    if mat.gamma == 0:
        raise NoPhysicalRootError("gamma = 0: omega_delta = 0 is filtered "
                                  "as nonphysical")
    data = data or SingleParticleData.build(mesh)
    constants = constants_override or data.constants

    def seed_formula(k0):
        return omega_k_delta_2d(mat, delta, k0, data.pair.value,
                                constants.P, constants.G,
                                gamma_hat(k0, mode))

    w_seed, k, k0 = _resolve_seed(mat, delta, dispersion, seed_formula, 2)
    eps = delta * k0
    if abs(eps) > 0.5:
        warnings.warn(f"delta*k0 = {abs(eps):.3g} > 0.5: the asymptotic "
                      "expansion is questionable", stacklevel=2)
    if variant == "eigen":
        lam = perturbed_eigenvalue_2d(data.pair, delta, k0, constants,
                                      order=2, mode=mode, mesh=mesh)
        tag = ORDER_TAG_2D
    else:
        lam = indicator_expansion_2d(mesh, delta, k0, mode=mode).value
        # indicator seed: the nu(delta)-balance closed form
        a_coeff = 1.0 + delta ** 2 * mat.mu0 * mat.alpha * lam
        cand = [w for w in quadratic_roots(a_coeff, mat.gamma,
                                           mat.beta + mat.eta * k ** 2)
                if w.real > 0]
        if cand:
            w_seed = cand[0]
        tag = ORDER_TAG_INDICATOR
    root, iters, res, flags = _polish(mat, delta, lam, k, w_seed, tol,
                                      max_iter)
    return ResonanceResult(root, k, tag, res, iters, mode,
                           k0=k0, delta_k0=eps, seed=w_seed, flags=flags)


def scattered_field(x, omega, k, mesh, pair, constants, u_in, mat, delta,
                    k0, mode=MODE_PAPER, integrate_kernel=False,
                    single_omega2=False, resonance_omega=None,
                    resonant_denominator=False):
    """Leading-order scattered field at an exterior point x.

    3D:  [1 + d^2 w^2 G(x - y, d k0) xi] / [d^2 w^2 (lam_d - lam0 +
         (i/4pi) d k0 B) xi] <u_in, u> int u,  with y the particle
         centroid (integrate_kernel=True integrates G(x-y) u(y) instead).
    2D:  the printed 4 pi / (i d^6 k0^4 w^4 log(d k0 ghat) xi S) prefactor;
         single_omega2 drops one w^2 factor (consistent-mode toggle for
         the suspected typographical repetition).

    The printed prefactors substitute the resonance identity into the pole
    denominator, so the resulting expression is ansatz-constant exactly at
    omega_s and carries no explicit pole.  resonant_denominator=True keeps
    the pole-pencil form with the explicit 1 - delta^2 w^2 xi lam_delta
    denominator instead, which blows up (amplitude grows) as omega
    approaches the resonance.
    """
    x = np.asarray(x, dtype=float)
    d = mesh.dimension
    if resonance_omega is not None:
        if abs(omega - resonance_omega) > 0.1 * abs(resonance_omega):
            warnings.warn("omega is far from the resonance; the pole "
                          "approximation degrades", stacklevel=2)
    u = pair.vector
    w = mesh.weights
    uin_nodes = np.asarray([u_in(node) for node in mesh.nodes], dtype=complex)
    proj = complex(np.sum(uin_nodes * np.conj(u) * w))
    total = complex(np.sum(u * w))
    scale = np.linalg.norm(uin_nodes) * np.linalg.norm(u) * np.max(w)
    if abs(proj) <= 1e-12 * max(scale, 1e-300) or abs(total) <= 1e-12:
        return 0.0j
    xi = contrast(omega, k, mat)
    eps = delta * k0
    if resonant_denominator:
        return _field_resonant(x, omega, k, mesh, pair, constants, mat,
                               delta, k0, mode, integrate_kernel, proj,
                               total, xi, eps, u, w)
    if d == 3:
        lam_d = perturbed_eigenvalue_3d(pair, delta, k0, constants,
                                        order=2, mode=mode)
        lam0 = -pair.value if mode == MODE_PAPER else pair.value
        den = delta ** 2 * omega ** 2 * xi * (
            lam_d - lam0 + 0.25j / np.pi * eps * constants.B)
        if den == 0:
            raise PoleError("scattered-field denominator vanished "
                            "(evaluation at the resonance)")
        if integrate_kernel:
            gvals = np.array([green(x - node, eps) for node in mesh.nodes])
            bracket = total + delta ** 2 * omega ** 2 * xi \
                * complex(np.sum(gvals * u * w))
            return proj * bracket / den
        gcen = green(x - mesh.centroid(), eps)
        return (1.0 + delta ** 2 * omega ** 2 * gcen * xi) * proj * total / den
    lf = log_factor(eps, k0, mode)
    wpow = omega ** 2 if single_omega2 else omega ** 4
    den = 1j * delta ** 6 * k0 ** 4 * wpow * lf * xi * constants.S
    if den == 0:
        raise PoleError("scattered-field denominator vanished")
    pref = 4.0 * np.pi / den
    if integrate_kernel:
        gvals = np.array([green(x - node, eps) for node in mesh.nodes])
        bracket = total + delta ** 2 * omega ** 2 * xi \
            * complex(np.sum(gvals * u * w))
        return pref * proj * bracket
    gcen = green(x - mesh.centroid(), eps)
    return pref * (1.0 + delta ** 2 * omega ** 2 * gcen * xi) * proj * total


def _field_resonant(x, omega, k, mesh, pair, constants, mat, delta, k0,
                    mode, integrate_kernel, proj, total, xi, eps, u, w):
    """Pole-pencil field with the explicit resonant denominator.

    u_sc = -d^2 w^2 xi G(x-y, eps) proj total / (1 - d^2 w^2 xi lam_d)
           + c2 w^2 xi <K2 u, u> proj total / (1 - d^2 w^2 xi lam_d)^2,
    with c2 = d^4 k0^2 in 3D and d^6 k0^4 log(d k0 ghat) in 2D.
    """
    if mesh.dimension == 3:
        lam_d = perturbed_eigenvalue_3d(pair, delta, k0, constants,
                                        order=2, mode=mode)
        lam0 = -pair.value if mode == MODE_PAPER else pair.value
        k2q = (lam_d - lam0 + 0.25j / np.pi * eps * constants.B) / eps ** 2
        c2 = delta ** 4 * k0 ** 2
    else:
        lam_d = perturbed_eigenvalue_2d(pair, delta, k0, constants,
                                        order=2, mode=mode, mesh=mesh)
        k2q = 0.25j / np.pi * constants.S
        c2 = delta ** 6 * k0 ** 4 * log_factor(eps, k0, mode)
    den = 1.0 - delta ** 2 * omega ** 2 * xi * lam_d
    if den == 0:
        raise PoleError("field evaluated exactly at the resonance")
    if integrate_kernel:
        gpart = complex(np.sum(
            np.array([green(x - node, eps) for node in mesh.nodes]) * u * w))
    else:
        gpart = green(x - mesh.centroid(), eps) * total
    first = -delta ** 2 * omega ** 2 * xi * gpart * proj / den
    second = c2 * omega ** 2 * xi * k2q * proj * total / den ** 2
    return first + second
