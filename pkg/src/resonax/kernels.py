"""Green's functions and series-expansion kernels in 2D/3D.

The outgoing Helmholtz Green's function is

    G(x, k) = -exp(ik|x|)/(4 pi |x|)          (d = 3)
    G(x, k) = -(i/4) H0^(1)(k|x|)             (d = 2)

and the volume integral operator carries the sign K[u] = -int G u, so the
*operator* kernel is -G.  For small eps = delta*k0 the exact kernel is
expanded in a coefficient basis c_n (3D: eps^n; 2D: c_-1 = log(eps*ghat),
c_0 = 1, c_n = eps^(2n) log(eps*ghat) for n >= 1, plus a non-log companion
eps^(2n) term that the 2D Taylor series produces alongside each log term).

Every series kernel exists in two conventions:

* "paper"      -- the printed formulas taken verbatim, including their
                  internal sign discrepancies and the extra k0 factor in
                  ghat.  Useful to reproduce printed expressions exactly.
* "consistent" -- the coefficients of the actual Taylor expansion of the
                  exact operator kernel -G, validated against assembled
                  exact matrices by the expansion-matching oracle in the
                  test suite.

The two differ by a global sign in 3D; in 2D they agree for n in {-1, 0}
and differ for n >= 1 (the printed 2D kernels 1/r and 1/r^2 do not arise
in the Taylor expansion; the consistent ones are r^2/8pi, -r^4/128pi, ...).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.special import hankel1

from .errors import KernelError

MODE_PAPER = "paper"
MODE_CONSISTENT = "consistent"
MODES = (MODE_PAPER, MODE_CONSISTENT)

EULER_GAMMA = float(np.euler_gamma)
# Catalan's constant; enters the closed form of the punctured-cell value
# int_{unit square \ disk(1/4)} r^-2 dA = 4 pi log 2 - 4 C  (checked by a
# brute-force quadrature oracle in the tests).
CATALAN = 0.915965594177219015054603514932

PUNCTURED_CELL_R2 = 4.0 * np.pi * np.log(2.0) - 4.0 * CATALAN

# harmonic numbers H_n appearing in the 2D companion kernels
_HARMONIC = (0.0, 1.0, 1.5, 11.0 / 6.0, 25.0 / 12.0)


def _check_mode(mode):
    if mode not in MODES:
        raise KernelError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass(frozen=True)
class KernelKind:
    """Identifies one integral-operator kernel.

    variant "exact" evaluates -G(x-y, k); variant "series" evaluates the
    n-th expansion kernel K^(n) in the selected mode.  companion=True
    selects the 2D non-log companion of the consistent n-th term.
    """

    dimension: int
    variant: str
    mode: str = MODE_CONSISTENT
    k: complex = None
    n: int = None
    companion: bool = False

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise KernelError("dimension must be 2 or 3")
        _check_mode(self.mode)
        if self.variant == "exact":
            if self.k is None or not np.isfinite(self.k):
                raise KernelError("exact kernel requires finite k")
            if self.dimension == 2 and self.k == 0:
                raise KernelError("2D exact kernel undefined at k=0")
        elif self.variant == "series":
            if self.n is None or self.n < -1:
                raise KernelError("series term needs n >= -1")
            if self.n == -1 and self.dimension == 3:
                raise KernelError("n = -1 series term exists only in 2D")
            if self.companion:
                if self.dimension != 2 or self.mode != MODE_CONSISTENT or self.n < 1:
                    raise KernelError(
                        "companion terms exist only for 2D consistent n >= 1")
        else:
            raise KernelError(f"unknown kernel variant {self.variant!r}")

    @classmethod
    def exact(cls, dimension, k, mode=MODE_CONSISTENT):
        return cls(dimension, "exact", mode, k=complex(k))

    @classmethod
    def series(cls, dimension, n, mode=MODE_CONSISTENT, companion=False):
        return cls(dimension, "series", mode, n=int(n), companion=companion)

    @property
    def singular(self):
        """True if the kernel blows up (or is log-singular) at r = 0."""
        if self.variant == "exact":
            return True
        if self.dimension == 3:
            return self.n == 0
        return self.n == 0 or (self.n >= 1 and self.mode == MODE_PAPER) \
            or self.companion


def green(offset, k):
    """Outgoing Helmholtz Green's function G(offset, k).

    The dimension is inferred from the offset length.  k = 0 is allowed in
    3D (Newtonian limit) but not in 2D, where the k -> 0 behaviour is
    logarithmic and has no pointwise limit.
    """
    x = np.asarray(offset, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise KernelError("green() at zero offset; use the self-term rules")
    if x.shape == (3,):
        return -np.exp(1j * k * r) / (4.0 * np.pi * r)
    if x.shape == (2,):
        if k == 0:
            raise KernelError("2D Green's function has no k=0 value; "
                              "use series kernels")
        return -0.25j * hankel0(k * r)
    raise KernelError("offset must be a 2- or 3-vector")


def hankel0(z):
    """Hankel function of the first kind, order zero, complex argument."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise KernelError("H0^(1) is singular at z = 0")
    out = hankel1(0, z)
    return complex(out) if out.ndim == 0 else out


def gamma_hat(k0, mode):
    """The 2D expansion constant ghat.

    paper mode keeps the printed k0 factor, (1/2) k0 exp(gamma - i pi/2);
    consistent mode drops it, which is what matching the exact kernel
    expansion requires (the k0 already appears in log(delta*k0*ghat)).
    """
    _check_mode(mode)
    base = 0.5 * np.exp(EULER_GAMMA - 0.5j * np.pi)
    if mode == MODE_PAPER:
        if k0 == 0:
            raise KernelError("paper-mode gamma_hat needs k0 != 0")
        return base * k0
    return base


def log_factor(delta_k0, k0, mode):
    """log(delta*k0*ghat), the shared 2D logarithm coefficient."""
    arg = delta_k0 * gamma_hat(k0, mode)
    if arg == 0:
        raise KernelError("log factor undefined at delta*k0 = 0")
    return np.log(arg)


def _coef3(n, mode):
    # 3D K^(n) kernel = coef * r^(n-1).  Printed: -(i/4pi)(i r)^(n-1)/n!;
    # the Taylor expansion of -G gives the opposite global sign.
    c = -0.25j / np.pi * (1j) ** (n - 1) / factorial(n)
    return c if mode == MODE_PAPER else -c


def kernel_values(kind, r):
    """Evaluate the kernel on an array of positive distances.

    For "exact" kinds this is the operator kernel -G; series kinds return
    the K^(n) kernel in the requested mode.  r = 0 entries are the
    caller's responsibility (see cell_integral).
    """
    r = np.asarray(r, dtype=float)
    if kind.variant == "exact":
        if kind.dimension == 3:
            return np.exp(1j * kind.k * r) / (4.0 * np.pi * r)
        return 0.25j * hankel1(0, kind.k * r)
    n = kind.n
    if kind.dimension == 3:
        return _coef3(n, kind.mode) * r ** (n - 1) * np.ones_like(r)
    # 2D
    if n == -1:
        return np.full(r.shape, -0.5 / np.pi)
    if n == 0:
        return -np.log(r) / (2.0 * np.pi)
    if kind.mode == MODE_PAPER:
        if n == 1:
            return -0.25j / np.pi / r
        if n == 2:
            return 0.25j / np.pi / r ** 2
        raise KernelError(f"no printed 2D kernel for n = {n}")
    # consistent: log-coefficient kernel -(1/2pi)(-1)^n r^(2n)/(4^n (n!)^2),
    # companion multiplies it by (log r - H_n)
    base = (-0.5 / np.pi) * (-1.0) ** n * r ** (2 * n) \
        / (4.0 ** n * factorial(n) ** 2)
    if kind.companion:
        return base * (np.log(r) - _HARMONIC[n])
    return base


def series_kernel(kind, x, y):
    """Pointwise K^(n) kernel value at (x, y); errors on singular coincidence."""
    if kind.variant != "series":
        raise KernelError("series_kernel needs a SeriesTerm kind")
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    if r > 0.0:
        return complex(kernel_values(kind, np.asarray(r)))
    if kind.singular:
        raise KernelError("singular series kernel at x = y; "
                          "use the self-term rules")
    # regular kernels at coincidence
    if kind.dimension == 3:
        return complex(_coef3(1, kind.mode)) if kind.n == 1 else 0.0j
    if kind.n == -1:
        return complex(-0.5 / np.pi)
    return 0.0j


def equal_measure_radius(dimension, w):
    """Radius of the disk/ball with the same measure as a cell of weight w."""
    if dimension == 2:
        return float(np.sqrt(w / np.pi))
    return float((3.0 * w / (4.0 * np.pi)) ** (1.0 / 3.0))


def cell_integral(kind, w, h):
    """Integral of the kernel over one quadrature cell around its center.

    Used for the diagonal self-term: the singular diagonal entry of an
    assembled matrix is the analytic average over the equal-measure disk
    (2D) or ball (3D) times the weight -- i.e. exactly this integral.  The
    2D 1/r^2 kernel diverges on the full disk, so its diagonal uses the
    punctured-cell value (cell minus the inscribed disk of radius h/4),
    which is scale invariant.
    """
    d = kind.dimension
    a = equal_measure_radius(d, w)
    if kind.variant == "exact":
        if d == 3:
            # int_ball exp(ikr)/(4 pi r) dV = int_0^a r exp(ikr) dr
            return _radial_exp_integral(kind.k, a)
        k = kind.k
        return (0.5j * np.pi / k ** 2) * (k * a * hankel1(1, k * a)
                                          + 2j / np.pi)
    n = kind.n
    if d == 3:
        return _coef3(n, kind.mode) * 4.0 * np.pi * a ** (n + 2) / (n + 2)
    if n == -1:
        return -w / (2.0 * np.pi)
    if n == 0:
        return -(w / (2.0 * np.pi)) * (np.log(a) - 0.5)
    if kind.mode == MODE_PAPER:
        if n == 1:
            return -0.5j * a
        if n == 2:
            return 0.25j / np.pi * PUNCTURED_CELL_R2
        raise KernelError(f"no printed 2D kernel for n = {n}")
    c = (-0.5 / np.pi) * (-1.0) ** n / (4.0 ** n * factorial(n) ** 2)
    p = 2 * n
    # int_disk r^p dA and int_disk r^p log r dA
    ip = 2.0 * np.pi * a ** (p + 2) / (p + 2)
    iplog = 2.0 * np.pi * (a ** (p + 2) * np.log(a) / (p + 2)
                           - a ** (p + 2) / (p + 2) ** 2)
    if kind.companion:
        return c * (iplog - _HARMONIC[n] * ip)
    return c * ip


def _radial_exp_integral(k, a):
    """int_0^a r exp(ikr) dr, series fallback for small |k|a."""
    z = 1j * k * a
    if abs(z) < 0.05:
        total = 0.0j
        term = a ** 2 / 2.0
        for m in range(25):
            total += term
            term = term * z * (m + 2) / ((m + 1) * (m + 3))
        return total
    return (np.exp(z) * (z - 1.0) + 1.0) / (1j * k) ** 2


@dataclass(frozen=True)
class SeriesCoefficients:
    """Coefficient basis c_n of the small-eps kernel expansion."""

    dimension: int
    delta_k0: complex
    gamma_hat: complex
    coefficients: dict

    @classmethod
    def build(cls, dimension, delta_k0, k0, mode, n_max=3):
        gh = gamma_hat(k0, mode) if dimension == 2 else None
        coef = {}
        if dimension == 3:
            for n in range(n_max + 1):
                coef[n] = complex(delta_k0) ** n
        else:
            lf = log_factor(delta_k0, k0, mode)
            coef[-1] = lf
            coef[0] = 1.0 + 0.0j
            for n in range(1, n_max + 1):
                coef[n] = complex(delta_k0) ** (2 * n) * lf
        return cls(dimension, complex(delta_k0), gh, coef)


def series_coefficient(dimension, n, delta_k0, logf=None, companion=False):
    """Single expansion coefficient c_n (or the companion eps^(2n))."""
    if dimension == 3:
        return complex(delta_k0) ** n
    if companion:
        return complex(delta_k0) ** (2 * n)
    if n == 0:
        return 1.0 + 0.0j
    if logf is None:
        raise KernelError("2D coefficients with n != 0 need the log factor")
    if n == -1:
        return complex(logf)
    return complex(delta_k0) ** (2 * n) * logf
