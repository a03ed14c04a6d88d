"""resonax: subwavelength resonances of dispersive dielectric nano-resonators.

Computes resonant frequencies of halide-perovskite-type particles from a
Lippmann-Schwinger volume-integral formulation: Newtonian-potential spectra
on quadrature meshes, perturbed-eigenvalue expansions in the particle size,
single-particle resonances and scattered fields, and hybridized dimer
resonances, in two and three dimensions.
"""

from .errors import (ConfigError, ConvergenceError, GeometryError,
                     KernelError, NoPhysicalRootError, PoleError,
                     ResonaxError)
from .geometry import (DomainSpec, QuadratureMesh, ball, box, build_mesh,
                       disk, ellipse, ellipsoid, load_raster, raster,
                       rectangle, scale_translate)
from .kernels import (MODE_CONSISTENT, MODE_PAPER, KernelKind, cell_integral,
                      gamma_hat, green, hankel0, log_factor, series_kernel)
from .spectral import (EigenPair, OperatorMatrix, ShapeConstants, assemble,
                       eig_sym, expansion_residual, indicator_eigenpair,
                       indicator_expansion_2d, leading_newtonian_eigenvalue,
                       newtonian_eigenpairs, perturbed_eigenvalue_2d,
                       perturbed_eigenvalue_3d, save_eigenpairs_csv,
                       save_matrix_csv, shape_constants)
from .single import (BackgroundDispersion, MaterialParams, ResonanceResult,
                     SingleParticleData, contrast, omega_k_delta_2d,
                     omega_k_delta_3d, permittivity, scattered_field,
                     solve_single_2d, solve_single_3d)
from .dimer import (DimerConfig, DimerCouplings, DimerResult, assemble_cross,
                    coupling_constants, hybrid_condition_2d,
                    hybrid_frequencies_3d, solve_dimer_2d, solve_dimer_3d)

__version__ = "0.1.0"

__all__ = [
    "BackgroundDispersion", "ConfigError", "ConvergenceError", "DimerConfig",
    "DimerCouplings", "DimerResult", "DomainSpec", "EigenPair",
    "GeometryError", "KernelError", "KernelKind", "MODE_CONSISTENT",
    "MODE_PAPER", "MaterialParams", "NoPhysicalRootError", "OperatorMatrix",
    "PoleError", "QuadratureMesh", "ResonanceResult", "ResonaxError",
    "ShapeConstants", "SingleParticleData", "assemble", "assemble_cross",
    "ball", "box", "build_mesh", "cell_integral", "contrast",
    "coupling_constants", "disk", "eig_sym", "ellipse", "ellipsoid",
    "expansion_residual", "gamma_hat", "green", "hankel0",
    "hybrid_condition_2d", "hybrid_frequencies_3d", "indicator_eigenpair",
    "indicator_expansion_2d", "leading_newtonian_eigenvalue", "load_raster",
    "log_factor", "newtonian_eigenpairs", "omega_k_delta_2d",
    "omega_k_delta_3d", "permittivity", "perturbed_eigenvalue_2d",
    "perturbed_eigenvalue_3d", "raster", "rectangle", "save_eigenpairs_csv",
    "save_matrix_csv", "scale_translate", "scattered_field", "series_kernel",
    "shape_constants", "solve_dimer_2d", "solve_dimer_3d", "solve_single_2d",
    "solve_single_3d",
]
