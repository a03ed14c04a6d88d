"""Shared fixtures: meshes and material configurations reused across the
test modules.  Meshes are session-scoped since they are immutable."""

import numpy as np
import pytest

from resonax import (MaterialParams, BackgroundDispersion, ball, build_mesh,
                     disk)


@pytest.fixture(scope="session")
def disk_mesh():
    """Unit disk, resolution 16 (208 nodes)."""
    return build_mesh(disk(1.0), 16)


@pytest.fixture(scope="session")
def disk_mesh_fine():
    """Unit disk, resolution 24."""
    return build_mesh(disk(1.0), 24)


@pytest.fixture(scope="session")
def ball_mesh():
    """Unit ball, resolution 8 (280 nodes)."""
    return build_mesh(ball(1.0), 8)


@pytest.fixture(scope="session")
def ball_mesh_fine():
    """Unit ball, resolution 10 (552 nodes)."""
    return build_mesh(ball(1.0), 10)


@pytest.fixture(scope="session")
def material():
    """Unit-scale placeholder material with mild damping."""
    return MaterialParams(alpha=1.0, beta=1.0, gamma=1e-3, eta=1.0,
                          eps0=1.0, mu0=1.0)


@pytest.fixture(scope="session")
def material_3d():
    """Material used by the 3D root-residual configs."""
    return MaterialParams(alpha=1.0, beta=1.0, gamma=1e-4, eta=1.0,
                          eps0=1.0, mu0=1.0)


@pytest.fixture(scope="session")
def disp_fixed_half():
    return BackgroundDispersion.fixed(0.5)


@pytest.fixture(scope="session")
def disp_fixed_one():
    return BackgroundDispersion.fixed(1.0)


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
