import warnings

import numpy as np
import pytest

from dbar_eit.bie import TruncationWarning, polar_kgrid, transform_boundary
from dbar_eit.fem import dn_difference, mesh_for
from dbar_eit.phantoms import smooth_bump, two_layer

# polar k-sampling used for reconstructions: 16 radii x 32 angles on |k| <= 4
RECON_R = 4.0
RECON_KGRID = (16, 32)


@pytest.fixture(scope="session")
def bump():
    return smooth_bump()


@pytest.fixture(scope="session")
def layer():
    return two_layer()


@pytest.fixture(scope="session")
def layer_mesh(layer):
    return mesh_for(layer, 256)


@pytest.fixture(scope="session")
def layer_A(layer, layer_mesh):
    return dn_difference(layer, 16, layer_mesh)


@pytest.fixture(scope="session")
def bump_A(bump):
    return dn_difference(bump, 32, mesh_for(bump, 256))


def _recon_transform(sigma):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return transform_boundary(sigma, polar_kgrid(RECON_R, *RECON_KGRID), RECON_R, N=32)


@pytest.fixture(scope="session")
def bump_t(bump):
    return _recon_transform(bump)


@pytest.fixture(scope="session")
def layer_t(layer):
    return _recon_transform(layer)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
