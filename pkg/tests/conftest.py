"""Pytest configuration and shared fixtures."""

import pytest

from homogenize.config import reset_config
from homogenize.mesh import build_unit_square_mesh
from homogenize.microstructure import MicrostructureSpec, NonlinearitySpec
from homogenize.multiscale_exp import SweepConfig, run_epsilon_sweep


@pytest.fixture(autouse=True)
def fresh_global_config():
    """Every test starts without a cached global configuration."""
    reset_config()
    yield
    reset_config()


@pytest.fixture
def mesh4():
    return build_unit_square_mesh(4)


@pytest.fixture
def mesh16():
    return build_unit_square_mesh(16)


@pytest.fixture
def constant_spec():
    """Homogeneous medium with a = 2.5."""
    return MicrostructureSpec(kind="constant", a_matrix=2.5)


@pytest.fixture
def laminate_spec():
    return MicrostructureSpec(kind="laminate", a_matrix=1.0, a_inclusion=4.0)


@pytest.fixture
def checkerboard_spec():
    return MicrostructureSpec(kind="checkerboard", a_matrix=1.0, a_inclusion=4.0)


@pytest.fixture
def circular_spec():
    return MicrostructureSpec(kind="circular_inclusion", a_matrix=1.0, a_inclusion=10.0, radius=0.25)


@pytest.fixture
def cubic():
    return NonlinearitySpec("cubic")


@pytest.fixture
def small_sweep_config():
    """Coarse sweep that runs in well under a second."""
    return SweepConfig(
        eps_list=(0.5, 0.25),
        cells_per_period=8,
        cell_mesh_n=32,
        reference_n=32,
    )


@pytest.fixture(scope="session")
def default_sweep():
    """The default circular-inclusion sweep (eps = 1/4, 1/8, 1/16); computed once."""
    return run_epsilon_sweep(SweepConfig(), progress=False)


SMALL_CONFIG = """\
[microstructure]
kind = circular_inclusion
a_matrix = 1.0
a_inclusion = 10.0
radius = 0.25

[nonlinearity]
kind = cubic

[load]
kind = constant
value = 1.0

[sweep]
eps_list = 1/2, 1/4
cells_per_period = 8
cell_mesh_n = 32
reference_n = 32

[output]
output_dir = results
"""


@pytest.fixture
def small_config_text():
    return SMALL_CONFIG


@pytest.fixture
def small_config_file(tmp_path):
    """Write the coarse configuration to a temporary file."""
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return str(path)
