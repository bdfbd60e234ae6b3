import numpy as np
import pytest

from surfstokes import geometry, stokes


@pytest.fixture(scope="session")
def flat16():
    return geometry.build_flat_torus(2 * np.pi, 2 * np.pi, 16, 16)


@pytest.fixture(scope="session")
def rev16():
    return geometry.build_torus_of_revolution(2.0, 1.0, 16, 16)


@pytest.fixture(scope="session")
def rev32():
    return geometry.build_torus_of_revolution(2.0, 1.0, 32, 32)


@pytest.fixture(scope="session")
def rev64():
    return geometry.build_torus_of_revolution(2.0, 1.0, 64, 64)


@pytest.fixture(scope="session")
def flat16_basis(flat16):
    return stokes.divfree_basis(flat16)


@pytest.fixture(scope="session")
def rev32_basis(rev32):
    return stokes.divfree_basis(rev32)


@pytest.fixture(scope="session")
def rev32_op(rev32, rev32_basis):
    return stokes.assemble_operator(rev32, 1.0, rev32_basis)


@pytest.fixture(scope="session")
def rev32_kb(rev32, rev32_basis):
    return stokes.killing_fields(rev32, basis=rev32_basis)


@pytest.fixture(scope="session")
def rev16_basis(rev16):
    return stokes.divfree_basis(rev16)


@pytest.fixture(scope="session")
def flat16_op(flat16, flat16_basis):
    return stokes.assemble_operator(flat16, 1.0, flat16_basis)


@pytest.fixture(scope="session")
def rev16_op(rev16, rev16_basis):
    return stokes.assemble_operator(rev16, 1.0, rev16_basis)


@pytest.fixture(scope="session")
def flat16_kb(flat16, flat16_basis):
    return stokes.killing_fields(flat16, basis=flat16_basis)


@pytest.fixture(scope="session")
def rev16_kb(rev16, rev16_basis):
    return stokes.killing_fields(rev16, basis=rev16_basis)
