import numpy as np
import pytest

from gwhf import kernels as K
from gwhf import windows as W


@pytest.fixture(scope="session")
def gef():
    return K.gef_kernel()


@pytest.fixture(scope="session")
def lag1():
    return K.laguerre_kernel(1)


@pytest.fixture(scope="session")
def lag2():
    return K.laguerre_kernel(2)


@pytest.fixture(scope="session")
def hermites():
    return {r: W.hermite(r) for r in range(7)}


@pytest.fixture(scope="session")
def builtin_kernels():
    return K.BUILTIN_KERNELS()


def synthetic_grid(fn, half=1.0, n=41, offset=0.013 + 0.007j, plane="gwhf"):
    """Grid sampling fn on a square, nudged so zeros avoid lattice lines."""
    from gwhf.simulate import FieldGrid
    xs = np.linspace(-half, half, n) + offset.real
    ys = np.linspace(-half, half, n) + offset.imag
    zz = xs[None, :] + 1j * ys[:, None]
    return FieldGrid(values=fn(zz), origin=complex(xs[0], ys[0]),
                     spacing=xs[1] - xs[0], plane=plane, seed=0)
