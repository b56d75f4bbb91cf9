import numpy as np
import pytest

from nested_ucya import ArrayConfig, CoarrayModel, PhaseSpaceConfig, solve_rf_allocation


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def desk_model():
    """8 rings of 12 elements, radius one wavelength, P = 7 (Bessel-model ports)."""
    cfg = ArrayConfig(M_v=8, M_h=12, r=1.0)
    ps = PhaseSpaceConfig.from_array(cfg, 7)
    return CoarrayModel(cfg, ps, solve_rf_allocation(ps.M_vr, ps.M_hr))


@pytest.fixture(scope="session")
def full_model():
    """25 rings of 30 elements, radius two wavelengths, P = 14, 54 RF chains."""
    from nested_ucya import NestedDesign

    cfg = ArrayConfig()
    ps = PhaseSpaceConfig.from_array(cfg, 14)
    return CoarrayModel(cfg, ps, NestedDesign(5, 5, 5, 6, ps.M_vr, ps.M_hr))
