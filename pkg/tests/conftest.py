import numpy as np
import pytest

from nondegen.config import NumericsConfig


@pytest.fixture(scope="session")
def cfg():
    return NumericsConfig()


@pytest.fixture(scope="session")
def rng(cfg):
    return np.random.default_rng(cfg.seed)


@pytest.fixture(scope="session")
def sd_L(cfg):
    from nondegen import spectral
    return spectral.spectral_measure(spectral.op_L(), cfg)


@pytest.fixture(scope="session")
def sd_Lstar(cfg):
    from nondegen import spectral
    return spectral.spectral_measure(spectral.op_Lstar(), cfg)


@pytest.fixture(scope="session")
def good_inv(cfg, sd_Lstar):
    from nondegen import fredholm
    return fredholm.good_inverse_operator(cfg)


@pytest.fixture(scope="session")
def cstar_cert(cfg, sd_L):
    from nondegen import constants
    return constants.compute_cstar(cfg, sd_L)


@pytest.fixture(scope="session")
def alpha_certs(cfg, cstar_cert):
    from nondegen import constants
    return constants.alpha_constants(cfg, cstar_cert)


@pytest.fixture(scope="session")
def a1_cert(cfg):
    from nondegen import fredholm
    return fredholm.check_A1(cfg)


@pytest.fixture(scope="session")
def b3_cert(cfg, alpha_certs):
    from nondegen import fredholm
    return fredholm.check_B3(cfg, float(alpha_certs[0].value))
