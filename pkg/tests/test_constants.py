import math

import numpy as np
import pytest

from nondegen import constants as C
from nondegen import profiles as P


def test_profile_integrals_against_closed_forms(cfg):
    pin = C.profile_integrals(cfg)
    exact = {
        "I_dW2_W2": -32.0 / 15.0,
        "I_dW2_LWW": -16.0 / 15.0,
        "I_C1": 32.0,
        "I_B1_paper": 44.0 / 3.0,
        "I_B1_num": 16.0 / 3.0,
        "I_B2_paper": -544.0 / 15.0,
        "I_B2_num": -8.0 / 5.0,
        "J_LW": -64.0 / 3.0,
    }
    for name, val in exact.items():
        got, err = getattr(pin, name)
        assert abs(got - val) < 1e-6 * abs(val), name
        assert abs(got - val) < 10 * max(err, 1e-12 * abs(val)), name


def test_alpha_star_T_value(cfg):
    # inverse of half the (C1) pairing: (32/2)^-1 = 1/16
    assert abs(C.alpha_star_T(cfg) - 1.0 / 16.0) < 1e-8


def test_T1_functional(cfg):
    W = P.profile_W(cfg)
    t1 = C.functional_T1(W, cfg)
    assert t1 < 0.0
    assert abs(t1 + 32.0 / 15.0) < 1e-6
    # equals -int |grad W^2|^2 by parts
    dW2 = 2.0 * W.grid * (-0.25) * P.eval_W(W.grid) ** 2
    ibp = -np.trapezoid(dW2**2 * W.grid**3, W.grid)
    assert abs(t1 - ibp) < 1e-4


def test_T_annihilates_orthogonal_complement(cfg, rng):
    grid = P.make_grid(cfg)
    W = P.profile_W(cfg)
    bump = P.RadialFunction(grid, np.exp(-(grid**2 - 8.0) ** 2 / 12.0),
                            P.Tail(cfg.R_tail, ()))
    # project out the W^3 component
    W3 = W * W * W
    num, _ = P.radial_integral(bump * W3)
    den, _ = P.radial_integral(W3 * W3)
    z = bump - (num / den) * W3
    assert abs(C.functional_T(z, cfg)) < 1e-10
    assert abs(C.functional_T(bump, cfg)) > 1e-6


def test_Ttilde_intertwines_with_Ltilde(cfg):
    # Ttilde(Ltilde z) = T(z) on test bumps
    grid = P.make_grid(cfg)
    W = P.profile_W(cfg)
    z = P.RadialFunction(grid, np.exp(-(grid**2 - 6.0) ** 2 / 10.0),
                         P.Tail(cfg.R_tail, ()))
    Lz = (-1.0) * P.apply_Delta(z) - 3.0 * (W * W * z)
    lhs = C.functional_Ttilde(Lz, cfg)
    rhs = C.functional_T(z, cfg)
    assert abs(lhs - rhs) < 1e-5 * max(abs(rhs), 1e-10)


def test_check_C1(cfg):
    cert = C.check_C1(cfg)
    assert cert.passed and cert.margin > 10
    assert abs(cert.value - 32.0) < 1e-4
    assert cert.notes["relative_agreement"] < 1e-3
    assert cert.notes["sign_consistent"]


def test_check_B1(cfg):
    cert = C.check_B1(cfg)
    assert cert.passed and cert.margin > 10
    assert abs(cert.value - 44.0 / 3.0) < 1e-6
    assert abs(cert.notes["with_decaying_corrector"] - 16.0 / 3.0) < 1e-6
    assert cert.notes["decaying_corrector_margin"] > 10


def test_cstar_certificate(cstar_cert):
    assert cstar_cert.passed and cstar_cert.margin > 10
    # desk-scale reproducibility band; the margin is the real content
    assert 1.8 < cstar_cert.value < 2.2
    assert cstar_cert.notes["head"] > 0


def test_alpha_chain_and_wiring(cfg, cstar_cert, alpha_certs):
    astar, adstar = alpha_certs
    assert astar.passed and adstar.passed
    pin = C.profile_integrals(cfg)
    # wiring identity: alpha_* = -c_* int Delta(W^2) W^2
    assert math.isclose(astar.value,
                        -cstar_cert.value * pin.I_dW2_W2[0], rel_tol=1e-12)
    # alpha_** = -alpha_* + (1/2) int Delta(W^2) LambdaW W
    assert math.isclose(adstar.value,
                        -astar.value + 0.5 * pin.I_dW2_LWW[0], rel_tol=1e-12)
    assert adstar.notes["c2"] == 0.5
    # the opposite-sign variant is also recorded
    assert "alpha_dstar_c2_negative" in adstar.notes


def test_check_B2(cfg, cstar_cert):
    cert = C.check_B2(cfg, cstar_cert)
    assert cert.passed
    assert abs(cert.value - 1.0) > 10 * cert.error
    assert cert.notes["decaying_margin"] > 10
    assert abs(cert.notes["T1_psi_quoted"] + 544.0 / 15.0) < 1e-5


def test_check_C3(cfg, cstar_cert):
    cert = C.check_C3(cfg, cstar_cert)
    assert cert.passed and cert.margin > 10


def test_tauhatstar_certificate(cfg):
    cert = C.check_tauhatstar(cfg)
    assert cert.passed
    assert 0.5 < cert.value < 1.0
    assert cert.notes["cauchy_schwarz_margin"] > 0
    assert cert.notes["sign_changes_on_grid"] == 1


def test_xid_certificate(cfg):
    cert = C.check_xid(cfg)
    assert cert.passed
    assert cert.notes["count"] == 1
    assert cert.notes["raw_error"] < 1e-6 * cert.value


def test_stability_under_grid_doubling(cfg, cstar_cert):
    # values stable to 3 digits when the radial grid is refined
    fine = cfg.replace(n_grid=2 * cfg.n_grid - 1)
    pin_c = C.profile_integrals(cfg)
    pin_f = C.profile_integrals(fine)
    for name in ("I_C1", "I_B1_paper", "I_dW2_W2", "I_dW2_LWW",
                 "I_B2_paper"):
        v0 = getattr(pin_c, name)[0]
        v1 = getattr(pin_f, name)[0]
        assert abs(v0 - v1) < 1e-3 * abs(v1), name
