import math

import numpy as np
import pytest

from nondegen import profiles as P
from nondegen.config import NumericsConfig


@pytest.fixture(scope="module")
def W(cfg):
    return P.profile_W(cfg)


@pytest.fixture(scope="module")
def LW(cfg):
    return P.profile_LambdaW(cfg)


def test_closed_forms_at_nodes(W, LW):
    R = W.grid
    assert np.allclose(W.values, 1.0 / (1.0 + R**2 / 8.0), rtol=0, atol=1e-15)
    exact = (1.0 - R**2 / 8.0) / (1.0 + R**2 / 8.0) ** 2
    assert np.allclose(LW.values, exact, rtol=0, atol=1e-15)
    assert P.eval_W(0.0) == 1.0
    assert P.eval_W(math.sqrt(8.0)) == 0.5
    assert P.eval_LambdaW(0.0) == 1.0


def test_far_field_coefficients(W, LW):
    # R^2 W -> 8 and R^2 LambdaW -> -8
    assert abs(W.c2 - 8.0) < 1e-14
    assert abs(LW.c2 + 8.0) < 1e-14
    W.validate_tail(1e-8)
    LW.validate_tail(1e-8)


def test_radial_integrals_closed_forms(W, LW):
    v, e = P.radial_integral(W * W * W * W)
    assert abs(v - 16.0 / 3.0) < 1e-8 * 16.0 / 3.0
    assert e < 1e-10
    v, e = P.radial_integral(W * W * W)
    assert abs(v - 16.0) < 1e-8 * 16.0
    v, e = P.radial_integral(LW * W * W * W)
    assert abs(v) < 1e-8          # scaling identity


def test_divergent_tail_flagged(W):
    with pytest.raises(P.DivergentTailError):
        P.radial_integral(W * W)  # logarithmic divergence
    with pytest.raises(P.DivergentTailError):
        P.radial_integral(W)      # quadratic divergence


def test_ground_state_equations(W, LW, cfg):
    res = P.apply_Delta(W).values + (W * W * W).values
    est = P.delta_truncation_estimate(W)
    assert np.all(np.abs(res) <= 10.0 * est)
    res2 = P.apply_Delta(LW).values + 3.0 * (W * W * LW).values
    est2 = P.delta_truncation_estimate(LW)
    assert np.all(np.abs(res2) <= 10.0 * est2)


def test_invdelta_closed_form(W, LW):
    u = P.apply_invDelta(LW * W)
    R = u.grid
    exact = 16.0 * (-R**2 + (R**2 + 8) * np.log1p(R**2 / 8.0)) \
        / (R**2 * (R**2 + 8))
    mask = R > 1e-2   # the closed form cancels catastrophically below
    assert np.max(np.abs(u.values - exact)[mask]) < 1e-9
    v, _ = P.radial_integral(u * W * W)
    assert abs(v - 32.0) < 1e-6


def test_invdelta_roundtrip_on_bump(cfg, W):
    R = W.grid
    bump = P.RadialFunction(R, np.exp(-(R**2 - 6.0) ** 2 / 8.0),
                            P.Tail(cfg.R_tail, ()))
    back = P.apply_invDelta(P.apply_Delta(bump))
    rel = np.max(np.abs(back.values - bump.values)) / np.max(bump.values)
    assert rel < 1e-6


def test_invgrad_scaling_oracle(cfg, W):
    # int (|grad|^{-1} W^2)^2 = -int Delta^{-1}(W^2) W^2 = 64
    g = P.apply_invGrad(W * W)
    val = np.trapezoid(g.values**2 * g.grid**3, g.grid)
    assert abs(val - 64.0) < 0.05


def test_time_maps_example_and_identities(rng):
    tm = P.time_maps(1.0, 2.0)
    assert tm.lam == 1.0 and tm.tau == 0.25
    assert abs(tm.tautilde - 2.0 / 3.0) < 1e-15
    for _ in range(100):
        t = float(rng.uniform(0.05, 3.0))
        nu = float(rng.uniform(1.2, 12.0))
        m = P.time_maps(t, nu)
        assert math.isclose(m.tau, t**(-2 * nu) / (2 * nu), rel_tol=1e-14)
        assert math.isclose(m.tautilde, t**(0.5 - nu) / (nu - 0.5),
                            rel_tol=1e-14)
        const = m.tautilde * m.tau ** (-0.5 + 1.0 / (4 * nu))
        ref = P.time_maps(1.0, nu)
        cref = ref.tautilde * ref.tau ** (-0.5 + 1.0 / (4 * nu))
        assert math.isclose(const, cref, rel_tol=1e-12)
    with pytest.raises(ValueError):
        P.time_maps(-1.0, 2.0)
    # tau -> infinity as t -> 0+
    assert P.time_maps(1e-6, 2.0).tau > P.time_maps(1e-3, 2.0).tau


def test_lambda_of_tau_consistency():
    nu = 8.0
    tm = P.time_maps(0.7, nu)
    assert math.isclose(P.lam_of_tau(tm.tau, nu), tm.lam, rel_tol=1e-13)
    assert math.isclose(P.t_of_tau(tm.tau, nu), 0.7, rel_tol=1e-13)
    assert math.isclose(P.lam_of_tautilde(tm.tautilde, nu), tm.lam,
                        rel_tol=1e-13)


def test_correctors(cfg):
    phi, psi = P.solve_correctors(cfg)
    # decaying combinations found numerically: (-1/2, -1/2) and (1/2, 1/2)
    assert abs(phi.a + 0.5) < 1e-6 and abs(phi.b + 0.5) < 1e-6
    assert abs(psi.a - 0.5) < 1e-6 and abs(psi.b - 0.5) < 1e-6
    assert phi.residual < 1e-6 and psi.residual < 1e-6
    assert abs(phi.c2) < 1e-8 and abs(psi.c2) < 1e-8
    # quoted combinations: exact ODE solutions, but with R^-2 tails
    assert phi.paper_residual < 1e-6
    assert abs(phi.paper_c2 + 3.5) < 1e-6
    assert abs(psi.paper_c2 - 112.0) < 1e-4
    # solvability precondition <LambdaW W^3> = 0 already checked above


def test_solvability_precondition(W, LW):
    v, e = P.radial_integral(LW * W * W * W)
    assert abs(v) < 10 * max(e, 1e-12)


def test_kernel_identities(cfg, W, LW):
    # Ltilde(LambdaW) = 0 and L(W) = 0 by finite differences
    LtLW = (-1.0) * P.apply_Delta(LW) - 3.0 * (W * W * LW)
    est = P.delta_truncation_estimate(LW)
    assert np.all(np.abs(LtLW.values) <= 10 * est + 3e-4 * np.abs(LW.values))
    LWk = (-1.0) * P.apply_Delta(W) - 1.0 * (W * W * W)
    estW = P.delta_truncation_estimate(W)
    assert np.all(np.abs(LWk.values) <= 10 * estW + 1e-12)


def test_serialization_roundtrip(W):
    text = W.to_text()
    back = P.RadialFunction.from_text(text)
    assert np.allclose(back.grid, W.grid)
    assert np.allclose(back.values, W.values)
    assert back.tail is not None
    assert abs(back.tail.c2 - W.tail.c2) < 1e-12
    assert abs(back.tail.c4 - W.tail.c4) < 1e-12
