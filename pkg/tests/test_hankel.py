import math

import numpy as np
import pytest
from scipy import special

from nondegen import hankel as H
from nondegen import profiles as P


def test_bessel_j1_accuracy():
    x = np.linspace(0.0, 80.0, 30001)
    dev = np.abs(H.bessel_j1(x) - special.j1(x))
    assert dev.max() < 1e-12
    assert H.bessel_j1(0.0) == 0.0
    xs = np.array([1e-6, 1e-4, 1e-2])
    assert np.allclose(H.bessel_j1(xs) / xs, 0.5, atol=1e-4)


def test_j1_first_zero():
    z = H.j1_zero()
    assert abs(z - special.jn_zeros(1, 1)[0]) < 1e-11


def test_j1_wronskian_identity():
    # (J1'(x) J0 - type) identity via finite differences:
    # J1'(x) = J0(x) - J1(x)/x, checked with central differences
    x = np.linspace(0.5, 30.0, 500)
    h = 1e-4
    d = (H.bessel_j1(x + h) - H.bessel_j1(x - h)) / (2 * h)
    rhs = special.j0(x) - H.bessel_j1(x) / x
    assert np.max(np.abs(d - rhs)) < 1e-8


def test_bessel_k_accuracy():
    x = np.geomspace(1e-3, 60.0, 4000)
    relk0 = np.abs(H.bessel_k0(x) - special.k0(x)) / special.k0(x)
    relk1 = np.abs(H.bessel_k1(x) - special.k1(x)) / special.k1(x)
    assert relk0.max() < 5e-8
    assert relk1.max() < 5e-8


def test_gaussian_roundtrip(cfg):
    grid = np.geomspace(1e-3, 30.0, 1200)
    f = P.RadialFunction(grid, np.exp(-grid**2), P.Tail(25.0, ()))
    xi = np.geomspace(1e-3, 18.0, 260)
    F = H.hankel_forward(f, xi)
    back = H.hankel_inverse(F, grid)
    num = np.trapezoid((back.values - f.values) ** 2 * grid**3, grid)
    den = np.trapezoid(f.values**2 * grid**3, grid)
    assert math.sqrt(num / den) < 1e-6


def test_plancherel_random_bumps(rng):
    # off-center bumps make F oscillate in xi at rate ~ bump center, so
    # the frequency grid is linear
    grid = np.geomspace(1e-3, 40.0, 2401)
    xi = np.linspace(0.02, 24.0, 640)
    worst = 0.0
    for _ in range(20):
        a = rng.uniform(2.0, 16.0)
        w = rng.uniform(4.0, 14.0)
        s = rng.uniform(0.5, 1.5)
        f = P.RadialFunction(grid, s * np.exp(-(grid**2 - a) ** 2 / w),
                             P.Tail(35.0, ()))
        F = H.hankel_forward(f, xi)
        lhs, _ = P.radial_integral(f * f)
        rhs = H.plancherel_norm2(F) + lhs * (0.02 / 24.0) ** 4
        worst = max(worst, abs(lhs - rhs) / lhs)
    assert worst < 1e-4


def test_w2_transform_positive_and_oracle(cfg):
    # unit-scale profile (1+R^2)^(-2); closed form K0(xi)/2
    grid = np.geomspace(1e-4, 1e3, 2401)
    tail = P.Tail(200.0, tuple(
        (2 * j, 0, (-1.0) ** j * (j - 1)) for j in range(2, 8)))
    f = P.RadialFunction(grid, 1.0 / (1.0 + grid**2) ** 2, tail)
    xi = np.geomspace(0.02, 4.0, 50)
    F, err = H.hankel_forward(f, xi, with_error=True)
    assert np.all(F.coeffs > 0)
    assert np.all(F.coeffs > 10 * err)
    oracle = H.LaplaceOracleW2(calibration_value=float(
        H.hankel_forward(f, np.array([1.0])).coeffs[0]))
    rel = np.abs(F.coeffs - oracle(xi)) / np.abs(oracle(xi))
    assert rel.max() < 1e-5
    # calibration constant reproduces the analytic 1/2
    assert abs(oracle.cal - 0.5) < 1e-6


def test_laplace_double_integral_reduction():
    for t in (0.3, 1.0, 2.5):
        v = H.laplace_double_integral(t)
        assert abs(v - 0.5 * H.bessel_k0(t)) < 1e-9
    # monotone decay beyond the scan
    ts = np.linspace(4.0, 12.0, 20)
    vals = 0.5 * H.bessel_k0(ts)
    assert np.all(np.diff(vals) < 0)


def test_nv2_root(cfg):
    g_lo, g_hi = H.nv2_function(0.5), H.nv2_function(1.0)
    assert g_lo < 0 < g_hi
    root, bracket, margin, root_W = H.root_tauhat_star()
    assert bracket == (0.5, 1.0)
    assert abs(H.nv2_function(root)) < 1e-12
    assert margin > 0
    assert abs(root_W - root / math.sqrt(2.0)) < 1e-14
    # phi'' phi - phi'^2 > 0 equivalent: K1 > K0
    eta = np.geomspace(1e-3, 400.0, 200)
    assert np.all(H.nv2_cs_margin(eta) > 0)


def test_nv2_log_blowup_at_origin():
    # phi'(0+) = -2 K0(0+) blows up logarithmically
    ts = np.array([1e-3, 1e-4, 1e-5])
    vals = H.nv2_function(ts)
    assert np.all(np.diff(vals) < 0)            # more negative as t -> 0
    ratio = vals / np.log(ts)
    assert np.all(ratio > 0.5) and np.all(ratio < 2.0)


def test_w_frame_transforms_match_quadrature(cfg):
    W = P.profile_W(cfg)
    LW = P.profile_LambdaW(cfg)
    xi = np.array([0.3, 0.8, 1.6])
    F1 = H.hankel_forward(W * W, xi)
    assert np.allclose(F1.coeffs, H.transform_W2_exact(xi), rtol=0,
                       atol=3e-6 * np.max(np.abs(F1.coeffs)))
    F2 = H.hankel_forward(LW * W, xi)
    assert np.allclose(F2.coeffs, H.transform_LWW_exact(xi), rtol=0,
                       atol=3e-6 * np.max(np.abs(F2.coeffs)))
    # root of the W-frame transform sits at root/sqrt(2)
    _, _, _, root_W = H.root_tauhat_star()
    assert abs(H.transform_LWW_exact(root_W)) < 1e-10


def test_scaled_transform_derivative_identity():
    # F((2 + R d_R) f) = -2 F - xi F' checked by finite differences
    xi = np.linspace(0.3, 2.0, 12)
    h = 1e-6
    Fp = (H.transform_LWW_exact(xi + h) - H.transform_LWW_exact(xi - h)) \
        / (2 * h)
    lhs = H.transform_scaled_LWW_exact(xi)
    rhs = -2.0 * H.transform_LWW_exact(xi) - xi * Fp
    assert np.max(np.abs(lhs - rhs)) < 1e-4


def test_intertwining_identity(rng):
    # <(R d_R) f, phi(.;xi)> = -(xi d_xi + 4) F(f)(xi) on test bumps
    grid = np.geomspace(1e-3, 40.0, 1600)
    a, w = 9.0, 16.0
    f = P.RadialFunction(grid, np.exp(-(grid**2 - a) ** 2 / w),
                         P.Tail(35.0, ()))
    df_vals = f.values * (-2 * (grid**2 - a) / w) * 2 * grid**2
    df = P.RadialFunction(grid, df_vals, P.Tail(35.0, ()))
    xi = np.geomspace(0.3, 2.5, 160)
    F = H.hankel_forward(f, xi).coeffs
    Fd = H.hankel_forward(df, xi).coeffs
    from nondegen.propagators import _fd4_axis0
    lx = np.log(xi)
    hx = lx[1] - lx[0]
    dF = _fd4_axis0(F.astype(complex), hx).real
    resid = Fd + dF + 4.0 * F
    core = slice(8, -8)
    assert np.max(np.abs(resid[core])) < 1e-4 * np.max(np.abs(F))
