"""Desk-scale propagators and transference checks.

Each propagator is validated by a finite-difference residual oracle
against the PDE it claims to solve:

* the frequency-side flow of the scaled Schroedinger model,
  -i(d_tau - theta dloglam - dloglam xi d_xi) z - xi^2 z = G,
  theta = 2 (the phase-modulation exponent is switched off);
* the wave flow in wave time with the dilation-corrected d'Alembertian,
  -(d_t + b R d_R)^2 n - b (d_t + b R d_R) n + Delta n = lam^{-2} F,
  b = dloglam/dtautilde.

Sources are compactly supported inside the horizon; "vanishing at the
final slice" holds by construction.  The temporal mollifier is an exact
Fourier multiplier on sampled exponentials up to quadrature accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quad import _gl, oscillatory_integral, panel_edges
from .config import NumericsConfig
from . import hankel, profiles, spectral


# ---------------------------------------------------------------------------
# scaled Schroedinger propagator on the frequency side
# ---------------------------------------------------------------------------

@dataclass
class PropagatorField:
    t: np.ndarray            # tau or tautilde grid
    xi: np.ndarray
    values: np.ndarray       # shape (len(t), len(xi)), complex
    label: str = ""

    def final_slice_max(self) -> float:
        return float(np.max(np.abs(self.values[-1])))

    def to_text(self) -> str:
        lines = ["# time  xi  Re  Im"]
        for i, tv in enumerate(self.t):
            for j, xv in enumerate(self.xi):
                z = self.values[i, j]
                lines.append(f"{tv!r} {xv!r} {z.real!r} {z.imag!r}")
        return "\n".join(lines) + "\n"


def schrodinger_S(G, cfg: NumericsConfig, n_t: int = 161,
                  xi: np.ndarray | None = None,
                  frozen_lambda: bool = False) -> PropagatorField:
    """z(tau, xi) = -i int_tau^T (lam(tau)/lam(s))^2 e^{i lam^2(tau) xi^2
    (t(s)-t(tau))} G(s, lam(tau)/lam(s) xi) ds.

    G must broadcast over (sigma, xi) arrays and vanish near the horizon
    ends.  With frozen_lambda the dilation weights are switched off and the
    phase becomes xi^2 (tau - s), the constant-coefficient model.
    """
    nu = cfg.nu
    taus = np.linspace(cfg.tau_star, cfg.T_max, n_t)
    if xi is None:
        xi = np.geomspace(0.05, 1.2, 160)
    vals = np.zeros((n_t, len(xi)), dtype=complex)
    gx, gw = _gl(8)
    xi2max = float(np.max(xi)) ** 2
    for i, tau in enumerate(taus):
        if tau >= cfg.T_max:
            continue
        edges = panel_edges(tau, cfg.T_max, xi2max, per_period=2.0)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        sig = (mids[:, None] + half[:, None] * gx[None, :]).ravel()
        wts = (half[:, None] * gw[None, :]).ravel()
        if frozen_lambda:
            ratio = np.ones_like(sig)
            dt = tau - sig
            lam2 = 1.0
        else:
            ratio = profiles.lam_of_tau(tau, nu) / profiles.lam_of_tau(sig, nu)
            dt = profiles.t_of_tau(sig, nu) - profiles.t_of_tau(tau, nu)
            lam2 = profiles.lam_of_tau(tau, nu) ** 2
        phase = np.exp(1j * lam2 * np.outer(dt, xi**2))
        src = G(sig[:, None], ratio[:, None] * xi[None, :])
        vals[i] = -1j * ((ratio**2 * wts)[:, None]
                         * phase * src).sum(axis=0)
    return PropagatorField(taus, np.asarray(xi, dtype=float), vals,
                           "schrodinger")


def schrodinger_residual(field: PropagatorField, G,
                         cfg: NumericsConfig,
                         frozen_lambda: bool = False):
    """Sup-norm of the model-equation residual over the interior grid."""
    taus, xi, z = field.t, field.xi, field.values
    dt = taus[1] - taus[0]
    dz_dt = _fd4_axis0(z, dt)
    lx = np.log(xi)
    hx = lx[1] - lx[0]
    xidz = _fd4_axis0(z.T, hx).T          # xi d_xi on the log grid
    if frozen_lambda:
        b = np.zeros_like(taus)
    else:
        b = profiles.dloglam_dtau(taus, cfg.nu)
    lhs = -1j * (dz_dt - 2.0 * b[:, None] * z - b[:, None] * xidz) \
        - xi[None, :] ** 2 * z
    src = G(taus[:, None], xi[None, :]) * np.ones_like(z)
    res = lhs - src
    core = (slice(3, -3), slice(3, -3))
    return float(np.max(np.abs(res[core]))), float(np.max(np.abs(src)))


def _fd4_axis0(z, h):
    out = np.empty_like(z)
    out[2:-2] = (z[:-4] - 8 * z[1:-3] + 8 * z[3:-1] - z[4:]) / (12 * h)
    out[:2] = (z[1:3] - z[0:2]) / h
    out[-2:] = (z[-2:] - z[-3:-1]) / h
    return out


# ---------------------------------------------------------------------------
# wave propagator in wave time
# ---------------------------------------------------------------------------

def wave_U(F_hat, cfg: NumericsConfig, n_t: int = 161,
           xi: np.ndarray | None = None,
           frozen_lambda: bool = False) -> PropagatorField:
    """Frequency-side wave flow x(tautilde, xi).

    x = -int_tt^T (lam^3(tt)/lam^3(s)) sin[lam(tt) xi int_tt^s lam^{-1}]/xi
        lam^{-2}(s) F_hat(s, lam(tt)/lam(s) xi) ds;
    the overall sign makes the dilation-corrected wave equation hold with
    source +lam^{-2} F (finite-difference oracle), opposite to the sign
    displayed in the source construction.
    """
    nu = cfg.nu
    tts = np.linspace(cfg.tau_star, cfg.T_max, n_t)
    if xi is None:
        xi = np.geomspace(0.05, 1.2, 160)
    vals = np.zeros((n_t, len(xi)), dtype=complex)
    gx, gw = _gl(8)
    ximax = float(np.max(xi))
    for i, tt in enumerate(tts):
        if tt >= cfg.T_max:
            continue
        edges = panel_edges(tt, cfg.T_max, ximax, per_period=2.0)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        sig = (mids[:, None] + half[:, None] * gx[None, :]).ravel()
        wts = (half[:, None] * gw[None, :]).ravel()
        if frozen_lambda:
            age = sig - tt
            ratio3 = np.ones_like(sig)
            ratio = np.ones_like(sig)
            lam_s = np.ones_like(sig)
        else:
            lam_tt = profiles.lam_of_tautilde(tt, nu)
            lam_s = profiles.lam_of_tautilde(sig, nu)
            age = lam_tt * (_t_of_tt(tt, nu) - _t_of_tt(sig, nu))
            ratio3 = (lam_tt / lam_s) ** 3
            ratio = lam_tt / lam_s
        kern = np.sin(np.outer(age, xi)) / xi[None, :]
        src = F_hat(sig[:, None], ratio[:, None] * xi[None, :])
        vals[i] = -((ratio3 * wts / lam_s**2)[:, None] * kern * src).sum(axis=0)
    return PropagatorField(tts, np.asarray(xi, dtype=float), vals, "wave")


def _t_of_tt(tt, nu):
    return ((nu - 0.5) * np.asarray(tt)) ** (-1.0 / (nu - 0.5))


def wave_residual(field: PropagatorField, F_hat, cfg: NumericsConfig,
                  frozen_lambda: bool = False):
    """Residual of the frequency-side wave equation.

    D^2 x + b D x + xi^2 x = -lam^{-2} F_hat with the dilation operator
    D = d_tt - b (xi d_xi + 4), b = dloglam/dtt.
    """
    tts, xi, x = field.t, field.xi, field.values
    dt = tts[1] - tts[0]
    lx = np.log(xi)
    hx = lx[1] - lx[0]

    def D(z):
        dz = _fd4_axis0(z, dt)
        if frozen_lambda:
            return dz
        xidz = _fd4_axis0(z.T, hx).T
        b = profiles.dloglam_dtautilde(tts, cfg.nu)
        return dz - b[:, None] * (xidz + 4.0 * z)

    if frozen_lambda:
        b = np.zeros_like(tts)
        lam = np.ones_like(tts)
    else:
        b = profiles.dloglam_dtautilde(tts, cfg.nu)
        lam = profiles.lam_of_tautilde(tts, cfg.nu)
    lhs = D(D(x)) + b[:, None] * D(x) + xi[None, :] ** 2 * x
    src = -F_hat(tts[:, None], xi[None, :]) / lam[:, None] ** 2 \
        * np.ones_like(x)
    res = lhs - src
    core = (slice(4, -4), slice(4, -4))
    return float(np.max(np.abs(res[core]))), float(np.max(np.abs(src)))


def wave_physical(field: PropagatorField, grid: np.ndarray) -> np.ndarray:
    """n(t, R) by free synthesis of the frequency field (rho = xi^3).

    One fixed Gauss-Legendre frequency quadrature shared by all time
    slices: n = x_spline(nodes) . weights x kernel matrix.
    """
    from scipy.interpolate import InterpolatedUnivariateSpline

    grid = np.asarray(grid, dtype=float)
    lx = np.log(field.xi)
    edges = panel_edges(field.xi[0], field.xi[-1],
                        float(grid.max()), per_period=2.0)
    gx, gw = _gl(8)
    mids = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    nodes = (mids[:, None] + half[:, None] * gx[None, :]).ravel()
    wts = (half[:, None] * gw[None, :]).ravel()
    z = np.maximum(np.outer(grid, nodes), 1e-12)
    kern = (hankel.bessel_j1(z.ravel()).reshape(z.shape) / z) \
        * (wts * nodes**3)[None, :]
    out = np.zeros((len(field.t), len(grid)), dtype=complex)
    for i in range(len(field.t)):
        re = InterpolatedUnivariateSpline(lx, field.values[i].real, k=3)
        im = InterpolatedUnivariateSpline(lx, field.values[i].imag, k=3)
        xv = re(np.log(nodes)) + 1j * im(np.log(nodes))
        out[i] = kern @ xv
    return out


def wave_physical_residual(field: PropagatorField, F_hat,
                           cfg: NumericsConfig, n_R: int = 280,
                           R_span=(0.3, 8.0)):
    """Residual of the physical wave equation in (tautilde, R):

    -(d_t + b R d_R)^2 n - b (d_t + b R d_R) n + Delta n = lam^{-2} F,
    with n synthesized from the frequency field and F synthesized from the
    frequency source on the same quadrature.
    """
    R = np.geomspace(R_span[0], R_span[1], n_R)
    n = wave_physical(field, R)
    src_field = PropagatorField(field.t, field.xi,
                                F_hat(field.t[:, None], field.xi[None, :])
                                * np.ones((len(field.t), len(field.xi)),
                                          dtype=complex))
    F_phys = wave_physical(src_field, R)

    tts = field.t
    dt = tts[1] - tts[0]
    lxr = np.log(R)
    hr = lxr[1] - lxr[0]
    b = profiles.dloglam_dtautilde(tts, cfg.nu)
    lam = profiles.lam_of_tautilde(tts, cfg.nu)

    def Dop(z):
        dz = _fd4_axis0(z, dt)
        rdz = _fd4_axis0(z.T, hr).T      # R d_R via log grid
        return dz + b[:, None] * rdz

    d1 = _fd4_axis0(n.T, hr).T
    d2 = _fd4_axis0(d1.T, hr).T          # second log derivative
    lap = (d2 + 2.0 * d1) / R[None, :] ** 2   # d_RR + 3/R d_R in log coords
    lhs = -Dop(Dop(n)) - b[:, None] * Dop(n) + lap
    res = lhs - F_phys / lam[:, None] ** 2
    core = (slice(4, -4), slice(4, -4))
    return float(np.max(np.abs(res[core]))), float(np.max(np.abs(F_phys)))


# ---------------------------------------------------------------------------
# temporal mollifier
# ---------------------------------------------------------------------------

class TemporalMollifier:
    """Q_{<a} f(s) = int a chk(a(s - u)) f(u) du with a concrete bump chi.

    chi is the symmetric C^oo cutoff equal to 1 on [-1, 1] and supported
    on [-2, 2]; chk is its (inverse) Fourier transform, precomputed on a
    grid and spline-interpolated.
    """

    def __init__(self, x_max: float = 60.0, n: int = 4001):
        from .multipliers import _smoothstep
        self.chi = lambda w: 1.0 - _smoothstep(np.abs(np.asarray(w)) - 1.0)
        xs = np.linspace(0.0, x_max, n)
        gx, gw = _gl(10)
        edges = np.linspace(0.0, 2.0, 400)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        wn = (mids[:, None] + half[:, None] * gx[None, :]).ravel()
        ww = (half[:, None] * gw[None, :]).ravel()
        cw = self.chi(wn) * ww
        # chk(x) = (1/2pi) int chi(w) e^{iwx} dw = (1/pi) int_0^2 chi cos(wx)
        vals = (cw[None, :] * np.cos(np.outer(xs, wn))).sum(axis=1) / math.pi
        from scipy.interpolate import InterpolatedUnivariateSpline
        self._spl = InterpolatedUnivariateSpline(xs, vals, k=3, ext=1)
        self.x_max = x_max

    def kernel(self, x):
        return self._spl(np.abs(np.asarray(x, dtype=float)))

    def apply(self, f, a: float, s_values):
        """Q_{<a} f at the given times; f must accept arrays."""
        s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
        gx, gw = _gl(10)
        half_width = self.x_max / a
        out = np.empty(len(s_values), dtype=complex)
        edges = np.linspace(-half_width, half_width, 600)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        u = (mids[:, None] + half[:, None] * gx[None, :]).ravel()
        wq = (half[:, None] * gw[None, :]).ravel()
        for i, s in enumerate(s_values):
            out[i] = np.sum(wq * a * self.kernel(a * u) * f(s - u))
        return out


def q_mollifier(f, a: float, s_values, moll: TemporalMollifier | None = None):
    moll = moll or TemporalMollifier()
    return moll.apply(f, a, s_values)


# ---------------------------------------------------------------------------
# transference operator checks
# ---------------------------------------------------------------------------

def apply_transference(f, dRf, transform, xi_grid: np.ndarray,
                       shift: float = 4.0):
    """K f^ = F((R d_R) f) + (xi d_xi) F(f) + shift * F(f).

    `transform` maps a radial callable to its coefficients on xi_grid (free
    or distorted); the xi-derivative is taken by finite differences on the
    log grid.  The shift defaults to the value that annihilates the free
    operator exactly (the dilation identity gives 4 in this normalization;
    an audit test pins it down empirically).
    """
    F_f = transform(f, xi_grid)
    F_df = transform(dRf, xi_grid)
    lx = np.log(xi_grid)
    hx = lx[1] - lx[0]
    xidF = _fd4_axis0(np.asarray(F_f, dtype=complex), hx)
    return F_df + xidF + shift * np.asarray(F_f)


def free_transform(f, xi_grid):
    grid = np.geomspace(1e-4, 60.0, 1600)
    rf = profiles.RadialFunction(grid, f(grid), profiles.Tail(50.0, ()))
    return hankel.hankel_forward(rf, xi_grid).coeffs


def distorted_transform_callable(sd, support: float = 60.0):
    def transform(f, xi_grid):
        grid = np.geomspace(1e-4, support, 1600)
        rf = profiles.RadialFunction(grid, f(grid),
                                     profiles.Tail(support * 0.9, ()))
        return spectral.distorted_transform(rf, sd, xi_grid)
    return transform


def pseudo_kernel(f, xi: float, eta: float, lam_cut: float,
                  sd) -> float:
    """F~(xi, eta) = <phi(.;xi), chi_{<~lam} f phi(.;eta)> by quadrature."""
    from .fredholm import smooth_bump
    cfg = sd.solver.cfg
    R_hi = 2.2 * lam_cut
    fn = lambda R: (smooth_bump(R, lam_cut, 2.0 * lam_cut) * f(R)
                    * sd.solver.eval_regular(xi, R, reach=R_hi * 1.01)
                    * sd.solver.eval_regular(eta, R, reach=R_hi * 1.01) * R**3)
    val, _ = oscillatory_integral(fn, cfg.R_min, R_hi, xi + eta)
    return val
