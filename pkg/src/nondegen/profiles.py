"""Ground-state profiles, radial calculus, and time maps.

Conventions used throughout the package:

* the bulk profile is W(R) = (1 + R^2/8)^(-1) on radial R^4, solving
  Delta W + W^3 = 0 with Delta = d_RR + (3/R) d_R;
* Lambda W = W + R W' = (1 - R^2/8) (1 + R^2/8)^(-2) is the scaling mode,
  solving Delta(Lambda W) + 3 W^2 Lambda W = 0;
* Delta^{-1} always means the inverse that decays at infinity;
* all pairings are <f, g> = int_0^oo f g R^3 dR.

Radial profiles live on a geometrically graded grid (uniform in log R) and
carry an analytic far-field expansion sum_j c_j R^(-p_j) log^k_j(R), which
the quadrature uses to close integrals over [R_max, oo) exactly.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .config import NumericsConfig


class DivergentTailError(Exception):
    """Raised when int f R^3 dR diverges because f decays like R^(-4) or slower."""


# ---------------------------------------------------------------------------
# far-field tails: sum of c * R^(-p) * log(R)^k terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tail:
    """Far-field expansion valid for R >= start."""
    start: float
    terms: tuple[tuple[int, int, float], ...]  # (power p, log exponent k, coeff)

    def __call__(self, R):
        R = np.asarray(R, dtype=float)
        out = np.zeros_like(R)
        lg = np.log(R)
        for p, k, c in self.terms:
            out += c * R**(-p) * lg**k
        return out

    def coeff(self, p: int, k: int = 0) -> float:
        return sum(c for pp, kk, c in self.terms if pp == p and kk == k)

    @property
    def c2(self) -> float:
        return self.coeff(2)

    @property
    def c4(self) -> float:
        return self.coeff(4)

    def scaled(self, s: float) -> "Tail":
        return Tail(self.start, tuple((p, k, s * c) for p, k, c in self.terms))

    def __add__(self, other: "Tail") -> "Tail":
        merged: dict[tuple[int, int], float] = {}
        for p, k, c in self.terms + other.terms:
            merged[(p, k)] = merged.get((p, k), 0.0) + c
        terms = tuple((p, k, c) for (p, k), c in sorted(merged.items()) if c != 0.0)
        return Tail(max(self.start, other.start), terms)

    def __mul__(self, other: "Tail") -> "Tail":
        merged: dict[tuple[int, int], float] = {}
        for p1, k1, c1 in self.terms:
            for p2, k2, c2 in other.terms:
                if p1 + p2 > _TAIL_MAX_POWER:
                    continue
                key = (p1 + p2, k1 + k2)
                merged[key] = merged.get(key, 0.0) + c1 * c2
        terms = tuple((p, k, c) for (p, k), c in sorted(merged.items()) if c != 0.0)
        return Tail(max(self.start, other.start), terms)

    def delta(self) -> "Tail":
        """Tail of Delta f: Delta(R^-p log^k) for k <= 1."""
        merged: dict[tuple[int, int], float] = {}

        def add(p, k, c):
            if c != 0.0 and p <= _TAIL_MAX_POWER:
                merged[(p, k)] = merged.get((p, k), 0.0) + c

        for p, k, c in self.terms:
            if k == 0:
                add(p + 2, 0, c * p * (p - 2))
            elif k == 1:
                # Delta(R^-p log R) = p(p-2) R^-(p+2) log R + (2p-2) R^-(p+2)
                add(p + 2, 1, c * p * (p - 2))
                add(p + 2, 0, c * (2 * p - 2))
            else:
                raise NotImplementedError("tail log powers above 1 unsupported")
        terms = tuple((p, k, c) for (p, k), c in sorted(merged.items()) if c != 0.0)
        return Tail(self.start, terms)

    def integral_R3_beyond(self, R0: float) -> float:
        """int_{R0}^oo tail(R) R^3 dR, exact term by term; raises if divergent."""
        total = 0.0
        for p, k, c in self.terms:
            if c == 0.0:
                continue
            if p <= 4:
                raise DivergentTailError(
                    f"tail term R^-{p} log^{k} gives a divergent radial integral")
            a = p - 4
            if k == 0:
                total += c * R0**(-a) / a
            elif k == 1:
                total += c * R0**(-a) * (math.log(R0) / a + 1.0 / a**2)
            else:
                raise NotImplementedError
        return total


_TAIL_MAX_POWER = 14

# power series of W in 1/R^2: W = 8 R^-2 - 64 R^-4 + 512 R^-6 - ...
W_TAIL_TERMS = tuple((2 * j, 0, (-1.0)**(j + 1) * 8.0**j)
                     for j in range(1, _TAIL_MAX_POWER // 2 + 1))
# Lambda W = -8 R^-2 + 192 R^-4 - 2560 R^-6 + 28672 R^-8 - ...
LAMBDAW_TAIL_TERMS = tuple(
    (2 * j, 0, (-1.0)**j * (2 * j - 1) * 8.0**j)
    for j in range(1, _TAIL_MAX_POWER // 2 + 1))


def W_tail(start: float) -> Tail:
    return Tail(start, W_TAIL_TERMS)


def LambdaW_tail(start: float) -> Tail:
    return Tail(start, LAMBDAW_TAIL_TERMS)


# ---------------------------------------------------------------------------
# sampled radial functions
# ---------------------------------------------------------------------------

@dataclass
class RadialFunction:
    grid: np.ndarray
    values: np.ndarray
    tail: Tail | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ValueError("grid/values shape mismatch")
        if self.grid[0] <= 0 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing with first node > 0")

    def validate_tail(self, rel_tol: float = 1e-6) -> float:
        """Relative mismatch between samples and tail at the matching radius."""
        if self.tail is None:
            return 0.0
        i = int(np.searchsorted(self.grid, self.tail.start))
        i = min(i, len(self.grid) - 1)
        sample = self.values[i]
        model = self.tail(self.grid[i])
        scale = max(abs(sample), abs(model), 1e-300)
        mismatch = abs(sample - model) / scale
        if mismatch > rel_tol:
            raise ValueError(f"tail mismatch {mismatch:.2e} exceeds {rel_tol:.2e}")
        return float(mismatch)

    @property
    def c2(self) -> float:
        return 0.0 if self.tail is None else self.tail.c2

    @property
    def c4(self) -> float:
        return 0.0 if self.tail is None else self.tail.c4

    # pointwise algebra (same grid)
    def _check_same_grid(self, other):
        if self.grid.shape != other.grid.shape or not np.allclose(
                self.grid, other.grid, rtol=1e-14, atol=0):
            raise ValueError("operands live on different grids")

    def __add__(self, other):
        self._check_same_grid(other)
        tail = None
        if self.tail is not None and other.tail is not None:
            tail = self.tail + other.tail
        return RadialFunction(self.grid, self.values + other.values, tail)

    def __mul__(self, other):
        if np.isscalar(other):
            return RadialFunction(self.grid, self.values * other,
                                  None if self.tail is None else self.tail.scaled(other))
        self._check_same_grid(other)
        tail = None
        if self.tail is not None and other.tail is not None:
            tail = self.tail * other.tail
        return RadialFunction(self.grid, self.values * other.values, tail)

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write("# nondegen radial profile\n")
        if self.tail is not None:
            buf.write(f"# tail: start={float(self.tail.start)!r} "
                      f"c2={float(self.tail.c2)!r} c4={float(self.tail.c4)!r}\n")
            buf.write("# tail-terms: " + " ".join(
                f"{p}:{k}:{float(c)!r}" for p, k, c in self.tail.terms) + "\n")
        else:
            buf.write("# tail: none\n")
        complex_vals = np.iscomplexobj(self.values)
        for R, v in zip(self.grid, self.values):
            if complex_vals:
                buf.write(f"{float(R)!r} {float(v.real)!r} {float(v.imag)!r}\n")
            else:
                buf.write(f"{float(R)!r} {float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "RadialFunction":
        tail = None
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("# tail-terms:"):
                terms = []
                for item in line.split(":", 1)[1].split():
                    p, k, c = item.split(":")
                    terms.append((int(p), int(k), float(c)))
                tail = Tail(tail_start, tuple(terms))
            elif line.startswith("# tail: start="):
                tail_start = float(line.split("start=")[1].split()[0])
            elif line.startswith("#"):
                continue
            else:
                rows.append([float(x) for x in line.split()])
        arr = np.asarray(rows)
        values = arr[:, 1] if arr.shape[1] == 2 else arr[:, 1] + 1j * arr[:, 2]
        return cls(arr[:, 0], values, tail)


def make_grid(cfg: NumericsConfig) -> np.ndarray:
    """Geometric grid: n_grid nodes, uniform in log R, spanning [R_min, R_max]."""
    return np.geomspace(cfg.R_min, cfg.R_max, cfg.n_grid)


# ---------------------------------------------------------------------------
# closed-form profiles
# ---------------------------------------------------------------------------

def eval_W(R):
    R = np.asarray(R, dtype=float)
    return 1.0 / (1.0 + R**2 / 8.0)


def eval_LambdaW(R):
    R = np.asarray(R, dtype=float)
    return (1.0 - R**2 / 8.0) / (1.0 + R**2 / 8.0)**2


def profile_W(cfg: NumericsConfig) -> RadialFunction:
    grid = make_grid(cfg)
    return RadialFunction(grid, eval_W(grid), W_tail(cfg.R_tail))


def profile_LambdaW(cfg: NumericsConfig) -> RadialFunction:
    grid = make_grid(cfg)
    return RadialFunction(grid, eval_LambdaW(grid), LambdaW_tail(cfg.R_tail))


def sample(fn, grid, tail: Tail | None = None) -> RadialFunction:
    return RadialFunction(grid, fn(grid), tail)


# ---------------------------------------------------------------------------
# time maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingParams:
    """lambda(t) = t^(-1/2-nu); tau = int_t^oo lambda^2, tautilde = int_t^oo lambda."""
    nu: float
    t: float
    lam: float
    tau: float
    tautilde: float


def time_maps(t: float, nu: float) -> ScalingParams:
    if t <= 0:
        raise ValueError("t must be positive")
    if nu <= 1:
        raise ValueError("nu must exceed 1")
    lam = t**(-0.5 - nu)
    tau = t**(-2.0 * nu) / (2.0 * nu)
    tautilde = t**(0.5 - nu) / (nu - 0.5)
    return ScalingParams(nu, t, lam, tau, tautilde)


def t_of_tau(tau, nu):
    return (2.0 * nu * np.asarray(tau))**(-1.0 / (2.0 * nu))


def lam_of_tau(tau, nu):
    return (2.0 * nu * np.asarray(tau))**(0.5 + 1.0 / (4.0 * nu))


def dloglam_dtau(tau, nu):
    return (0.5 + 1.0 / (4.0 * nu)) / np.asarray(tau)


def tautilde_of_tau(tau, nu):
    return t_of_tau(tau, nu)**(0.5 - nu) / (nu - 0.5)


def lam_of_tautilde(tt, nu):
    return ((nu - 0.5) * np.asarray(tt))**((nu + 0.5) / (nu - 0.5))


def dloglam_dtautilde(tt, nu):
    return (nu + 0.5) / ((nu - 0.5) * np.asarray(tt))


# ---------------------------------------------------------------------------
# radial quadrature with tail closure
# ---------------------------------------------------------------------------

def _simpson_uniform(y, h):
    """Composite Simpson on a uniform grid (odd point count preferred)."""
    n = len(y)
    if n < 3:
        return 0.5 * h * (y[0] + y[-1]) * (n == 2)
    m = n if n % 2 == 1 else n - 1
    core = (h / 3.0) * (y[0] + y[m - 1] + 4.0 * y[1:m - 1:2].sum()
                        + 2.0 * y[2:m - 2:2].sum())
    if n % 2 == 0:  # trapezoid closes the last panel
        core = core + 0.5 * h * (y[-2] + y[-1])
    return core


def radial_integral(f: RadialFunction, *, tail_required: bool = True):
    """int_0^oo f R^3 dR with an explicit error estimate.

    The body integral runs over the grid in the log variable (the grid is
    geometric, hence uniform there); Richardson comparison against the
    half-resolution rule provides the error estimate.  The far field is
    closed with the analytic tail; a missing or too-slowly-decaying tail
    raises DivergentTailError.
    """
    R = f.grid
    x = np.log(R)
    h = x[1] - x[0]
    # coarse comparison grid anchored at the LAST node (where the R^3
    # weight makes omission costly), stepping back by 2
    idx_coarse = np.arange(len(R) - 1, -1, -2)[::-1]
    if not np.allclose(np.diff(x), h, rtol=1e-8):
        # fall back to trapezoid on the irregular grid
        body = np.trapezoid(f.values * R**3, R)
        err_body = abs(np.trapezoid(f.values[idx_coarse] * R[idx_coarse]**3,
                                    R[idx_coarse]) - body)
    else:
        g = f.values * R**4  # d(R)=R d(x)
        body = _simpson_uniform(g, h)
        coarse = _simpson_uniform(g[idx_coarse], 2.0 * h)
        err_body = abs(body - coarse) / 15.0 \
            + abs(_simpson_uniform(g[:idx_coarse[0] + 1], h))

    # head: 0..R_min, smooth integrand
    head = f.values[0] * R[0]**4 / 4.0
    err_head = abs(head) * 1e-2

    # tail: R_max..oo
    if f.tail is not None:
        tail_val = f.tail.integral_R3_beyond(R[-1])
        mismatch = abs(f.values[-1] - f.tail(R[-1]))
        p_min = min((p for p, k, c in f.tail.terms if c != 0.0),
                    default=_TAIL_MAX_POWER)
        err_tail = mismatch * R[-1]**4 / max(p_min - 2, 2)
    else:
        # no tail model: accept only if the sampled decay is clearly fast
        scale = max(abs(body), abs(np.max(np.abs(f.values))) * R[-1] ** 0,
                    1e-300)
        edge = abs(f.values[-1]) * R[-1]**4
        if tail_required and edge > 1e-10 * scale:
            raise DivergentTailError(
                "no tail model and the integrand has not decayed at R_max")
        tail_val = 0.0
        err_tail = edge
    value = head + body + tail_val
    error = err_head + err_body + err_tail + 1e-16 * abs(value)
    return value, error


def pairing(f: RadialFunction, g: RadialFunction):
    """<f, g> = int f g R^3 dR with error estimate."""
    return radial_integral(f * g)


# ---------------------------------------------------------------------------
# radial Laplacian and inverses
# ---------------------------------------------------------------------------

def _log_derivatives(values, x):
    """First and second derivative in the log variable.

    4th-order central stencils in the interior, 3rd-order one-sided /
    offset stencils at the two nodes on each edge.
    """
    h = x[1] - x[0]
    v = np.asarray(values)
    d1 = np.empty_like(v)
    d2 = np.empty_like(v)
    d1[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    d2[2:-2] = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1]
                - v[4:]) / (12 * h * h)
    d1[0] = (-11 * v[0] + 18 * v[1] - 9 * v[2] + 2 * v[3]) / (6 * h)
    d1[1] = (-2 * v[0] - 3 * v[1] + 6 * v[2] - v[3]) / (6 * h)
    d1[-2] = (2 * v[-1] + 3 * v[-2] - 6 * v[-3] + v[-4]) / (6 * h)
    d1[-1] = (11 * v[-1] - 18 * v[-2] + 9 * v[-3] - 2 * v[-4]) / (6 * h)
    d2[0] = (35 * v[0] - 104 * v[1] + 114 * v[2] - 56 * v[3]
             + 11 * v[4]) / (12 * h * h)
    d2[1] = (11 * v[0] - 20 * v[1] + 6 * v[2] + 4 * v[3]
             - v[4]) / (12 * h * h)
    d2[-2] = (11 * v[-1] - 20 * v[-2] + 6 * v[-3] + 4 * v[-4]
              - v[-5]) / (12 * h * h)
    d2[-1] = (35 * v[-1] - 104 * v[-2] + 114 * v[-3] - 56 * v[-4]
              + 11 * v[-5]) / (12 * h * h)
    return d1, d2


def apply_Delta(f: RadialFunction) -> RadialFunction:
    """Delta f = f'' + (3/R) f' by finite differences in the log variable."""
    x = np.log(f.grid)
    d1, d2 = _log_derivatives(f.values, x)
    vals = (d2 + 2.0 * d1) / f.grid**2
    tail = f.tail.delta() if f.tail is not None else None
    return RadialFunction(f.grid, vals, tail)


def delta_truncation_estimate(f: RadialFunction) -> np.ndarray:
    """Pointwise truncation-error estimate for apply_Delta.

    Compares the stencil against its half-resolution evaluation.  The
    lowest stencil order in play is 2, so |fine - coarse| ~ 3 x error and
    dividing by 3 stays conservative for the interior as well.
    """
    sub = RadialFunction(f.grid[::2], f.values[::2], f.tail)
    coarse = apply_Delta(sub).values
    fine = apply_Delta(f).values[::2]
    est = np.abs(fine - coarse) / 3.0
    full = np.interp(np.log(f.grid), np.log(sub.grid), est)
    # roundoff floor: central differences of nearly equal values lose
    # eps |f| / h^2, amplified by the 1/R^2 of the log-coordinate form
    h = np.log(f.grid[1] / f.grid[0])
    floor = 8.0 * np.finfo(float).eps * np.max(np.abs(f.values)) \
        / (h * h * f.grid**2)
    return full + floor


def apply_invDelta(f: RadialFunction) -> RadialFunction:
    """Decaying solution u of Delta u = f.

    u'(R) = R^-3 int_0^R s^3 f ds and u(R) = -int_R^oo u'(s) ds; both
    cumulants are closed with the analytic tail of f, which may push log
    terms into the tail of u.
    """
    from scipy.interpolate import InterpolatedUnivariateSpline

    R, v = f.grid, f.values
    x = np.log(R)
    h = x[1] - x[0]
    w = v * R**4  # integrand of int s^3 f ds in log variable

    # cumulative int_0^R s^3 f ds (spline antiderivative + series head)
    cum = InterpolatedUnivariateSpline(x, w, k=5).antiderivative()(x)
    cum -= cum[0]
    head = v[0] * R[0]**4 / 4.0
    inner = cum + head
    up = inner / R**3

    # u(R) = -int_R^oo u' ; split at R_max and use tail analytics beyond
    if f.tail is None:
        raise DivergentTailError("invDelta requires a tail model for f")
    # I_tot = int_0^oo s^3 f ds may diverge logarithmically; track the
    # log-divergent piece via the p=4 tail coefficient of f.
    c4 = f.tail.c4
    if any(p < 4 and c != 0.0 for p, k, c in f.tail.terms):
        raise DivergentTailError("f grows too slowly at infinity for invDelta")
    if any(k > 0 for p, k, c in f.tail.terms if c != 0.0):
        raise NotImplementedError("invDelta with log tails in f")

    # beyond R_max: inner(s) = C0 + c4 log s + sum_{p>4} c_p s^(4-p)/(4-p)
    A = inner[-1]
    Rm = R[-1]
    C0 = A - c4 * math.log(Rm)
    for p, k, c in f.tail.terms:
        if p > 4 and c != 0.0:
            C0 -= c * Rm**(4 - p) / (4 - p)

    # u(R) = -int_R^oo inner(s) s^-3 ds for R >= R_max, term by term
    def u_tail_value(Rv):
        val = -C0 / (2.0 * Rv**2)
        val -= c4 * (math.log(Rv) / (2.0 * Rv**2) + 1.0 / (4.0 * Rv**2))
        for p, k, c in f.tail.terms:
            if p > 4 and c != 0.0:
                val += c * Rv**(2 - p) / ((p - 4) * (p - 2))
        return val

    # int_{R_j}^{R_max} u' ds by spline antiderivative in the log variable
    anti = InterpolatedUnivariateSpline(x, up * R, k=5).antiderivative()(x)
    int_to_edge = anti[-1] - anti
    u = u_tail_value(Rm) - int_to_edge

    tail_terms = [(2, 0, -C0 / 2.0 - c4 / 4.0)]
    if c4 != 0.0:
        tail_terms.append((2, 1, -c4 / 2.0))
    for p, k, c in f.tail.terms:
        if p > 4 and c != 0.0:
            tail_terms.append((p - 2, 0, c / ((p - 4) * (p - 2))))
    tail = Tail(f.tail.start, tuple(tail_terms))
    return RadialFunction(R, u, tail)


def apply_invGrad(f: RadialFunction) -> RadialFunction:
    """|grad|^{-1} f = (-Delta)^(-1/2) f through the free radial transform."""
    from . import hankel
    data = hankel.hankel_forward(f)
    lifted = hankel.HankelData(data.xi, data.coeffs / data.xi)
    return hankel.hankel_inverse(lifted, f.grid)


# ---------------------------------------------------------------------------
# corrector profiles
# ---------------------------------------------------------------------------

@dataclass
class CorrectorSolution:
    """Decaying solution a*W + b*LambdaW of a linearized profile equation."""
    a: float
    b: float
    residual: float                 # grid L2 residual of the defining ODE
    c2: float                       # measured R^-2 tail coefficient
    proportionality: float          # constant c in  L(psi) = c * source
    paper_a: float
    paper_b: float
    paper_residual: float
    paper_c2: float
    notes: str = ""


def _fit_c2(grid, values, window=(0.25, 1.0)):
    """Fit c2 in values ~ c2 R^-2 + c4 R^-4 on a trailing window of the grid."""
    Rm = grid[-1]
    mask = (grid >= window[0] * Rm) & (grid <= window[1] * Rm)
    R = grid[mask]
    A = np.stack([R**-2.0, R**-4.0], axis=1)
    sol, *_ = np.linalg.lstsq(A, values[mask], rcond=None)
    return sol[0]


def solve_correctors(cfg: NumericsConfig):
    """Solve (-Delta - 3W^2) phi = W^3 and (-Delta - W^2) psi = c LambdaW W^2.

    Coefficients are determined numerically: the non-kernel coefficient by
    least squares against the target, the kernel coefficient by cancelling
    the measured R^-2 tail (the decaying selection).  The combination σs
    quoted in the source construction (-W/2 - LambdaW/16 and 2 LambdaW + 16 W)
    are evaluated alongside for comparison; see the certificates' notes.
    """
    grid = make_grid(cfg)
    Wf = profile_W(cfg)
    LWf = profile_LambdaW(cfg)
    W3 = Wf * Wf * Wf
    LWW2 = LWf * Wf * Wf

    def Ltilde(g):
        return (-1.0) * apply_Delta(g) - 3.0 * (Wf * Wf * g)

    def Lop(g):
        return (-1.0) * apply_Delta(g) - 1.0 * (Wf * Wf * g)

    # quadrature weights for grid least squares (log measure, R^3 weight)
    wgt = np.sqrt(grid**4)
    interior = slice(4, -4)

    c2_W = _fit_c2(grid, Wf.values)
    c2_LW = _fit_c2(grid, LWf.values)

    # --- phi: Ltilde(a W + b LW) = W^3; LW is (numerically) in the kernel
    LtW = Ltilde(Wf).values
    a_phi = (np.dot((LtW * wgt)[interior], (W3.values * wgt)[interior])
             / np.dot((LtW * wgt)[interior], (LtW * wgt)[interior]))
    b_phi = -a_phi * c2_W / c2_LW
    phi_vals = a_phi * Wf.values + b_phi * LWf.values
    phi = RadialFunction(grid, phi_vals,
                         W_tail(cfg.R_tail).scaled(a_phi)
                         + LambdaW_tail(cfg.R_tail).scaled(b_phi))
    res_phi = _weighted_residual(Ltilde(phi).values - W3.values, wgt, interior)
    paper_phi = RadialFunction(grid, -0.5 * Wf.values - LWf.values / 16.0)
    res_phi_paper = _weighted_residual(
        Ltilde(paper_phi).values - W3.values, wgt, interior)
    c2_phi_paper = -0.5 * c2_W - c2_LW / 16.0
    phi_sol = CorrectorSolution(
        a=float(a_phi), b=float(b_phi), residual=res_phi,
        c2=float(_fit_c2(grid, phi_vals)), proportionality=1.0,
        paper_a=-0.5, paper_b=-1.0 / 16.0, paper_residual=res_phi_paper,
        paper_c2=float(c2_phi_paper),
        notes="target W^3; kernel direction LambdaW fixed by tail cancellation")

    # --- psi: L(a W + b LW) = c * LambdaW W^2; W is exactly in the kernel
    LLW = Lop(LWf).values
    b_psi = (np.dot((LLW * wgt)[interior], (LWW2.values * wgt)[interior])
             / np.dot((LLW * wgt)[interior], (LLW * wgt)[interior]))
    a_psi = -b_psi * c2_LW / c2_W
    psi_vals = a_psi * Wf.values + b_psi * LWf.values
    psi = RadialFunction(grid, psi_vals,
                         W_tail(cfg.R_tail).scaled(a_psi)
                         + LambdaW_tail(cfg.R_tail).scaled(b_psi))
    res_psi = _weighted_residual(Lop(psi).values - LWW2.values, wgt, interior)
    paper_psi = RadialFunction(grid, 16.0 * Wf.values + 2.0 * LWf.values)
    Lp = Lop(paper_psi).values
    c_paper = (np.dot((Lp * wgt)[interior], (LWW2.values * wgt)[interior])
               / np.dot((LWW2.values * wgt)[interior], (LWW2.values * wgt)[interior]))
    res_psi_paper = _weighted_residual(Lp - c_paper * LWW2.values, wgt, interior)
    psi_sol = CorrectorSolution(
        a=float(a_psi), b=float(b_psi), residual=res_psi,
        c2=float(_fit_c2(grid, psi_vals)), proportionality=1.0,
        paper_a=16.0, paper_b=2.0, paper_residual=res_psi_paper,
        paper_c2=float(16.0 * c2_W + 2.0 * c2_LW),
        notes=f"target c*LambdaW*W^2; quoted combination reproduces it with "
              f"c={c_paper:.6f} and a non-decaying R^-2 tail")
    return phi_sol, psi_sol


def _weighted_residual(res, wgt, interior):
    r = (res * wgt)[interior]
    return float(np.sqrt(np.mean(np.abs(r) ** 2)))
