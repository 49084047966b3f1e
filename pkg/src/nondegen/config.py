"""Run configuration.

Every constant that the verified construction leaves unspecified (scan
ranges, grid grading, truncation radius, tolerances, the hierarchy
tau_* >> N >> eps1^-1 >> gamma1^-1 >> nu) appears here with an explicit
default and is echoed into every report, so a certificate is always
reproducible from its config snapshot.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


@dataclass(frozen=True)
class NumericsConfig:
    # scaling exponent nu > 1 (enters time maps and the beta_1 multiplier)
    nu: float = 8.0

    # radial grid: geometric grading on [R_min, R_max], n_grid nodes
    R_min: float = 1e-4
    R_max: float = 1e3
    n_grid: int = 2401

    # tail matching radius for profile serialization / tail checks
    R_tail: float = 200.0
    tail_rel_tol: float = 1e-6

    # ODE integration (regular/Jost solutions, fundamental systems)
    ode_rtol: float = 1e-12
    ode_atol: float = 1e-14

    # quadrature target for adaptive rules
    quad_tol: float = 1e-10

    # spatial-frequency scan for distorted/free transforms
    xi_min: float = 3e-6
    xi_max: float = 1e2
    n_xi: int = 260

    # temporal-frequency scans
    tauhat_scan_max: float = 5.0      # (A1) scan upper end
    n_tauhat_scan: int = 21           # (A1) scan points
    gamma1: float = 0.1               # intermediate band [gamma1, 1/gamma1]
    n_b3_scan: int = 25               # (B3) scan points

    # Fredholm apparatus
    M_trunc: float = 20.0             # K_main bump: 1 on [0, M], 0 beyond 2M
    fred_R_max: float = 90.0          # operator grid for Nystroem pieces
    fred_n_grid: int = 1125
    delta0: float = 0.1               # weight exponent of <R> R^delta0 L^2
    volterra_tol: float = 1e-10
    neumann_max_terms: int = 80

    # principal-value quadrature
    pv_panel_half_width: float = 0.5  # relative half width of symmetric panel
    pv_n_panel: int = 400

    # mollifier / multiplier assembly
    c3_support_radius: float = 1.0
    c2_sign: float = 1.0              # +1 -> c2 = +1/2 (both are reported)

    # propagator horizon (Schroedinger time) and test-source support
    tau_star: float = 10.0
    T_max: float = 14.0

    # certificate pass bar: margin = |value - forbidden| / error must exceed
    margin_factor: float = 10.0

    # seeded randomness for property suites
    seed: int = 20240817

    # output
    out_path: str = "report.json"

    def __post_init__(self):
        if not self.nu > 1:
            raise ValueError("nu must exceed 1")
        if self.R_min <= 0 or self.R_max <= self.R_min:
            raise ValueError("need 0 < R_min < R_max")
        for name in ("ode_rtol", "ode_atol", "quad_tol", "tail_rel_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0 < self.xi_min < self.xi_max):
            raise ValueError("empty xi scan range")
        if not (0 < self.gamma1 < 1):
            raise ValueError("gamma1 must lie in (0,1)")
        if self.tauhat_scan_max <= 0 or self.n_tauhat_scan < 2:
            raise ValueError("empty tauhat scan range")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """Stable hash of the configuration, quoted in certificates."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **kw) -> "NumericsConfig":
        return dataclasses.replace(self, **kw)


def load_config(path: str | None = None, **overrides) -> NumericsConfig:
    """Load a TOML config file; keys not present fall back to defaults."""
    data: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    unknown = set(data) - {f.name for f in dataclasses.fields(NumericsConfig)}
    if unknown:
        raise KeyError(f"unknown config keys: {sorted(unknown)}")
    data.update(overrides)
    return NumericsConfig(**data)
