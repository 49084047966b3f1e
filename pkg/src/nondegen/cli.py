"""Command-line orchestration.

`verify` runs the certificate set in dependency order (a failed
prerequisite marks its dependents "blocked", never silently passing),
`dump` writes the plain-text tables, `report --merge` combines partial
reports.  Exit code 0 iff every requested certificate passes.

Reports are deterministic: fixed iteration orders, config-seeded
randomness, and no timestamps in the payload (wall-clock timings go to
stderr, or into the JSON only with --timings).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .certs import blocked_certificate, certificates_to_json
from .config import NumericsConfig, load_config

ALL_IDS = ["tauhatstar", "C1", "B1", "S1", "xid", "cstar", "alphastar",
           "alphadstar", "C3", "B2", "C2", "A1", "B3"]

# prerequisite map: run order is a topological sort of this graph
DEPS = {
    "tauhatstar": [],
    "C1": [],
    "B1": [],
    "S1": [],
    "xid": [],
    "cstar": [],
    "alphastar": ["cstar"],
    "alphadstar": ["cstar"],
    "C3": ["cstar"],
    "B2": ["cstar"],
    "C2": ["tauhatstar"],
    "A1": [],
    "B3": ["cstar", "alphastar"],
}


class Pipeline:
    """Lazily-computed shared state for the certificate runs."""

    def __init__(self, cfg: NumericsConfig):
        self.cfg = cfg
        self._state: dict = {}

    def sd_L(self):
        if "sd_L" not in self._state:
            from . import spectral
            self._state["sd_L"] = spectral.spectral_measure(
                spectral.op_L(), self.cfg)
        return self._state["sd_L"]

    def cstar(self):
        if "cstar" not in self._state:
            from . import constants
            self._state["cstar"] = constants.compute_cstar(
                self.cfg, self.sd_L())
        return self._state["cstar"]

    def run(self, cert_id: str):
        from . import constants, fredholm, multipliers, spectral
        cfg = self.cfg
        if cert_id == "tauhatstar":
            return constants.check_tauhatstar(cfg)
        if cert_id == "C1":
            return constants.check_C1(cfg)
        if cert_id == "B1":
            return constants.check_B1(cfg)
        if cert_id == "S1":
            return spectral.check_S1(cfg)
        if cert_id == "xid":
            return constants.check_xid(cfg)
        if cert_id == "cstar":
            return self.cstar()
        if cert_id == "alphastar":
            cert, _ = constants.alpha_constants(cfg, self.cstar())
            return cert
        if cert_id == "alphadstar":
            _, cert = constants.alpha_constants(cfg, self.cstar())
            return cert
        if cert_id == "C3":
            return constants.check_C3(cfg, self.cstar())
        if cert_id == "B2":
            return constants.check_B2(cfg, self.cstar())
        if cert_id == "C2":
            return multipliers.check_C2(cfg)
        if cert_id == "A1":
            return fredholm.check_A1(cfg)
        if cert_id == "B3":
            astar, _ = constants.alpha_constants(cfg, self.cstar())
            return fredholm.check_B3(cfg, float(astar.value))
        raise KeyError(cert_id)


def _expand(ids):
    """Requested ids plus prerequisites, in dependency order."""
    want = set(ids)
    changed = True
    while changed:
        changed = False
        for cid in list(want):
            for dep in DEPS[cid]:
                if dep not in want:
                    want.add(dep)
                    changed = True
    return [cid for cid in ALL_IDS if cid in want]


def run_verify(ids, cfg: NumericsConfig, timings: bool = False):
    """Execute the certificates; returns (certs, wall_clock dict)."""
    pipe = Pipeline(cfg)
    order = _expand(ids)
    done: dict = {}
    wall: dict = {}
    for cid in order:
        bad = [d for d in DEPS[cid] if d in done and not done[d].passed]
        if bad:
            done[cid] = blocked_certificate(
                cid, f"prerequisite failed: {','.join(bad)}", cfg.digest())
            wall[cid] = 0.0
            continue
        t0 = time.perf_counter()
        try:
            done[cid] = pipe.run(cid)
        except Exception as exc:  # a crashed check is a failed certificate
            done[cid] = blocked_certificate(cid, f"error: {exc}",
                                            cfg.digest())
        wall[cid] = round(time.perf_counter() - t0, 3)
    certs = [done[cid] for cid in order]
    return certs, wall


def _print_table(certs, wall, stream=sys.stderr):
    print(f"{'id':<11}{'verdict':<9}{'margin':>12}  value", file=stream)
    for c in certs:
        val = c.value
        if isinstance(val, complex):
            val = f"{val.real:.6g}{val.imag:+.6g}i"
        else:
            val = f"{val:.8g}"
        print(f"{c.id:<11}{c.verdict:<9}{c.margin:>12.4g}  {val}"
              f"   [{wall.get(c.id, 0):.1f}s]", file=stream)
    overall = "pass" if certs and all(c.passed for c in certs) else "fail"
    print(f"overall: {overall}", file=stream)


def cmd_verify(args):
    cfg = load_config(args.config)
    ids = ALL_IDS if args.only is None else args.only.split(",")
    unknown = set(ids) - set(ALL_IDS)
    if unknown:
        raise SystemExit(f"unknown certificate ids: {sorted(unknown)}")
    certs, wall = run_verify(ids, cfg, timings=args.timings)
    extra = {"timings": wall} if args.timings else None
    payload = certificates_to_json(certs, cfg.to_dict(), __version__, extra)
    out = args.out or cfg.out_path
    with open(out, "w") as fh:
        fh.write(payload + "\n")
    _print_table(certs, wall)
    print(f"report written to {out}", file=sys.stderr)
    return 0 if all(c.passed for c in certs) else 1


def cmd_dump(args):
    from . import constants, fredholm, multipliers, profiles, spectral
    cfg = load_config(args.config)
    what = args.what
    out = args.out or f"dump_{what}.txt"
    if what == "profiles":
        W = profiles.profile_W(cfg)
        LW = profiles.profile_LambdaW(cfg)
        phi, psi = profiles.solve_correctors(cfg)
        with open(out, "w") as fh:
            fh.write("# W\n" + W.to_text())
            fh.write("# LambdaW\n" + LW.to_text())
            fh.write(f"# corrector phi: a={phi.a!r} b={phi.b!r} "
                     f"residual={phi.residual!r} c2={phi.c2!r}\n")
            fh.write(f"# corrector psi: a={psi.a!r} b={psi.b!r} "
                     f"residual={psi.residual!r} c2={psi.c2!r}\n")
    elif what == "spectrum":
        op = {"L": spectral.op_L, "Lstar": spectral.op_Lstar,
              "Ltilde": spectral.op_Ltilde}[args.operator]()
        sd = spectral.spectral_measure(op, cfg)
        with open(out, "w") as fh:
            fh.write(sd.dump())
    elif what == "multipliers":
        taus = np.geomspace(cfg.gamma1, 1.0 / cfg.gamma1, 60)
        with open(out, "w") as fh:
            fh.write("# tauhat  Re_beta2  Im_beta2\n")
            for t in taus:
                b = multipliers.beta2(float(t), cfg)
                fh.write(f"{t!r} {b.real!r} {b.imag!r}\n")
    elif what == "propagator-residuals":
        from . import propagators
        G = _bump_source(cfg)
        fld = propagators.schrodinger_S(G, cfg)
        res_s, scale_s = propagators.schrodinger_residual(fld, G, cfg)
        w = propagators.wave_U(G, cfg)
        res_w, scale_w = propagators.wave_residual(w, G, cfg)
        with open(out, "w") as fh:
            fh.write("# equation  residual_sup  source_sup  relative\n")
            fh.write(f"schrodinger {res_s!r} {scale_s!r} {res_s/scale_s!r}\n")
            fh.write(f"wave {res_w!r} {scale_w!r} {res_w/scale_w!r}\n")
    else:
        raise SystemExit(f"unknown dump target {what}")
    print(f"wrote {out}", file=sys.stderr)
    return 0


def _bump_source(cfg):
    mid = 0.5 * (cfg.tau_star + cfg.T_max)

    def G(s, x):
        s = np.asarray(s)
        x = np.asarray(x)
        return np.exp(-((s - mid) / 0.5) ** 2) \
            * np.exp(-((x - 0.4) / 0.15) ** 2) + 0j

    return G


def cmd_report(args):
    if not args.merge:
        raise SystemExit("report requires --merge")
    merged: dict = {}
    config = version = None
    for path in args.inputs:
        with open(path) as fh:
            data = json.load(fh)
        config = config or data.get("config")
        version = version or data.get("version")
        for cert in data["certificates"]:
            merged[cert["id"]] = cert
    certs = [merged[k] for k in sorted(merged)]
    overall = "pass" if certs and all(
        c["verdict"] == "pass" for c in certs) else "fail"
    payload = json.dumps({
        "tool": "nondegen", "version": version, "config": config,
        "certificates": certs, "overall": overall,
    }, indent=2, sort_keys=True)
    with open(args.out, "w") as fh:
        fh.write(payload + "\n")
    print(f"merged {len(args.inputs)} reports -> {args.out}",
          file=sys.stderr)
    return 0 if overall == "pass" else 1


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="nondegen",
        description="numerical non-degeneracy certificates for the radial "
                    "blow-up construction")
    sub = ap.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("verify", help="run certificates")
    v.add_argument("--only", help="comma-separated certificate ids")
    v.add_argument("--config", help="TOML config path")
    v.add_argument("--out", help="report path (default from config)")
    v.add_argument("--timings", action="store_true",
                   help="include wall-clock times in the report payload")
    v.set_defaults(fn=cmd_verify)

    d = sub.add_parser("dump", help="write plain-text tables")
    d.add_argument("what", choices=["profiles", "spectrum", "multipliers",
                                    "propagator-residuals"])
    d.add_argument("--operator", default="L", choices=["L", "Lstar", "Ltilde"])
    d.add_argument("--config", help="TOML config path")
    d.add_argument("--out")
    d.set_defaults(fn=cmd_dump)

    r = sub.add_parser("report", help="merge partial reports")
    r.add_argument("--merge", action="store_true")
    r.add_argument("--out", default="report_merged.json")
    r.add_argument("inputs", nargs="+")
    r.set_defaults(fn=cmd_report)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
