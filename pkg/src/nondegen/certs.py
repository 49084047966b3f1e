"""Certificates: machine-checked non-degeneracy verdicts.

A certificate pairs a computed quantity with an estimated numerical error
and a margin |value - forbidden| / error.  The pass bar is margin > 10
(config: margin_factor); a certificate can never pass with a smaller
margin by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

CERT_IDS = (
    "S1", "A1", "B1", "B2", "B3", "C1", "C2", "C3",
    "cstar", "alphastar", "alphadstar", "tauhatstar", "xid",
)


@dataclass
class Certificate:
    id: str
    value: complex | float
    error: float
    margin: float
    verdict: str                    # "pass" | "fail" | "blocked"
    config_digest: str = ""
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict == "pass" and not self.margin > 0:
            raise ValueError("pass verdict requires a positive margin")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        val = self.value
        if isinstance(val, complex):
            val = {"re": val.real, "im": val.imag}
        return {
            "id": self.id,
            "value": val,
            "error": self.error,
            "margin": self.margin,
            "verdict": self.verdict,
            "config_digest": self.config_digest,
            "notes": self.notes,
        }


def make_certificate(cert_id, value, error, *, forbidden=0.0,
                     margin_factor=10.0, config_digest="", notes=None,
                     margin=None) -> Certificate:
    """Build a certificate for ``value != forbidden``.

    ``error`` must be a strictly positive estimate of the numerical
    uncertainty of ``value``; a non-positive estimate is itself a failure.
    An explicit ``margin`` overrides the default |value - forbidden|/error
    (used by scan-type certificates that minimize over a grid).
    """
    notes = dict(notes or {})
    if not (error > 0) or not math.isfinite(error):
        return Certificate(cert_id, value, float("nan"), 0.0, "fail",
                           config_digest, {**notes, "reason": "bad error estimate"})
    if margin is None:
        margin = abs(value - forbidden) / error
    verdict = "pass" if margin > margin_factor else "fail"
    notes.setdefault("forbidden", forbidden)
    notes.setdefault("margin_factor", margin_factor)
    return Certificate(cert_id, value, float(error), float(margin), verdict,
                       config_digest, notes)


def blocked_certificate(cert_id, reason, config_digest="") -> Certificate:
    """Dependency failure: recorded explicitly, never a silent pass."""
    return Certificate(cert_id, float("nan"), float("nan"), 0.0, "blocked",
                       config_digest, {"reason": reason})


def certificates_to_json(certs, config_dict, version, extra=None) -> str:
    report = {
        "tool": "nondegen",
        "version": version,
        "config": config_dict,
        "certificates": [c.to_dict() for c in certs],
        "overall": "pass" if certs and all(c.passed for c in certs) else "fail",
    }
    if extra:
        report.update(extra)
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True)
