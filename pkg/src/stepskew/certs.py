"""Certificate containers shared by all verification suites."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class Certificate:
    """One checked claim with its margin.

    `margin` is the distance to failure in the claim's natural units; a
    rigorous certificate passes only when margin > 0 (margin == 0.0 with
    exact=True is allowed for claims verified by exact arithmetic, e.g.
    lattice fixed points).  `witness` carries whatever made the margin
    computable: interval endpoints, sample counts, word metadata.
    """

    claim: str
    passed: bool
    margin: float
    method: str = "interval"  # interval | exact | sampled | measured
    witness: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "claim": self.claim,
            "pass": self.passed,
            "margin": self.margin,
            "method": self.method,
            "witness": self.witness,
        }


@dataclass
class CertificateSet:
    """A named group of certificates with an aggregate verdict."""

    name: str
    certificates: list[Certificate] = field(default_factory=list)

    def add(self, cert: Certificate) -> Certificate:
        self.certificates.append(cert)
        return cert

    def extend(self, certs: list[Certificate]) -> None:
        self.certificates.extend(certs)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates)

    @property
    def min_margin(self) -> float:
        if not self.certificates:
            return float("inf")
        return min(c.margin for c in self.certificates)

    def failures(self) -> list[Certificate]:
        return [c for c in self.certificates if not c.passed]

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "pass": self.passed,
            "count": len(self.certificates),
            "min_margin": self.min_margin,
            "certificates": [c.to_json() for c in self.certificates],
        }
