"""Check results and validation reports with deterministic serialization.

Reports never embed timestamps or environment data: two runs with the same
model document and seed must serialize to byte-identical JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import StructuralError

CSV_HEADER = "axiom,G,residual"


@dataclass
class CheckResult:
    """Outcome of a single numerical check.

    The pass flag is redundant with ``residual <= tolerance`` and is
    validated on construction; ``details`` carries named sub-residuals.
    """

    name: str
    residual: float
    tolerance: float
    samples: int
    passed: bool
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.residual = float(self.residual)
        self.tolerance = float(self.tolerance)
        if self.passed != (self.residual <= self.tolerance):
            raise StructuralError(
                f"check '{self.name}': pass flag {self.passed} contradicts "
                f"residual {self.residual} vs tolerance {self.tolerance}"
            )

    @classmethod
    def from_residual(cls, name, residual, tolerance, samples, details=None):
        residual = float(residual)
        return cls(
            name=name,
            residual=residual,
            tolerance=float(tolerance),
            samples=int(samples),
            passed=bool(residual <= tolerance),
            details=dict(details or {}),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "passed": self.passed,
            "details": {k: float(v) for k, v in self.details.items()},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CheckResult":
        return cls(
            name=payload["name"],
            residual=payload["residual"],
            tolerance=payload["tolerance"],
            samples=payload["samples"],
            passed=payload["passed"],
            details=dict(payload.get("details", {})),
        )


@dataclass
class ValidationReport:
    """Ordered collection of check results plus run provenance."""

    provenance: dict = field(default_factory=dict)
    entries: list = field(default_factory=list)

    def add(self, result: CheckResult) -> CheckResult:
        self.entries.append(result)
        return result

    def extend(self, results) -> None:
        for result in results:
            self.add(result)

    @property
    def all_passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    @property
    def failed_names(self) -> list:
        return [entry.name for entry in self.entries if not entry.passed]

    def to_dict(self) -> dict:
        return {
            "provenance": dict(self.provenance),
            "checks": [entry.to_dict() for entry in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, payload: dict) -> "ValidationReport":
        report = cls(provenance=dict(payload.get("provenance", {})))
        for entry in payload.get("checks", []):
            report.add(CheckResult.from_dict(entry))
        return report

    @classmethod
    def from_json(cls, text: str) -> "ValidationReport":
        return cls.from_dict(json.loads(text))

    def csv_text(self, grid_size: int) -> str:
        """Residual rows in insertion order, 17 significant digits, LF endings."""
        lines = [CSV_HEADER]
        for entry in self.entries:
            lines.append(f"{entry.name},{int(grid_size)},{entry.residual:.17g}")
        return "\n".join(lines) + "\n"


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
