"""Check records and scenario reports with deterministic serialization.

A report collects named inequality checks (each with both sides, the margin,
and an expected_fail flag for deliberate counterexamples) plus enough context
to rerun the scenario.  Serialized output is sorted and excludes wall-clock
timings, so byte-identical reruns produce byte-identical reports; timings
stay available in memory.
"""

from __future__ import annotations

import csv
import io
import json
import platform
import sys
from dataclasses import dataclass, field
from importlib import metadata

import numpy as np


def _package_version() -> str:
    try:
        return metadata.version("detcurve")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def runtime_versions() -> dict:
    import scipy

    return {
        "detcurve": _package_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


@dataclass(frozen=True)
class CheckRecord:
    """One verified inequality.

    satisfied means the check behaved as intended: a passing check, or an
    expected_fail check that indeed failed.  An expected_fail check that
    passes signals the counterexample stopped working and counts as
    unsatisfied.
    """

    name: str
    passed: bool
    lhs: float
    rhs: float
    direction: str = "lhs <= rhs"
    margin: float = 0.0
    expected_fail: bool = False
    details: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return bool(self.passed) != bool(self.expected_fail)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "direction": self.direction,
            "margin": float(self.margin),
            "expected_fail": bool(self.expected_fail),
            "satisfied": self.satisfied,
            "details": _plain(self.details),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CheckRecord":
        return cls(
            name=data["name"],
            passed=bool(data["passed"]),
            lhs=float(data["lhs"]),
            rhs=float(data["rhs"]),
            direction=data.get("direction", "lhs <= rhs"),
            margin=float(data.get("margin", 0.0)),
            expected_fail=bool(data.get("expected_fail", False)),
            details=data.get("details", {}),
        )

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tag = " (expected failure)" if self.expected_fail else ""
        mark = "ok" if self.satisfied else "REGRESSION"
        return (f"{status}{tag} [{mark}] {self.name}: "
                f"lhs={self.lhs:.6g} rhs={self.rhs:.6g} ({self.direction})")


def _plain(obj):
    """Recursively convert numpy scalars/arrays so json can emit them."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


@dataclass
class ScenarioReport:
    scenario: str
    config: dict
    constants: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    versions: dict = field(default_factory=runtime_versions)
    timings: dict = field(default_factory=dict)

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)

    @property
    def n_failed(self) -> int:
        return sum(not c.satisfied for c in self.checks)

    def add(self, check: CheckRecord) -> CheckRecord:
        self.checks.append(check)
        return check

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {
            "scenario": self.scenario,
            "config": _plain(self.config),
            "constants": _plain(self.constants),
            "checks": [c.to_dict() for c in self.checks],
            "versions": dict(self.versions),
            "all_satisfied": self.all_satisfied,
        }
        if include_timings:
            out["timings"] = _plain(self.timings)
        return out

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_dict(include_timings), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "passed", "expected_fail", "satisfied",
                         "lhs", "rhs", "direction", "margin"])
        for c in self.checks:
            writer.writerow([c.name, c.passed, c.expected_fail, c.satisfied,
                             repr(float(c.lhs)), repr(float(c.rhs)),
                             c.direction, repr(float(c.margin))])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioReport":
        return cls(
            scenario=data["scenario"],
            config=data.get("config", {}),
            constants=data.get("constants", {}),
            checks=[CheckRecord.from_dict(c) for c in data.get("checks", [])],
            versions=data.get("versions", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "ScenarioReport":
        return cls.from_dict(json.loads(text))

    def print_summary(self, stream=None) -> None:
        stream = stream or sys.stdout
        print(f"scenario: {self.scenario}", file=stream)
        for c in self.checks:
            print("  " + c.summary_line(), file=stream)
        verdict = "all checks satisfied" if self.all_satisfied else \
            f"{self.n_failed} check(s) NOT satisfied"
        print(f"  => {verdict}", file=stream)


def emit_report(report: ScenarioReport, path, fmt: str = None) -> None:
    path = str(path)
    if fmt is None:
        fmt = "csv" if path.endswith(".csv") else "json"
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        text = report.to_csv()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_report(path) -> ScenarioReport:
    with open(str(path), encoding="utf-8") as fh:
        return ScenarioReport.from_json(fh.read())
