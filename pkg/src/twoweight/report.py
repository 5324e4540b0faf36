"""Structured results for scenario runs: per-check records, JSON and
markdown rendering, and atomic saves."""

from __future__ import annotations

import datetime
import json
import os
from dataclasses import dataclass, field

__all__ = ["CheckResult", "SuiteReport"]


@dataclass
class CheckResult:
    """One named numeric check.  passed is None for report-only quantities
    that carry no assertion."""

    name: str
    value: float
    passed: bool | None = None
    bound: float | None = None
    witness: dict | None = None

    def to_dict(self):
        out = {"name": self.name, "value": self.value, "passed": self.passed}
        if self.bound is not None:
            out["bound"] = self.bound
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class SuiteReport:
    """All checks from one scenario run, grouped by suite."""

    scenario: str
    seed: int
    checks: list = field(default_factory=list)
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.datetime.now(
                datetime.timezone.utc).isoformat(timespec="seconds")

    def add(self, suite, name, value, passed=None, bound=None, witness=None):
        self.checks.append((suite, CheckResult(name, float(value), passed,
                                               bound, witness)))

    def extend(self, suite, results):
        for res in results:
            self.checks.append((suite, res))

    @property
    def passed(self):
        return all(res.passed for _, res in self.checks
                   if res.passed is not None)

    @property
    def n_asserted(self):
        return sum(1 for _, res in self.checks if res.passed is not None)

    @property
    def n_failed(self):
        return sum(1 for _, res in self.checks if res.passed is False)

    def to_dict(self):
        suites = {}
        for suite, res in self.checks:
            suites.setdefault(suite, []).append(res.to_dict())
        return {
            "schema": 1,
            "scenario": self.scenario,
            "seed": self.seed,
            "timestamp": self.timestamp,
            "suites": suites,
            "pass": self.passed,
        }

    def to_markdown(self):
        lines = ["# Scenario report: %s" % self.scenario, "",
                 "- seed: %d" % self.seed,
                 "- timestamp: %s" % self.timestamp,
                 "- asserted checks: %d (%d failed)" % (self.n_asserted,
                                                        self.n_failed),
                 "- overall: %s" % ("PASS" if self.passed else "FAIL"), ""]
        current = None
        for suite, res in self.checks:
            if suite != current:
                lines += ["## %s" % suite, "",
                          "| check | value | bound | status |",
                          "|---|---|---|---|"]
                current = suite
            status = ("-" if res.passed is None
                      else "pass" if res.passed else "FAIL")
            bound = "-" if res.bound is None else "%.6g" % res.bound
            lines.append("| %s | %.6g | %s | %s |" %
                         (res.name, res.value, bound, status))
        lines.append("")
        return "\n".join(lines)

    def save(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        json_path = os.path.join(out_dir, "report.json")
        with open(json_path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        md_path = os.path.join(out_dir, "report.md")
        with open(md_path, "w") as fh:
            fh.write(self.to_markdown())
        return json_path, md_path
