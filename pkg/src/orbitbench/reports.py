"""Run configuration parsing and structured reports.

Config files are plain text, one `key = value` per line, `#` comments.
Values are typed against a per-command schema; unknown keys are rejected.
Reports carry one record per check (name, expected, observed, tolerance,
pass) and serialize to versioned JSON; a run passes iff every check does.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import DomainError

REPORT_SCHEMA_VERSION = 1


def _parse_scalar(text: str, kind: str):
    text = text.strip()
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "str":
        return text
    if kind == "bool":
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise DomainError(f"not a boolean: {text!r}")
    if kind == "ints":
        return [int(v) for v in text.split(",") if v.strip()]
    if kind == "floats":
        return [float(v) for v in text.split(",") if v.strip()]
    raise DomainError(f"unknown schema kind {kind!r}")


def read_config_file(path: str) -> dict:
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            key, value = stripped.split("=", 1)
            raw[key.strip()] = value.strip()
    return raw


def resolve_config(raw: dict, schema: dict, command: str) -> dict:
    """Type and default raw key/value strings against a schema
    {key: (kind, default)}; unknown keys are an error."""
    unknown = set(raw) - set(schema)
    if unknown:
        raise DomainError(
            f"unknown config key(s) for {command}: {sorted(unknown)}")
    out = {}
    for key, (kind, default) in schema.items():
        if key in raw:
            value = raw[key]
            out[key] = _parse_scalar(value, kind) if isinstance(value, str) \
                else value
        else:
            out[key] = default
    return out


@dataclass
class Check:
    name: str
    expected: object
    observed: object
    tolerance: object
    passed: bool
    kind: str = "exact"

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: observed={self.observed} "
                f"expected={self.expected} tol={self.tolerance} ({self.kind})")


@dataclass
class Report:
    command: str
    config: dict
    checks: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    started: float = field(default_factory=time.perf_counter)
    elapsed_seconds: float = 0.0

    def check_rel(self, name, observed, expected, rtol) -> Check:
        passed = abs(observed - expected) <= rtol * abs(expected)
        return self._add(Check(name, expected, observed, rtol, passed, "relative"))

    def check_abs(self, name, observed, expected, atol) -> Check:
        passed = abs(observed - expected) <= atol
        return self._add(Check(name, expected, observed, atol, passed, "absolute"))

    def check_true(self, name, condition, observed=None) -> Check:
        return self._add(Check(name, True, observed if observed is not None
                               else bool(condition), None, bool(condition),
                               "exact"))

    def check_exact(self, name, observed, expected) -> Check:
        return self._add(Check(name, expected, observed, None,
                               observed == expected, "exact"))

    def check_upper(self, name, observed, bound) -> Check:
        return self._add(Check(name, f"< {bound}", observed, None,
                               observed < bound, "upper-bound"))

    def _add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def finish(self) -> "Report":
        self.elapsed_seconds = time.perf_counter() - self.started
        return self

    def to_json(self) -> dict:
        def scrub(v):
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, (np.floating,)):
                return float(v)
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, dict):
                return {str(k): scrub(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [scrub(x) for x in v]
            if isinstance(v, (bool, int, float, str)) or v is None:
                return v
            return str(v)

        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "command": self.command,
            "pass": self.passed,
            "config": scrub(self.config),
            "checks": [scrub({
                "name": c.name, "expected": c.expected, "observed": c.observed,
                "tolerance": c.tolerance, "pass": c.passed, "kind": c.kind,
            }) for c in self.checks],
            "extras": scrub(self.extras),
            "elapsed_seconds": self.elapsed_seconds,
            "versions": {
                "orbitbench": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
        }

    def write_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")


def write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
