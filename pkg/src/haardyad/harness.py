"""Seeded experiment orchestration and machine-readable reports.

A suite is a named set of checks (one per module, plus ``all``); running a
suite executes every check, collects per-record pass/fail lines, and emits
a JSON report that validates against the published schema. All stochastic
results are functions of (config, seed); resource errors are first-class
check outcomes rather than crashes.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources

from .checks import SUITES, run_check
from .errors import ConfigError
from .kernel import KERNELS

DEFAULT_SEED_ENV = "HAARDYAD_SEED"


@dataclass
class ExperimentConfig:
    """Validated experiment knobs with config-file and flag overrides."""

    n: int = 1
    level_min: int = 0
    level_max: int = 6
    window: int = 2816
    gamma: Fraction = Fraction(1, 2)
    r: int = 16
    p: float = 4.0
    d: int = 1
    m_max: int = 16
    trials: int = 100_000
    seed: int = 0
    kernel: str = "hilbert"
    output: str | None = None

    def __post_init__(self):
        self.gamma = Fraction(self.gamma)
        if not (0 < self.gamma < 1):
            raise ConfigError("gamma must lie in (0, 1)")
        if not (1.0 < self.p < float("inf")):
            raise ConfigError("p must lie in (1, oo)")
        if self.kernel not in KERNELS:
            raise ConfigError(
                f"unknown kernel {self.kernel!r}; shipped: {sorted(KERNELS)}")
        for name in ("n", "d", "m_max", "trials", "r", "window"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.level_max <= self.level_min:
            raise ConfigError("need level_max > level_min")

    @classmethod
    def from_file(cls, path: str, **overrides) -> "ExperimentConfig":
        """Simple key = value text format; later flags win."""
        values: dict = {}
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"bad config line: {line!r}")
                key, val = (part.strip() for part in line.split("=", 1))
                values[key] = val
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.parse(values)

    @classmethod
    def parse(cls, values: dict) -> "ExperimentConfig":
        kwargs: dict = {}
        casts = {
            "n": int, "level_min": int, "level_max": int, "window": int,
            "gamma": Fraction, "r": int, "p": float, "d": int, "m_max": int,
            "trials": int, "seed": int, "kernel": str, "output": str,
        }
        for key, val in values.items():
            if key not in casts:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = casts[key](val)
        return cls(**kwargs)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["gamma"] = str(self.gamma)
        return out


@dataclass
class Report:
    experiment: str
    config: dict
    seed: int
    checks: list = field(default_factory=list)
    wall_time_s: float = 0.0

    @property
    def overall_pass(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "seed": self.seed,
            "checks": self.checks,
            "overall_pass": self.overall_pass,
            "wall_time_s": self.wall_time_s,
        }

    def to_json(self, path: str | None = None) -> str:
        payload = self.as_dict()
        validate_report(payload)
        text = json.dumps(payload, indent=2, sort_keys=True)
        if path:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def report_schema() -> dict:
    with resources.files("haardyad").joinpath("report_schema.json").open() as fh:
        return json.load(fh)


def validate_report(payload: dict):
    import jsonschema

    jsonschema.validate(payload, report_schema())


def list_checks(suite: str = "all") -> list[str]:
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; available: {sorted(SUITES)}")
    return list(SUITES[suite])


def run(config: ExperimentConfig, suite: str = "all",
        progress=None) -> Report:
    """Execute a named suite and assemble the report."""
    names = list_checks(suite)
    report = Report(experiment=suite, config=config.as_dict(),
                    seed=config.seed)
    start = time.monotonic()
    for name in names:
        t0 = time.monotonic()
        result = run_check(name, seed=config.seed)
        payload = result.as_dict()
        payload["seconds"] = round(time.monotonic() - t0, 3)
        report.checks.append(payload)
        if progress:
            progress(name, result)
    report.wall_time_s = round(time.monotonic() - start, 3)
    return report


__all__ = ["ExperimentConfig", "Report", "run", "list_checks",
           "report_schema", "validate_report", "DEFAULT_SEED_ENV"]
