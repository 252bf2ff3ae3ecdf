"""Config-driven execution of the identity-check suites.

A SuiteConfig selects checks, overrides tolerances and the core
parameters (q, tau, eta, chain sizes, quadrature resolution), and pins
the RNG seed; run_suite executes the registry in order with one
deterministic generator per check, records residuals, and the report is
serializable as JSON or a text table.

Exit-status convention (used by the CLI): 0 all gating checks pass,
1 a gating check failed, 2 configuration error.  Checks flagged
diagnostic never gate.
"""

from __future__ import annotations

import cmath
import json
import time
import zlib
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from . import __version__

__all__ = [
    "ConfigError", "CheckSpec", "CheckResult", "Report", "SuiteConfig",
    "REGISTRY", "register", "list_checks", "run_suite", "emit_report",
    "parse_config_text",
]


class ConfigError(ValueError):
    pass


@dataclass
class CheckSpec:
    check_id: str
    statement: str
    tolerance: float
    runner: Callable
    diagnostic: bool = False


@dataclass
class CheckResult:
    check_id: str
    statement: str
    parameters: dict
    residual: Optional[float]
    tolerance: float
    passed: bool
    wall_time: float
    diagnostic: bool = False
    convergence_delta: Optional[float] = None
    error: Optional[str] = None
    details: dict = field(default_factory=dict)


@dataclass
class Report:
    version: str
    seed: int
    config: dict
    results: list
    summary: dict


REGISTRY: dict[str, CheckSpec] = {}


def register(check_id: str, statement: str, tolerance: float,
             diagnostic: bool = False):
    def wrap(fn):
        REGISTRY[check_id] = CheckSpec(check_id, statement, tolerance, fn,
                                       diagnostic)
        return fn
    return wrap


# -- configuration -----------------------------------------------------------

_PARAM_KEYS = {
    "trig.q": complex,
    "trig.D": int,
    "trig.N": int,
    "trig.j_max": int,
    "elliptic.tau": complex,
    "elliptic.eta": complex,
    "elliptic.M": int,
}

_DEFAULTS = {
    "trig.q": 0.45 + 0.11j,
    "trig.D": 8,
    "trig.N": 2,
    "trig.j_max": 12,
    "elliptic.tau": 0.31 + 1.05j,
    "elliptic.eta": 0.17 + 0.40j,
    "elliptic.M": 64,
}


@dataclass
class SuiteConfig:
    checks: Optional[list] = None       # None selects every registered check
    seed: int = 20240915
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=lambda: dict(_DEFAULTS))
    out: Optional[str] = None
    fmt: str = "text"

    def validate(self) -> None:
        if self.checks is not None:
            for cid in self.checks:
                if cid not in REGISTRY:
                    raise ConfigError(f"unknown check id {cid!r}")
        for cid in self.tolerances:
            if cid not in REGISTRY:
                raise ConfigError(f"tolerance override for unknown check {cid!r}")
        for key in self.params:
            if key not in _PARAM_KEYS:
                raise ConfigError(f"unknown parameter key {key!r}")
        if self.fmt not in ("json", "text"):
            raise ConfigError(f"unknown report format {self.fmt!r}")


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    caster = _PARAM_KEYS.get(key)
    try:
        if caster is complex:
            return complex(raw.replace(" ", ""))
        if caster is int:
            return int(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for {key!r}: {raw!r}") from exc


def parse_config_text(text: str) -> SuiteConfig:
    """Flat dotted-key configuration, one `key = value` per line,
    `#` comments.  Unknown keys are rejected."""
    cfg = SuiteConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected `key = value`: {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key == "seed":
            cfg.seed = int(raw)
        elif key == "checks":
            cfg.checks = [c.strip() for c in raw.split(",") if c.strip()]
        elif key == "out":
            cfg.out = raw
        elif key == "format":
            cfg.fmt = raw
        elif key.startswith("tol."):
            cfg.tolerances[key[4:]] = float(raw)
        elif key in _PARAM_KEYS:
            cfg.params[key] = _parse_value(key, raw)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    cfg.validate()
    return cfg


# -- execution ---------------------------------------------------------------

def _rng_for(seed: int, check_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(check_id.encode())])


def list_checks() -> list:
    """Registry contents in order: (id, statement, tolerance, diagnostic)."""
    return [(s.check_id, s.statement, s.tolerance, s.diagnostic)
            for s in REGISTRY.values()]


def run_suite(cfg: SuiteConfig) -> Report:
    from . import checks  # noqa: F401  (populates REGISTRY on import)
    cfg.validate()
    selected = cfg.checks if cfg.checks is not None else list(REGISTRY)
    results = []
    n_pass = n_fail = n_diag = 0
    for cid in REGISTRY:
        if cid not in selected:
            continue
        spec = REGISTRY[cid]
        tol = cfg.tolerances.get(cid, spec.tolerance)
        rng = _rng_for(cfg.seed, cid)
        t0 = time.perf_counter()
        err = None
        residual = None
        delta = None
        details = {}
        params = {}
        try:
            out = spec.runner(cfg.params, rng)
            residual = float(out["residual"])
            delta = out.get("convergence_delta")
            details = {k: v for k, v in out.items()
                       if k not in ("residual", "convergence_delta", "parameters")}
            params = out.get("parameters", {})
        except Exception as exc:  # recorded, never aborts the suite
            err = f"{type(exc).__name__}: {exc}"
        wall = time.perf_counter() - t0
        ok = (err is None and residual is not None and residual <= tol
              and (delta is None or delta <= tol))
        if spec.diagnostic:
            n_diag += 1
        elif ok:
            n_pass += 1
        else:
            n_fail += 1
        results.append(CheckResult(
            check_id=cid, statement=spec.statement, parameters=params,
            residual=residual, tolerance=tol, passed=ok, wall_time=wall,
            diagnostic=spec.diagnostic, convergence_delta=delta,
            error=err, details=details))
    return Report(version=__version__, seed=cfg.seed,
                  config=_config_dict(cfg), results=results,
                  summary={"passed": n_pass, "failed": n_fail,
                           "diagnostic": n_diag})


def _config_dict(cfg: SuiteConfig) -> dict:
    return {
        "checks": cfg.checks,
        "seed": cfg.seed,
        "tolerances": dict(cfg.tolerances),
        "params": {k: _jsonable(v) for k, v in cfg.params.items()},
        "format": cfg.fmt,
    }


def _jsonable(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def emit_report(report: Report, fmt: str = "json") -> str:
    if fmt == "json":
        payload = {
            "version": report.version,
            "seed": report.seed,
            "config": report.config,
            "results": [_jsonable(asdict(r)) for r in report.results],
            "summary": dict(report.summary),
        }
        return json.dumps(payload, indent=2, sort_keys=False)
    if fmt != "text":
        raise ConfigError(f"unknown report format {fmt!r}")
    lines = [f"baxterchain {report.version}  seed={report.seed}",
             f"{'check':34s} {'residual':>12s} {'tol':>9s} {'time':>8s}  status"]
    for r in report.results:
        res = "   n/a" if r.residual is None else f"{r.residual:12.3e}"
        status = ("DIAG" if r.diagnostic else ("pass" if r.passed else "FAIL"))
        if r.error:
            status += f"  [{r.error}]"
        lines.append(f"{r.check_id:34s} {res:>12s} {r.tolerance:9.1e} "
                     f"{r.wall_time:7.2f}s  {status}")
    s = report.summary
    lines.append(f"passed {s['passed']}  failed {s['failed']}  "
                 f"diagnostic {s['diagnostic']}")
    return "\n".join(lines)
