"""Experiment configuration: parsing (key=value sections or JSON) and
cross-field admissibility validation."""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field, fields

import numpy as np

from .drifts import DriftSpec, hardy_drift
from .errors import AdmissibilityError, ConfigurationError
from .formbound import admissible_delta_threshold

SCENARIOS = (
    "evolution_verify",
    "formbound_audit",
    "full_suite",
    "resolvent_verify",
    "sampler_check",
    "sde_identify",
    "weighted_verify",
)

# anchors name the mathematical object each scenario exercises
SCENARIO_ANCHORS = {
    "sampler_check": "stable increment law: characteristic exponent exp(-t|k|^alpha)",
    "formbound_audit": "drift classes: weak form-bound and Kato-norm estimates",
    "resolvent_verify": "perturbed resolvent factorizations and L^p potential bounds",
    "weighted_verify": "polynomial-weight resolvent estimates and conjugated generator",
    "evolution_verify": "drifted semigroup: perturbation identity, mass, approximation",
    "sde_identify": "path law: Monte Carlo semigroup match and noise recovery",
    "full_suite": "all checks in dependency order",
}


@dataclass
class ExperimentConfig:
    """Validated experiment description (defaults form the desk pack)."""

    scenario: str = "full_suite"
    dim: int = 3
    alpha: float = 1.5
    delta: float = 0.05
    nu: float = 0.675
    p: float = 5.0
    q: float = 6.0
    r: float = 2.0
    grid_n: int = 32
    half_length: float = 8.0
    lambda_ladder: tuple = (0.1, 0.01, 0.001)
    mu_ladder: tuple = (1e2, 1e3, 1e4)
    t_list: tuple = (0.1, 0.25, 0.5)
    n_paths: int = 20000
    dt: float = 0.0125
    seed: int = 20240801
    drift: DriftSpec = None
    m_constant: float = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        if self.drift is None:
            self.drift = hardy_drift(self.delta, self.alpha, self.dim)

    def validate(self, m_constant: float) -> None:
        """Cross-field admissibility; raises AdmissibilityError citing the
        violated hypothesis."""
        self.m_constant = m_constant
        adm = admissible_delta_threshold(self.dim, self.alpha, m_constant)
        if self.delta >= adm.threshold:
            raise AdmissibilityError(
                f"delta = {self.delta} violates the admissibility hypothesis "
                f"on the weak form-bound: delta < 4/m * min((d-a)/(d-a+1)^2, "
                f"a(d+a)/(d+2a)^2) = {adm.threshold:.4f}")
        p_minus, p_plus = adm.p_interval(self.delta)
        if not (p_minus < self.p < p_plus):
            raise AdmissibilityError(
                f"p = {self.p} outside the admissible exponent interval "
                f"({p_minus:.4f}, {p_plus:.4f})")
        floor = max(self.dim - self.alpha + 1.0,
                    self.dim / (2.0 * self.nu) + 2.0)
        if self.p <= floor:
            raise AdmissibilityError(
                f"p = {self.p} must exceed (d-alpha+1) v (d/(2 nu)+2) "
                f"= {floor:.4f} for the weighted estimates")
        if not (1.0 < self.r < self.p < self.q):
            raise AdmissibilityError("need 1 < r < p < q")

    def quick(self) -> "ExperimentConfig":
        """Halved grids and path counts."""
        clone = ExperimentConfig(**{f.name: getattr(self, f.name)
                                    for f in fields(self)})
        clone.grid_n = max(16, self.grid_n // 2)
        clone.n_paths = max(1000, self.n_paths // 2)
        return clone

    def as_dict(self) -> dict:
        doc = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "drift":
                doc[f.name] = None if val is None else json.loads(val.to_json())
            elif isinstance(val, tuple):
                doc[f.name] = list(val)
            else:
                doc[f.name] = val
        return doc


_FLOAT_FIELDS = {"alpha", "delta", "nu", "p", "q", "r", "half_length", "dt"}
_INT_FIELDS = {"dim", "grid_n", "n_paths", "seed"}
_LIST_FIELDS = {"lambda_ladder", "mu_ladder", "t_list"}


def _coerce(name: str, value):
    if name in _FLOAT_FIELDS:
        return float(value)
    if name in _INT_FIELDS:
        return int(value)
    if name in _LIST_FIELDS:
        if isinstance(value, str):
            value = [v for v in value.replace(",", " ").split() if v]
        return tuple(float(v) for v in value)
    return value


def parse_config(text: str) -> ExperimentConfig:
    """Parse a config document: JSON (object) or sectioned key=value."""
    text = text.strip()
    if not text:
        raise ConfigurationError("empty configuration")
    if text.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON config: {exc}") from exc
        return _config_from_mapping(doc)
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"invalid config: {exc}") from exc
    doc = {}
    if parser.has_section("experiment"):
        doc.update(dict(parser.items("experiment")))
    if parser.has_section("parameters"):
        doc.update(dict(parser.items("parameters")))
    if parser.has_section("drift"):
        drift_doc = dict(parser.items("drift"))
        kind = drift_doc.pop("kind", "hardy")
        params = {k: float(v) for k, v in drift_doc.items()}
        doc["drift"] = {"kind": kind, "parameters": params}
    return _config_from_mapping(doc)


def _config_from_mapping(doc: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, value in doc.items():
        if key not in known:
            raise ConfigurationError(f"unknown config key {key!r}")
        if key == "drift":
            kwargs[key] = _drift_from_doc(value) if value else None
        elif key == "m_constant":
            kwargs[key] = None if value is None else float(value)
        else:
            kwargs[key] = _coerce(key, value)
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def _drift_from_doc(doc) -> DriftSpec:
    if isinstance(doc, DriftSpec):
        return doc
    kind = doc.get("kind", "hardy")
    params = dict(doc.get("parameters", {}))
    if kind == "hardy":
        return hardy_drift(params.get("delta", 0.05),
                           params.get("alpha", 1.5),
                           int(params.get("dim", 3)))
    return DriftSpec(kind=kind, parameters=params,
                     singular_points=doc.get("singular_points", []))


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def reference_m_constant(alpha: float, dim: int) -> float:
    """Gradient-comparison constant used for admissibility checks, from a
    fixed sample of the radial quadratures."""
    from .kernels import estimate_gradient_constant

    mus = np.geomspace(0.2, 50.0, 5)
    rs = np.geomspace(0.1, 10.0, 7)
    est = estimate_gradient_constant(alpha, dim,
                                     [(m, r) for m in mus for r in rs])
    return est.m_est
