"""Experiment configuration: TOML files, schema validation, object builders."""

import sys

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .bayes import SensorDesign, flat_prior, gaussian_prior
from .measurement import (basis_jy, basis_jz, basis_parity,
                          basis_parity_quadrature, basis_phase_op,
                          basis_quadrature)
from .states import (SqueezingParentParams, css, ghz, ghz_balanced,
                     oat_quench, sine_state, sss_ground)


class ConfigError(Exception):
    """Invalid configuration; message names the offending key."""


EXPERIMENT_KINDS = ("response", "estimation", "dynamic-range", "oqi",
                    "multi-ensemble", "decay-scan", "allan-qcrb", "clock-run",
                    "xxz-squeezing")

_REAL = (int, float)

# field name -> (types, required)
_SENSOR_SCHEMA = {
    "state": (str, True),
    "n_atoms": (int, True),
    "ratio": (_REAL, False),
    "chi_t": (_REAL, False),
    "basis": (str, True),
    "quadrature_angle": (_REAL, False),
}

_PRIOR_SCHEMA = {
    "kind": (str, True),
    "delta2": (_REAL, False),
    "mean": (_REAL, False),
    "lo": (_REAL, False),
    "hi": (_REAL, False),
    "nodes": (int, False),
}

_NOISE_SCHEMA = {
    "alpha": (int, True),
    "h_alpha": (_REAL, True),
    "sample_rate": (_REAL, True),
}

_SCHEMAS = {
    "response": {
        "sensor": (dict, True),
        "phi_min": (_REAL, True),
        "phi_max": (_REAL, True),
        "points": (int, True),
    },
    "estimation": {
        "sensor": (dict, True),
        "estimator": (str, True),
        "repetitions": (list, True),
        "trials": (int, True),
        "phi_min": (_REAL, True),
        "phi_max": (_REAL, True),
        "points": (int, True),
        "search_lo": (_REAL, False),
        "search_hi": (_REAL, False),
    },
    "dynamic-range": {
        "n_atoms": (int, True),
        "designs": (list, True),
        "delta2_min": (_REAL, True),
        "delta2_max": (_REAL, True),
        "points": (int, True),
        "include_oqi": (bool, False),
    },
    "oqi": {
        "n_atoms": (int, True),
        "prior": (dict, True),
        "tol": (_REAL, False),
        "max_iter": (int, False),
    },
    "multi-ensemble": {
        "scheme": (str, True),
        "n_total": (int, False),
        "n_groups": (int, False),
        "n_pairs": (int, False),
        "delta2_min": (_REAL, True),
        "delta2_max": (_REAL, True),
        "points": (int, True),
        "include_optimal": (bool, False),
    },
    "decay-scan": {
        "n_atoms": (int, True),
        "states": (list, True),
        "t_min": (_REAL, True),
        "t_max": (_REAL, True),
        "points": (int, True),
        "phi_offset": (_REAL, False),
    },
    "allan-qcrb": {
        "n_atoms": (int, True),
        "states": (list, True),
        "t_min": (_REAL, True),
        "t_max": (_REAL, True),
        "points": (int, True),
    },
    "clock-run": {
        "sensor": (dict, False),
        "estimator": (str, False),
        "noise": (dict, True),
        "omega0": (_REAL, True),
        "interrogation": (_REAL, True),
        "dead_time": (_REAL, True),
        "gain": (_REAL, True),
        "cycles": (int, True),
    },
    "xxz-squeezing": {
        "extents": (list, True),
        "alpha": (_REAL, True),
        "chi": (_REAL, True),
        "chi_prime": (_REAL, True),
        "t_min": (_REAL, True),
        "t_max": (_REAL, True),
        "points": (int, True),
    },
}

_COMMON = {"experiment": (str, True), "seed": (int, False),
           "out": (str, False)}


def load_config(path):
    try:
        with open(path, "rb") as fh:
            return _toml.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}") from exc


def _check_block(block, schema, prefix):
    for key, value in block.items():
        if key not in schema:
            raise ConfigError(f"unknown key {prefix}{key}")
        types, _ = schema[key]
        if isinstance(value, bool) and types is not bool and bool not in (
                types if isinstance(types, tuple) else (types,)):
            raise ConfigError(f"{prefix}{key} has wrong type (bool)")
        if not isinstance(value, types):
            raise ConfigError(
                f"{prefix}{key} has wrong type {type(value).__name__}")
    for key, (types, required) in schema.items():
        if required and key not in block:
            raise ConfigError(f"missing required key {prefix}{key}")


def validate_config(cfg):
    """Schema-validate a parsed config; returns (kind, cfg)."""
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a table")
    kind = cfg.get("experiment")
    if kind is None:
        raise ConfigError("missing required key experiment")
    if kind not in _SCHEMAS:
        raise ConfigError(f"experiment must be one of {EXPERIMENT_KINDS}, "
                          f"got {kind!r}")
    schema = {**_COMMON, **_SCHEMAS[kind]}
    _check_block(cfg, schema, "")
    if "sensor" in cfg and isinstance(cfg["sensor"], dict):
        _check_block(cfg["sensor"], _SENSOR_SCHEMA, "sensor.")
        build_state(cfg["sensor"])  # raises ConfigError on bad names
    if "prior" in cfg and isinstance(cfg["prior"], dict):
        _check_block(cfg["prior"], _PRIOR_SCHEMA, "prior.")
        build_prior(cfg["prior"])
    if "noise" in cfg and isinstance(cfg["noise"], dict):
        _check_block(cfg["noise"], _NOISE_SCHEMA, "noise.")
        if cfg["noise"]["alpha"] not in (-1, 0, 1):
            raise ConfigError("noise.alpha must be -1, 0 or +1")
        if cfg["noise"]["h_alpha"] <= 0:
            raise ConfigError("noise.h_alpha must be positive")
    _validate_numbers(cfg)
    return kind, cfg


def _validate_numbers(cfg):
    for key in ("delta2_min", "delta2_max"):
        if key in cfg and cfg[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    if "prior" in cfg and isinstance(cfg["prior"], dict):
        p = cfg["prior"]
        if p.get("kind") == "gaussian" and p.get("delta2", 1.0) <= 0:
            raise ConfigError("prior.delta2 must be positive")
    if "points" in cfg and cfg["points"] < 1:
        raise ConfigError("points must be >= 1")
    if "trials" in cfg and cfg["trials"] < 1:
        raise ConfigError("trials must be >= 1")


def build_state(sensor):
    """Probe state from a sensor block."""
    name = sensor["state"]
    n = sensor["n_atoms"]
    if n < 1:
        raise ConfigError("sensor.n_atoms must be >= 1")
    if name == "css":
        return css(n)
    if name == "ghz":
        return ghz(n)
    if name == "ghz_balanced":
        return ghz_balanced(n)
    if name == "sine":
        return sine_state(n)
    if name == "sss":
        if "ratio" not in sensor:
            raise ConfigError("sensor.ratio required for sss states")
        return sss_ground(SqueezingParentParams(n, float(sensor["ratio"])))
    if name == "oat":
        if "chi_t" not in sensor:
            raise ConfigError("sensor.chi_t required for oat states")
        return oat_quench(n, float(sensor["chi_t"]))
    raise ConfigError(f"sensor.state unknown: {name!r}")


def build_basis(sensor):
    name = sensor["basis"]
    n = sensor["n_atoms"]
    if name == "jy":
        return basis_jy(n)
    if name == "jz":
        return basis_jz(n)
    if name == "parity_x":
        return basis_parity(n, "x")
    if name == "parity_plus":
        return basis_parity(n, "plus")
    if name == "parity_minus":
        return basis_parity(n, "minus")
    if name == "parity_quad_plus":
        return basis_parity_quadrature(n, +1)
    if name == "parity_quad_minus":
        return basis_parity_quadrature(n, -1)
    if name == "phase_op":
        return basis_phase_op(n)
    if name == "quadrature":
        return basis_quadrature(n, float(sensor.get("quadrature_angle",
                                                    np.pi / 4)))
    raise ConfigError(f"sensor.basis unknown: {name!r}")


def build_design(sensor):
    return SensorDesign(build_state(sensor), build_basis(sensor))


def build_prior(prior):
    kind = prior.get("kind")
    nodes = int(prior.get("nodes", 513))
    if kind == "gaussian":
        if "delta2" not in prior:
            raise ConfigError("missing required key prior.delta2")
        if prior["delta2"] <= 0:
            raise ConfigError("prior.delta2 must be positive")
        return gaussian_prior(float(prior["delta2"]),
                              mean=float(prior.get("mean", 0.0)),
                              n_nodes=nodes)
    if kind == "flat":
        if "lo" not in prior or "hi" not in prior:
            raise ConfigError("flat prior needs prior.lo and prior.hi")
        return flat_prior(float(prior["lo"]), float(prior["hi"]),
                          n_nodes=nodes)
    raise ConfigError(f"prior.kind unknown: {kind!r}")
