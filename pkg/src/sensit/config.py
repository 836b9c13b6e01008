"""Run configurations: JSON parsing, defaults, validation, canonical hashing.

Configs are plain JSON objects.  Time-like fields carry a ``_us`` suffix and
are microseconds; coupling scales are krad/s; variances are rad^2/s^2.  All
referenced model pieces are constructed once during validation so that a bad
config fails before any computation starts.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .ou import OuParams
from .sequences import ModulationFunction, SdrParams, make_cpmg, make_hahn, make_sdr, time_reverse
from .spinbath import MAX_ENV_SPINS, SpinBathSystem, build_system, sphere_bath

VALID_EXPERIMENTS = ("sweep", "quench_decay", "preparation_scan", "scrambling_scan")
SEQUENCE_TYPES = ("hahn", "cpmg", "sdr", "tsdr")

_SEQUENCE_DEFAULTS = {"type": "sdr", "n_pulses": 12, "x": 0.5, "sensing_time_us": 750.0}


class ConfigError(ValueError):
    """Configuration problem, tagged with the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"config error at {field}: {message}")


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved and validated run description."""

    experiment: str
    seed: int
    data: dict

    def with_seed(self, seed: int) -> "RunConfig":
        data = copy.deepcopy(self.data)
        data["seed"] = int(seed)
        return validate_dict(data)


def _require(d: dict, field: str, path: str):
    if field not in d:
        raise ConfigError(f"{path}.{field}" if path else field, "missing required field")
    return d[field]


def _number(d: dict, field: str, path: str, minimum=None, strict=False):
    val = _require(d, field, path)
    loc = f"{path}.{field}" if path else field
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(loc, f"expected a number, got {val!r}")
    if minimum is not None:
        if strict and not val > minimum:
            raise ConfigError(loc, f"must be > {minimum}, got {val}")
        if not strict and not val >= minimum:
            raise ConfigError(loc, f"must be >= {minimum}, got {val}")
    return float(val)


def _integer(d: dict, field: str, path: str, minimum=None):
    val = _require(d, field, path)
    loc = f"{path}.{field}" if path else field
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(loc, f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(loc, f"must be >= {minimum}, got {val}")
    return int(val)


def _check_keys(d: dict, allowed, path: str):
    for key in d:
        if key not in allowed:
            raise ConfigError(
                f"{path}.{key}" if path else key,
                f"unknown field; expected one of {sorted(allowed)}",
            )


def sequence_from_spec(spec: dict, sensing_time: float | None = None) -> ModulationFunction:
    """Build the modulation described by a sequence spec.

    ``sensing_time`` (seconds) overrides the spec's own duration; used by
    experiments that sweep the sensing time.
    """
    kind = spec["type"]
    t_s = sensing_time if sensing_time is not None else spec["sensing_time_us"] * 1e-6
    if kind == "hahn":
        return make_hahn(t_s)
    if kind == "cpmg":
        return make_cpmg(spec["n_pulses"], t_s)
    m = make_sdr(SdrParams(spec["n_pulses"], spec["x"], t_s))
    if kind == "tsdr":
        m = time_reverse(m)
    return m


def ou_from_spec(spec: dict) -> OuParams:
    return OuParams(
        tau=spec["tau_us"] * 1e-6,
        sigma0=spec["sigma0"],
        sigma_init=spec["sigma_init"],
    )


def bath_from_spec(spec: dict) -> SpinBathSystem:
    if spec["geometry"] == "sphere":
        return sphere_bath(
            spec["n_env"],
            spec["seed"],
            spec["coupling_scale_krad_s"] * 1e3,
            spec.get("min_separation", 0.5),
        )
    return build_system(
        spec["d_i"],
        spec["d_ij"],
        spec.get("noise_class", "magnetic"),
    )


def _validate_sequence(seq: dict, path: str = "sequence") -> dict:
    _check_keys(seq, {"type", "n_pulses", "x", "sensing_time_us"}, path)
    out = dict(_SEQUENCE_DEFAULTS)
    out.update(seq)
    if out["type"] not in SEQUENCE_TYPES:
        raise ConfigError(f"{path}.type", f"expected one of {SEQUENCE_TYPES}, got {out['type']!r}")
    _number(out, "sensing_time_us", path, minimum=0.0, strict=True)
    if out["type"] != "hahn":
        _integer(out, "n_pulses", path, minimum=1)
    if out["type"] in ("sdr", "tsdr"):
        n = out["n_pulses"]
        if n < 2:
            raise ConfigError(f"{path}.n_pulses", f"sdr needs n_pulses >= 2, got {n}")
        x = _number(out, "x", path, minimum=0.0)
        if x > (n - 1) / n:
            raise ConfigError(f"{path}.x", f"must be <= {(n - 1) / n} for n_pulses={n}")
    try:
        sequence_from_spec(out)
    except ValueError as exc:  # pragma: no cover - guarded by checks above
        raise ConfigError(path, str(exc)) from exc
    return out


def _validate_noise(noise: dict) -> dict:
    _check_keys(noise, {"type", "tau_us", "sigma0", "sigma_init"}, "noise")
    out = {"type": "ou"}
    out.update(noise)
    if out["type"] != "ou":
        raise ConfigError("noise.type", f"expected 'ou', got {out['type']!r}")
    _number(out, "tau_us", "noise", minimum=0.0, strict=True)
    _number(out, "sigma0", "noise", minimum=0.0)
    _number(out, "sigma_init", "noise", minimum=0.0)
    try:
        ou_from_spec(out)
    except ValueError as exc:  # pragma: no cover
        raise ConfigError("noise", str(exc)) from exc
    return out


def _validate_bath(bath: dict) -> dict:
    _check_keys(
        bath,
        {"geometry", "n_env", "seed", "coupling_scale_krad_s", "min_separation",
         "d_i", "d_ij", "noise_class"},
        "bath",
    )
    out = {"geometry": "sphere"}
    out.update(bath)
    if out["geometry"] not in ("sphere", "explicit"):
        raise ConfigError("bath.geometry", f"expected 'sphere' or 'explicit', got {out['geometry']!r}")
    if out["geometry"] == "sphere":
        n = _integer(out, "n_env", "bath", minimum=1)
        if n > MAX_ENV_SPINS:
            raise ConfigError("bath.n_env", f"must be <= {MAX_ENV_SPINS}, got {n}")
        _integer(out, "seed", "bath", minimum=0)
        _number(out, "coupling_scale_krad_s", "bath", minimum=0.0, strict=True)
    else:
        _require(out, "d_i", "bath")
        _require(out, "d_ij", "bath")
    try:
        bath_from_spec(out)
    except (ValueError, RuntimeError) as exc:
        raise ConfigError("bath", str(exc)) from exc
    return out


def _validate_mc(mc: dict) -> dict:
    _check_keys(mc, {"n_traj", "seed", "grid_factor"}, "mc")
    out = {"grid_factor": 50}
    out.update(mc)
    _integer(out, "n_traj", "mc", minimum=1)
    if "seed" in out:
        _integer(out, "seed", "mc", minimum=0)
    _integer(out, "grid_factor", "mc", minimum=1)
    return out


def _validate_time_list(grids: dict, field: str, minimum: float, strict: bool) -> list:
    val = _require(grids, field, "grids")
    loc = f"grids.{field}"
    if not isinstance(val, list) or not val:
        raise ConfigError(loc, "expected a non-empty list of times")
    for t in val:
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise ConfigError(loc, f"expected numbers, got {t!r}")
        if strict and not t > minimum:
            raise ConfigError(loc, f"entries must be > {minimum}")
        if not strict and not t >= minimum:
            raise ConfigError(loc, f"entries must be >= {minimum}")
    return [float(t) for t in val]


def validate_dict(raw: dict) -> RunConfig:
    """Apply defaults and validate a parsed config object."""
    if not isinstance(raw, dict):
        raise ConfigError("/", "top-level config must be a JSON object")
    _check_keys(
        raw,
        {"experiment", "seed", "sequence", "noise", "bath", "mc", "state", "grids", "output"},
        "",
    )
    experiment = raw.get("experiment")
    if experiment not in VALID_EXPERIMENTS:
        raise ConfigError(
            "experiment",
            f"unknown experiment {experiment!r}; valid selectors: {', '.join(VALID_EXPERIMENTS)}",
        )

    data: dict = {"experiment": experiment}
    data["seed"] = _integer({"seed": raw.get("seed", 0)}, "seed", "", minimum=0)
    data["sequence"] = _validate_sequence(raw.get("sequence", {}))
    if experiment != "quench_decay" and data["sequence"]["type"] != "sdr":
        raise ConfigError(
            "sequence.type",
            f"{experiment} sweeps the sdr family; got {data['sequence']['type']!r}",
        )

    has_noise = "noise" in raw
    has_bath = "bath" in raw
    if experiment == "quench_decay" and not has_noise:
        raise ConfigError("noise", "quench_decay needs a classical noise spec")
    if experiment in ("preparation_scan", "scrambling_scan") and not has_bath:
        raise ConfigError("bath", f"{experiment} needs a bath spec")
    if experiment == "sweep" and has_noise == has_bath:
        raise ConfigError("noise", "sweep needs exactly one of 'noise' or 'bath'")
    if has_noise and has_bath:
        raise ConfigError("bath", "give either 'noise' or 'bath', not both")

    if has_noise:
        data["noise"] = _validate_noise(raw["noise"])
    if has_bath:
        data["bath"] = _validate_bath(raw["bath"])

    if "mc" in raw:
        if experiment != "sweep" or not has_noise:
            raise ConfigError("mc", "Monte Carlo controls apply only to classical sweeps")
        data["mc"] = _validate_mc(raw["mc"])

    grids = dict(raw.get("grids", {}))
    _check_keys(grids, {"x_points", "ts_us", "tp_us", "te_us", "phi_points"}, "grids")
    if experiment in ("sweep", "preparation_scan", "scrambling_scan"):
        grids.setdefault("x_points", 12)
        _integer(grids, "x_points", "grids", minimum=2)
    if experiment == "quench_decay":
        grids["ts_us"] = _validate_time_list(grids, "ts_us", 0.0, strict=True)
    if experiment == "preparation_scan":
        grids["tp_us"] = _validate_time_list(grids, "tp_us", 0.0, strict=False)
        if "phi_points" in grids:
            _integer(grids, "phi_points", "grids", minimum=2)
    if experiment == "scrambling_scan":
        grids["te_us"] = _validate_time_list(grids, "te_us", 0.0, strict=False)
    data["grids"] = grids

    if experiment == "scrambling_scan" or (experiment == "sweep" and has_bath):
        state = dict(raw.get("state", {}))
        _check_keys(state, {"tp_us", "te_us"}, "state")
        if experiment == "scrambling_scan":
            _number(state, "tp_us", "state", minimum=0.0, strict=True)
        else:
            _number(state, "tp_us", "state", minimum=0.0)
            state.setdefault("te_us", 0.0)
            _number(state, "te_us", "state", minimum=0.0)
        data["state"] = state
    elif "state" in raw:
        raise ConfigError("state", f"state preparation does not apply to {experiment}")

    output = dict(raw.get("output", {}))
    _check_keys(output, {"basename"}, "output")
    output.setdefault("basename", experiment)
    if not isinstance(output["basename"], str) or not output["basename"]:
        raise ConfigError("output.basename", "expected a non-empty string")
    data["output"] = output

    return RunConfig(experiment=experiment, seed=data["seed"], data=data)


def parse_config(path) -> RunConfig:
    """Read and validate a JSON config file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError("/", f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("/", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return validate_dict(raw)


def canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_json(cfg.data).encode("utf-8")).hexdigest()


def write_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
