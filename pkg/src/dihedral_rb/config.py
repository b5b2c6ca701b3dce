"""Experiment configuration files: strict schema and plan assembly.

Configs are YAML mappings with explicit keys; unknown keys anywhere are
rejected so typos fail loudly instead of silently running the wrong
experiment.  Example::

    mode: standard
    seed: 123
    lengths: [2, 4, 8, 16]
    sequences_per_length: 200
    shots: 0               # 0 = exact expectation values
    prep: xz+               # named state or Bloch 3-vector
    measurement: xz+
    group:
      j: 8
    noise:
      default: {kind: depolarizing, fidelity: 0.9975}
      t_coset:
        kind: composed
        children:
          - {kind: depolarizing, fidelity: 0.9975}
          - {kind: over_rotation, axis: [0, 0, 1], fidelity: 0.99}
    output:
      data_path: decay.csv
      report_path: report.txt
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import yaml

from .liouville import UnphysicalError, effect_vector, state_vector
from .noise import GateNoiseMap, NoiseSpec, depolarizing_spec, no_noise, over_rotation_spec
from .protocol import ExperimentPlan

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "NAMED_STATES"]


class ConfigError(ValueError):
    """The configuration file is malformed or violates the schema."""


_HALF_SQRT2 = 1.0 / math.sqrt(2.0)

#: Named preparations/measurements: the six Pauli eigenstates plus the
#: state halfway between +x and +z (45 degrees of latitude), which makes
#: both decay curves visible in a single run.
NAMED_STATES = {
    "z+": (0.0, 0.0, 1.0),
    "z-": (0.0, 0.0, -1.0),
    "x+": (1.0, 0.0, 0.0),
    "x-": (-1.0, 0.0, 0.0),
    "y+": (0.0, 1.0, 0.0),
    "y-": (0.0, -1.0, 0.0),
    "xz+": (_HALF_SQRT2, 0.0, _HALF_SQRT2),
}

_TOP_KEYS = {
    "mode",
    "seed",
    "lengths",
    "sequences_per_length",
    "shots",
    "prep",
    "measurement",
    "group",
    "noise",
    "output",
}


@dataclass
class ExperimentConfig:
    """A validated configuration: the plan plus its output destinations."""

    plan: ExperimentPlan
    data_path: Path
    report_path: Path
    source: Path


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}; allowed: {sorted(allowed)}")


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return mapping[key]


def _as_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    return value


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def _parse_bloch(value, where: str) -> tuple[float, float, float]:
    if isinstance(value, str):
        if value not in NAMED_STATES:
            raise ConfigError(
                f"unknown state name {value!r} in {where}; known: {sorted(NAMED_STATES)}"
            )
        return NAMED_STATES[value]
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{where} must be a state name or a Bloch 3-vector, got {value!r}")
    return tuple(_as_number(v, f"{where}[{i}]") for i, v in enumerate(value))


def _parse_axis(value, where: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{where} must be a 3-vector, got {value!r}")
    axis = [_as_number(v, f"{where}[{i}]") for i, v in enumerate(value)]
    norm = math.sqrt(sum(a * a for a in axis))
    if norm < 1e-12:
        raise ConfigError(f"{where} must be a nonzero vector")
    return tuple(a / norm for a in axis)


def _parse_noise_spec(value, where: str) -> NoiseSpec:
    spec = _as_mapping(value, where)
    kind = _require(spec, "kind", where)
    if kind == "none":
        _check_keys(spec, {"kind"}, where)
        return no_noise()
    if kind == "depolarizing":
        _check_keys(spec, {"kind", "p", "fidelity"}, where)
        if ("p" in spec) == ("fidelity" in spec):
            raise ConfigError(f"{where} needs exactly one of 'p' and 'fidelity'")
        try:
            if "p" in spec:
                return depolarizing_spec(p=_as_number(spec["p"], f"{where}.p"))
            return depolarizing_spec(fidelity=_as_number(spec["fidelity"], f"{where}.fidelity"))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    if kind == "over_rotation":
        _check_keys(spec, {"kind", "axis", "angle", "fidelity"}, where)
        axis = _parse_axis(_require(spec, "axis", where), f"{where}.axis")
        if ("angle" in spec) == ("fidelity" in spec):
            raise ConfigError(f"{where} needs exactly one of 'angle' and 'fidelity'")
        try:
            if "angle" in spec:
                return over_rotation_spec(axis, angle=_as_number(spec["angle"], f"{where}.angle"))
            return over_rotation_spec(
                axis, fidelity=_as_number(spec["fidelity"], f"{where}.fidelity")
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    if kind == "composed":
        _check_keys(spec, {"kind", "children"}, where)
        children = _require(spec, "children", where)
        if not isinstance(children, list) or not children:
            raise ConfigError(f"{where}.children must be a non-empty list")
        return NoiseSpec(
            "composed",
            children=tuple(
                _parse_noise_spec(child, f"{where}.children[{i}]")
                for i, child in enumerate(children)
            ),
        )
    raise ConfigError(
        f"unknown noise kind {kind!r} in {where}; "
        "expected none, depolarizing, over_rotation, or composed"
    )


def _parse_override_key(key, where: str) -> tuple[int, int]:
    if not isinstance(key, str) or key.count(",") != 1:
        raise ConfigError(f"override keys in {where} must look like 'z,x', got {key!r}")
    z_text, x_text = key.split(",")
    try:
        return int(z_text.strip()), int(x_text.strip())
    except ValueError:
        raise ConfigError(f"override key {key!r} in {where} is not a pair of integers") from None


def _parse_noise(value) -> GateNoiseMap:
    section = _as_mapping(value, "noise")
    _check_keys(section, {"default", "t_coset", "overrides"}, "noise")
    default = _parse_noise_spec(_require(section, "default", "noise"), "noise.default")
    t_coset = None
    if "t_coset" in section:
        t_coset = _parse_noise_spec(section["t_coset"], "noise.t_coset")
    overrides = {}
    if "overrides" in section:
        mapping = _as_mapping(section["overrides"], "noise.overrides")
        for key, spec in mapping.items():
            overrides[_parse_override_key(key, "noise.overrides")] = _parse_noise_spec(
                spec, f"noise.overrides[{key!r}]"
            )
    return GateNoiseMap(default, t_coset=t_coset, overrides=overrides)


def load_config(
    path,
    *,
    seed: Optional[int] = None,
    lengths: Optional[tuple[int, ...]] = None,
    out_dir: Optional[Path] = None,
) -> ExperimentConfig:
    """Load, validate, and assemble an experiment configuration.

    ``seed`` and ``lengths`` override the file's values; ``out_dir``
    re-roots relative output paths.  Schema violations raise
    :class:`ConfigError`; physically impossible models (a preparation
    outside the Bloch ball, a non-CPTP channel) raise
    :class:`~dihedral_rb.liouville.UnphysicalError`.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    top = _as_mapping(raw, "the config file")
    _check_keys(top, _TOP_KEYS, "the config file")

    mode = _require(top, "mode", "the config file")
    if mode not in ("standard", "interleaved"):
        raise ConfigError(f"mode must be 'standard' or 'interleaved', got {mode!r}")

    group = _as_mapping(_require(top, "group", "the config file"), "group")
    _check_keys(group, {"j"}, "group")
    j = _as_int(_require(group, "j", "group"), "group.j")
    if j < 1:
        raise ConfigError(f"group.j must be a positive integer, got {j}")

    if seed is None:
        seed = _as_int(_require(top, "seed", "the config file"), "seed")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")

    if lengths is None:
        raw_lengths = _require(top, "lengths", "the config file")
        if not isinstance(raw_lengths, list) or not raw_lengths:
            raise ConfigError("lengths must be a non-empty list of integers")
        lengths = tuple(_as_int(m, f"lengths[{i}]") for i, m in enumerate(raw_lengths))

    k = _as_int(_require(top, "sequences_per_length", "the config file"), "sequences_per_length")
    shots = _as_int(top.get("shots", 0), "shots")
    if shots < 0:
        raise ConfigError(f"shots must be 0 (exact mode) or positive, got {shots}")

    prep_bloch = _parse_bloch(_require(top, "prep", "the config file"), "prep")
    meas_bloch = _parse_bloch(_require(top, "measurement", "the config file"), "measurement")

    noise = _parse_noise(_require(top, "noise", "the config file"))

    output = _as_mapping(_require(top, "output", "the config file"), "output")
    _check_keys(output, {"data_path", "report_path"}, "output")
    data_path = Path(str(_require(output, "data_path", "output")))
    report_path = Path(str(_require(output, "report_path", "output")))
    if out_dir is not None:
        out_dir = Path(out_dir)
        if not data_path.is_absolute():
            data_path = out_dir / data_path
        if not report_path.is_absolute():
            report_path = out_dir / report_path

    try:
        plan = ExperimentPlan(
            j=j,
            mode=mode,
            lengths=tuple(lengths),
            sequences_per_length=k,
            shots=shots,
            prep=state_vector(prep_bloch),
            measurement=effect_vector(meas_bloch),
            noise=noise,
            seed=seed,
        )
    except UnphysicalError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(plan=plan, data_path=data_path, report_path=report_path, source=path)
