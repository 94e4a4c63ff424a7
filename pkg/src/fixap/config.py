"""YAML configuration for apparatuses and sessions.

Apparatus file::

    name: my-mz
    inputs:
      - {arm: a, kind: time-bin, window: [-2, 3], source: [0, 1]}
      - {arm: b, kind: time-bin, window: [-2, 3], blocked: true}
    elements:
      - {type: BS, in: [a, b], out: [lo, up]}
      - {type: PhaseShift, arm: up, phi: pi}
      - {type: Delay, arm: up, slots: 1}
      - {type: BS, in: [lo, up], out: [s, d]}
    detectors:          # ordered; label -> meaning
      s:t0: z:0
      d:t1: x:0
    states:             # optional sender encodings, needed for sessions
      z:0: {a:t0: 1}
      x:1: {a:t0: 0.7071067811865476, a:t1: -0.7071067811865476}

Amplitudes are numbers or ``[re, im]`` pairs.  Angles accept numbers or
expressions such as ``pi``, ``-pi/2`` or ``3*pi/4``.

Session file keys: ``scheme`` (preset name) or ``apparatus`` (path),
``rounds``, ``seed``, ``adversary``, ``restriction``, ``monitor``, ``loss``,
``theta``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .hilbert import ModeLabel, StateVector, parse_basis_state, space_of
from .optics import (
    BS,
    PBS,
    PIBS,
    PR,
    Apparatus,
    ApparatusError,
    Delay,
    InputArm,
    Meaning,
    Mirror,
    OutcomeMap,
    PhaseShift,
)


class ConfigError(ValueError):
    """A configuration file could not be understood."""


_ANGLE_RE = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_angle(value) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        m = _ANGLE_RE.match(value.replace("π", "pi"))
        if m:
            coef = m.group(1)
            c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
            den = float(m.group(2)) if m.group(2) else 1.0
            return c * math.pi / den
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"cannot read angle {value!r}")


def _amp(value) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    raise ConfigError(f"cannot read amplitude {value!r}")


def _element(item: dict, k: int):
    if not isinstance(item, dict) or "type" not in item:
        raise ConfigError(f"element {k}: expected a mapping with a 'type' key, got {item!r}")
    kind = str(item["type"])
    where = f"element {k} ({kind})"
    try:
        if kind in ("PIBS", "BS"):
            cls = PIBS if kind == "PIBS" else BS
            return cls(tuple(item["in"]), tuple(item["out"]))
        if kind == "PBS":
            return PBS(str(item["arm"]), str(item["transmit"]), str(item["reflect"]))
        if kind == "PR":
            return PR(str(item["arm"]), parse_angle(item.get("theta", 0.0)))
        if kind == "PhaseShift":
            return PhaseShift(str(item["arm"]), parse_angle(item.get("phi", 0.0)))
        if kind == "Delay":
            return Delay(str(item["arm"]), item.get("slots", 1))
        if kind == "Mirror":
            return Mirror(str(item["arm"]))
    except KeyError as e:
        raise ConfigError(f"{where}: missing key {e.args[0]!r}") from None
    except (ApparatusError, TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from None
    raise ConfigError(f"{where}: unknown element type")


@dataclass
class ApparatusConfig:
    apparatus: Apparatus
    states: dict[Meaning, dict[ModeLabel, complex]] = field(default_factory=dict)


def apparatus_from_dict(data: dict) -> ApparatusConfig:
    if not isinstance(data, dict):
        raise ConfigError("apparatus config must be a mapping")
    try:
        inputs = []
        for i, port in enumerate(data.get("inputs") or []):
            try:
                window = port.get("window")
                inputs.append(InputArm(
                    str(port["arm"]),
                    port.get("kind", "polarization"),
                    tuple(window) if window is not None else None,
                    bool(port.get("blocked", False)),
                    tuple(port.get("source") or ()),
                ))
            except (KeyError, TypeError, ApparatusError) as e:
                raise ConfigError(f"input {i}: {e}") from None
        if not inputs:
            raise ConfigError("no inputs declared")
        elements = [_element(item, k) for k, item in enumerate(data.get("elements") or [])]
        det = data.get("detectors")
        if isinstance(det, dict):
            pairs = [(parse_basis_state(str(k)), Meaning.parse(v)) for k, v in det.items()]
            detectors = [b for b, _ in pairs]
            outcome_map = OutcomeMap(pairs)
        elif isinstance(det, list):
            detectors = [parse_basis_state(str(k)) for k in det]
            outcome_map = None
        else:
            raise ConfigError("'detectors' must be a list or a label -> meaning mapping")
        app = Apparatus(str(data.get("name", "custom")), tuple(inputs), tuple(elements),
                        tuple(detectors), outcome_map)
        states = {}
        for key, amps in (data.get("states") or {}).items():
            states[Meaning.parse(key)] = {
                parse_basis_state(str(lbl)).mode: _amp(a) for lbl, a in amps.items()}
    except ConfigError:
        raise
    except (ApparatusError, ValueError, TypeError, AttributeError) as e:
        raise ConfigError(str(e)) from None
    return ApparatusConfig(app, states)


def load_yaml(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from None


def load_apparatus(path) -> ApparatusConfig:
    return apparatus_from_dict(load_yaml(path))


def scheme_from_config(cfg: ApparatusConfig, monitor=()):
    from .protocol import ProtocolScheme

    if not cfg.states:
        raise ConfigError("apparatus config has no 'states'; a session needs sender encodings")
    space = space_of(cfg.apparatus.source_modes(), vacuum=False)
    states = []
    for m, amps in cfg.states.items():
        try:
            st = StateVector.from_dict(space, amps)
        except ValueError as e:
            raise ConfigError(f"state {m}: {e}") from None
        states.append((m, st))
    try:
        return ProtocolScheme(cfg.apparatus.name, cfg.apparatus, tuple(states), frozenset(monitor))
    except ValueError as e:
        raise ConfigError(str(e)) from None


@dataclass
class SessionConfig:
    scheme: Optional[str] = None
    apparatus: Optional[str] = None
    rounds: int = 100_000
    seed: Optional[int] = None
    adversary: str = "none"
    restriction: Optional[str] = None
    monitor: list = field(default_factory=list)
    loss: float = 0.0
    theta: float = 0.0

    @classmethod
    def from_dict(cls, data: dict, base: Optional[Path] = None) -> "SessionConfig":
        if not isinstance(data, dict):
            raise ConfigError("session config must be a mapping")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown session keys: {', '.join(sorted(extra))}")
        cfg = cls(**data)
        if cfg.apparatus and base is not None and not Path(cfg.apparatus).is_absolute():
            cfg.apparatus = str(base / cfg.apparatus)
        if isinstance(cfg.monitor, str):
            cfg.monitor = [t for t in cfg.monitor.split(",") if t.strip()]
        try:
            cfg.rounds = int(cfg.rounds)
            cfg.loss = float(cfg.loss)
            cfg.theta = parse_angle(cfg.theta)
            if cfg.seed is not None:
                cfg.seed = int(cfg.seed)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"session config: {e}") from None
        if cfg.adversary not in ("none", "per-outcome", "grouped"):
            raise ConfigError(f"unknown adversary {cfg.adversary!r}")
        return cfg


def load_session(path) -> SessionConfig:
    return SessionConfig.from_dict(load_yaml(path), Path(path).parent)
