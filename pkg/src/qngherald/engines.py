"""Dispatch from an engine name to the pulse map it produces."""

from __future__ import annotations

import enum

from qngherald.cavity import PulseSpec, pulse_map_rwa
from qngherald.errors import ConfigError
from qngherald.freespace import pulse_map_freespace
from qngherald.fullqle import CouplingProfile, pulse_map_full
from qngherald.gaussian import SystemParams
from qngherald.lyapunov import PulseMap


class Engine(str, enum.Enum):
    RWA = "rwa"
    FULL = "full"
    FREESPACE = "freespace"


def pulse_map(
    params: SystemParams,
    pulse: PulseSpec,
    engine: Engine | str = Engine.RWA,
    profile: CouplingProfile | None = None,
    mode_shape: str = "red",
) -> PulseMap:
    try:
        engine = Engine(engine)
    except ValueError:
        raise ConfigError(f"unknown engine {engine!r}", path="engine") from None
    if engine is Engine.RWA:
        return pulse_map_rwa(params, pulse)
    if engine is Engine.FULL:
        return pulse_map_full(params, pulse, profile, mode_shape=mode_shape)
    return pulse_map_freespace(pulse.resolve(params), pulse.tau)
