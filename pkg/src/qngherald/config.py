"""Scenario configuration: YAML documents layered over embedded defaults."""

from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from qngherald.cavity import PulseSpec
from qngherald.engines import Engine
from qngherald.errors import ConfigError
from qngherald.fullqle import CouplingProfile
from qngherald.gaussian import Cavity, Detuning, MechInitState, Particle, SystemParams, Tweezer, derive_physical_rates

MAX_AXES = 3

# Rates are in units of the reference rate (kappa for the cavity, omega_m in free space).
DEFAULTS_YAML = """\
units:
  reference: kappa
engine: rwa
system:
  kappa: 1.0
  gamma: 0.0
  nbar: 0.0
  heating: null        # gamma * nbar; when set, nbar = heating / gamma
  g: 0.02
  omega_m: 0.0
  Gamma_ba: 0.0
  detuning: blue
physical: null
initial:
  n0: 0.0
  r: 0.0
  phi0: 0.0
pulses:
  - tau: 2.0
    detuning: null
    g: null
    profile: null
detector:
  eta: 1.0
analysis:
  nmax: 40
  orders: [1, 2, 3]
  basis: fock          # fock | initial | optimal | {r: .., phi: ..}
  depth: null          # {nbar: 100, witnesses: [qng1, nonclassical]}
  sensing: null        # {Nc: [...], kmax: 2, M: 500}
  readout: null        # {tau: swap | float, g: 0.6, eta: [1.0], nmax: 30}
  threshold:
    starts: 64
    seed: 20240611
sweep: []
"""

PRESETS_YAML = """\
cavity:
  units: {reference: kappa}
  engine: rwa
  system: {kappa: 1.0, g: 0.02, omega_m: 10.0, heating: 0.0, detuning: blue}
  pulses: [{tau: 2.0}]
cavity-experiment:
  units: {reference: kappa}
  engine: full
  system: {kappa: 1.0, g: 0.62, omega_m: 1.96, heating: 0.06, detuning: blue}
  pulses: [{tau: 2.0}]
freespace:
  units: {reference: omega_m}
  engine: freespace
  system: {kappa: 1.0, omega_m: 1.0, gamma: 0.0054, nbar: 1.0, Gamma_ba: 0.0082, g: 0.0}
  pulses: [{tau: 1.0}]
  initial: {n0: 0.01}
"""

# Particle, tweezer and cavity inputs solved to reproduce the experimental rate ratios.
PHYSICAL_PRESETS_YAML = """\
cavity:
  reference_rate: 603185.7894892403      # kappa = 2π × 96 kHz
  kappa: 603185.7894892403
  gamma_nbar: 37699.11184307752         # 2π × 6 kHz
  particle: {radius: 71.5e-9, density: 1850.0, permittivity: 2.07}
  tweezer: {power: 1.2363986015335833, waist: 1.0e-6, wavelength: 1.55e-6}
  cavity: {waist: 7.762651271656458e-05, length: 1.07e-2}
freespace:
  reference_rate: null                  # omega_m
  gamma: 251.32741228718345             # 2π × 40 Hz
  particle: {radius: 5.371163094444659e-08, density: 1850.0, permittivity: 2.07}
  tweezer: {power: 0.1837665920066769, waist: 1.0e-6, wavelength: 1.064e-6}
  cavity: null
"""


def defaults() -> dict:
    return yaml.safe_load(DEFAULTS_YAML)


def presets() -> dict:
    return yaml.safe_load(PRESETS_YAML)


def physical_presets() -> dict:
    return yaml.safe_load(PHYSICAL_PRESETS_YAML)


def deep_merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        p = f"{path}.{k}" if path else k
        if k not in out:
            raise ConfigError("unknown key", path=p)
        if isinstance(out[k], dict) and isinstance(v, dict):
            out[k] = deep_merge(out[k], v, p)
        else:
            out[k] = copy.deepcopy(v)
    return out


# ---------------------------------------------------------------------------
# typed view


@dataclass(frozen=True)
class PulseEntry:
    spec: PulseSpec
    profile: CouplingProfile | None = None


@dataclass(frozen=True)
class DepthConfig:
    nbar: float = 100.0
    witnesses: tuple[str, ...] = ("qng1", "nonclassical")


@dataclass(frozen=True)
class SensingConfig:
    Nc: tuple[float, ...]
    kmax: int = 2
    M: int = 500


@dataclass(frozen=True)
class ReadoutConfig:
    tau: float | str = "swap"
    g: float = 0.6
    eta: tuple[float, ...] = (1.0,)
    nmax: int = 30


@dataclass(frozen=True)
class Axis:
    path: str
    values: tuple


@dataclass(frozen=True)
class ScenarioConfig:
    raw: dict = field(compare=False, repr=False)
    engine: Engine
    system: SystemParams
    initial: MechInitState
    pulses: tuple[PulseEntry, ...]
    eta: tuple[float, ...]
    nmax: int
    orders: tuple[int, ...]
    basis: Any
    depth: DepthConfig | None
    sensing: SensingConfig | None
    readout: ReadoutConfig | None
    threshold_starts: int
    threshold_seed: int
    sweep: tuple[Axis, ...]
    reference: str = "kappa"


def _num(d: dict, key: str, path: str, *, lo: float | None = 0.0, strict: bool = False, allow_none=False):
    v = d.get(key)
    p = f"{path}.{key}"
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", path=p)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError("must be finite", path=p)
    if lo is not None and (v <= lo if strict else v < lo):
        raise ConfigError(f"must be {'>' if strict else '>='} {lo}, got {v!r}", path=p)
    return v


def _int(d: dict, key: str, path: str, lo: int = 0) -> int:
    v = d.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(f"expected an integer >= {lo}, got {v!r}", path=f"{path}.{key}")
    return v


def _enum(cls, v, path: str):
    try:
        return cls(v)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigError(f"expected one of {choices}, got {v!r}", path=path) from None


def _system(raw: dict) -> SystemParams:
    s = raw["system"]
    if raw.get("physical"):
        return _physical_system(raw["physical"], s, raw["units"]["reference"])
    kw = {k: _num(s, k, "system") for k in ("kappa", "g", "omega_m", "Gamma_ba")}
    kw["detuning"] = _enum(Detuning, s.get("detuning"), "system.detuning")
    gamma, nbar = _num(s, "gamma", "system"), _num(s, "nbar", "system")
    heating = _num(s, "heating", "system", allow_none=True)
    if heating is not None:
        return SystemParams.with_heating(heating, gamma=gamma or 1e-6, **kw)
    return SystemParams(gamma=gamma, nbar=nbar, **kw)


def _physical_system(ph: dict, s: dict, reference: str) -> SystemParams:
    """Rates from particle/tweezer/cavity properties, scaled by the reference rate."""
    try:
        particle = Particle(**ph["particle"])
        tweezer = Tweezer(**ph["tweezer"])
        cav = Cavity(**ph["cavity"]) if ph.get("cavity") else None
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"incomplete physical block ({exc})", path="physical") from None
    kappa = float(ph.get("kappa") or 0.0)
    gamma = float(ph.get("gamma") or 0.0)
    rates = derive_physical_rates(particle, tweezer, cav, kappa=kappa, gamma=gamma)
    ref = ph.get("reference_rate") or (rates.kappa if reference == "kappa" else rates.omega_m)
    if not ref or ref <= 0:
        raise ConfigError("reference rate must be > 0", path="physical.reference_rate")
    heat = ph.get("gamma_nbar")
    kw = dict(
        kappa=rates.kappa / ref,
        g=rates.g / ref,
        omega_m=rates.omega_m / ref,
        Gamma_ba=rates.Gamma_ba / ref,
        detuning=_enum(Detuning, s.get("detuning"), "system.detuning"),
    )
    if heat:
        return SystemParams.with_heating(heat / ref, gamma=(gamma / ref) or 1e-6, **kw)
    return SystemParams(gamma=gamma / ref, nbar=float(s.get("nbar") or 0.0), **kw)


def _pulses(raw: dict) -> tuple[PulseEntry, ...]:
    items = raw["pulses"]
    if not isinstance(items, list) or not items:
        raise ConfigError("need at least one pulse", path="pulses")
    out = []
    for i, p in enumerate(items):
        path = f"pulses.{i}"
        if not isinstance(p, dict):
            raise ConfigError("expected a mapping", path=path)
        unknown = set(p) - {"tau", "detuning", "g", "profile"}
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", path=path)
        tau = _num(p, "tau", path, strict=True)
        det = None if p.get("detuning") is None else _enum(Detuning, p["detuning"], f"{path}.detuning")
        g = _num(p, "g", path, allow_none=True)
        prof = p.get("profile")
        if prof is not None:
            if isinstance(prof, str):
                prof = {"kind": prof}
            from qngherald.fullqle import ProfileKind

            prof = CouplingProfile(
                _enum(ProfileKind, prof.get("kind", "constant"), f"{path}.profile.kind"),
                _num(prof, "gbar", f"{path}.profile", allow_none=True),
            )
        out.append(PulseEntry(PulseSpec(tau, det, g), prof))
    return tuple(out)


def _basis(v, path: str = "analysis.basis"):
    if v in ("fock", "initial", "optimal"):
        return v
    if isinstance(v, dict):
        return (_num(v, "r", path), float(v.get("phi", 0.0)))
    raise ConfigError(f"expected fock, initial, optimal or {{r, phi}}, got {v!r}", path=path)


def _axes(raw: dict, base: dict) -> tuple[Axis, ...]:
    sw = raw.get("sweep") or []
    if not isinstance(sw, list):
        raise ConfigError("expected a list of axes", path="sweep")
    if len(sw) > MAX_AXES:
        raise ConfigError(f"at most {MAX_AXES} sweep axes, got {len(sw)}", path="sweep")
    axes = []
    for i, ax in enumerate(sw):
        p = f"sweep.{i}"
        if not isinstance(ax, dict) or "path" not in ax:
            raise ConfigError("axis needs a 'path'", path=p)
        get_path(base, ax["path"])  # existence check
        if "values" in ax:
            vals = tuple(ax["values"])
        else:
            start, stop = _num(ax, "start", p, lo=None), _num(ax, "stop", p, lo=None)
            num = _int(ax, "num", p, lo=1)
            space = ax.get("space", "lin")
            if space == "log":
                if start <= 0 or stop <= 0:
                    raise ConfigError("log axis needs positive bounds", path=p)
                vals = tuple(float(v) for v in np.geomspace(start, stop, num))
            elif space == "lin":
                vals = tuple(float(v) for v in np.linspace(start, stop, num))
            else:
                raise ConfigError(f"space must be lin or log, got {space!r}", path=f"{p}.space")
        if not vals:
            raise ConfigError("axis has no values", path=p)
        axes.append(Axis(ax["path"], vals))
    return tuple(axes)


def _split(path: str) -> list:
    return [int(k) if k.isdigit() else k for k in path.split(".")]


def get_path(doc: dict, path: str):
    node = doc
    for k in _split(path):
        try:
            if k == "*":
                node = node[0]
            else:
                node = node[k]
        except (KeyError, IndexError, TypeError):
            raise ConfigError("parameter path does not exist", path=path) from None
    return node


def set_path(doc: dict, path: str, value) -> dict:
    out = copy.deepcopy(doc)
    keys = _split(path)
    get_path(out, path)

    def walk(node, ks):
        k = ks[0]
        targets = range(len(node)) if k == "*" else [k]
        for t in targets:
            if len(ks) == 1:
                node[t] = value
            else:
                walk(node[t], ks[1:])

    walk(out, keys)
    return out


def build(raw: dict) -> ScenarioConfig:
    """Validate a merged document into a typed configuration."""
    units = raw.get("units") or {}
    reference = units.get("reference", "kappa")
    if reference not in ("kappa", "omega_m"):
        raise ConfigError(f"expected kappa or omega_m, got {reference!r}", path="units.reference")
    engine = _enum(Engine, raw.get("engine"), "engine")
    system = _system(raw)
    ini = raw["initial"]
    initial = MechInitState(_num(ini, "n0", "initial"), _num(ini, "r", "initial"), _num(ini, "phi0", "initial", lo=None) % (2 * math.pi))
    pulses = _pulses(raw)
    eta = raw["detector"].get("eta")
    etas = tuple(eta) if isinstance(eta, list) else (eta,) * len(pulses)
    if len(etas) != len(pulses):
        raise ConfigError(f"need {len(pulses)} efficiencies, got {len(etas)}", path="detector.eta")
    for i, e in enumerate(etas):
        if isinstance(e, bool) or not isinstance(e, (int, float)) or not (0 <= e <= 1):
            raise ConfigError(f"must lie in [0, 1], got {e!r}", path=f"detector.eta.{i}" if isinstance(eta, list) else "detector.eta")
    an = raw["analysis"]
    nmax = _int(an, "nmax", "analysis", lo=5)
    orders = tuple(an.get("orders") or ())
    for o in orders:
        if isinstance(o, bool) or not isinstance(o, int) or not (1 <= o <= nmax):
            raise ConfigError(f"orders must be integers in [1, nmax], got {o!r}", path="analysis.orders")
    depth = None
    if an.get("depth"):
        d = an["depth"] if isinstance(an["depth"], dict) else {}
        wit = tuple(d.get("witnesses", ("qng1", "nonclassical")))
        for w in wit:
            if not (w == "nonclassical" or (isinstance(w, str) and w.startswith("qng") and w[3:].isdigit())):
                raise ConfigError(f"unknown witness {w!r}", path="analysis.depth.witnesses")
        depth = DepthConfig(_num({"nbar": d.get("nbar", 100.0)}, "nbar", "analysis.depth", strict=True), wit)
    sensing = None
    if an.get("sensing"):
        s = an["sensing"]
        Nc = s.get("Nc")
        if not isinstance(Nc, list) or not Nc or any(not isinstance(x, (int, float)) or x <= 0 for x in Nc):
            raise ConfigError("expected a non-empty list of positive energies", path="analysis.sensing.Nc")
        sensing = SensingConfig(tuple(float(x) for x in Nc), _int(s, "kmax", "analysis.sensing") if "kmax" in s else 2,
                                _int(s, "M", "analysis.sensing", lo=1) if "M" in s else 500)
    readout = None
    if an.get("readout"):
        r = an["readout"]
        tau = r.get("tau", "swap")
        if tau != "swap":
            tau = _num(r, "tau", "analysis.readout", strict=True)
        re_eta = r.get("eta", [1.0])
        re_eta = tuple(re_eta) if isinstance(re_eta, list) else (re_eta,)
        if any(not (0 <= e <= 1) for e in re_eta):
            raise ConfigError("must lie in [0, 1]", path="analysis.readout.eta")
        readout = ReadoutConfig(tau, _num(r, "g", "analysis.readout") if "g" in r else 0.6, re_eta,
                                _int(r, "nmax", "analysis.readout", lo=2) if "nmax" in r else 30)
    th = an.get("threshold") or {}
    return ScenarioConfig(
        raw=raw,
        engine=engine,
        system=system,
        initial=initial,
        pulses=pulses,
        eta=tuple(float(e) for e in etas),
        nmax=nmax,
        orders=orders,
        basis=_basis(an.get("basis", "fock")),
        depth=depth,
        sensing=sensing,
        readout=readout,
        threshold_starts=_int(th, "starts", "analysis.threshold", lo=1) if "starts" in th else 64,
        threshold_seed=_int(th, "seed", "analysis.threshold") if "seed" in th else 20240611,
        sweep=_axes(raw, raw),
        reference=reference,
    )


def load(source: str | Path | dict | None = None, preset: str | None = None, overrides: dict | None = None) -> ScenarioConfig:
    """Merge defaults, an optional preset, a YAML file (or mapping) and overrides."""
    doc = defaults()
    if preset:
        table = presets()
        if preset not in table:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(table)}", path="preset")
        doc = deep_merge(doc, table[preset])
    if source is not None:
        if isinstance(source, dict):
            user = source
        else:
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config ({exc.strerror})", path=str(source)) from None
            try:
                user = yaml.safe_load(text) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"invalid YAML: {exc}", path=str(source)) from None
        if not isinstance(user, dict):
            raise ConfigError("top level must be a mapping", path=str(source))
        if "preset" in user:
            user = dict(user)
            name = user.pop("preset")
            table = presets()
            if name not in table:
                raise ConfigError(f"unknown preset {name!r}", path="preset")
            doc = deep_merge(doc, table[name])
        doc = deep_merge(doc, user)
    if overrides:
        doc = deep_merge(doc, overrides)
    return build(doc)


def expand_sweep(cfg: ScenarioConfig) -> list[tuple[dict, dict]]:
    """Cartesian product of the sweep axes as ``(point, raw document)`` pairs.

    Documents are validated later, row by row, so one bad point does not abort a sweep.
    """
    if not cfg.sweep:
        return [({}, copy.deepcopy(cfg.raw))]
    base = copy.deepcopy(cfg.raw)
    base["sweep"] = []
    out = []
    for combo in itertools.product(*(ax.values for ax in cfg.sweep)):
        doc = base
        point = {}
        for ax, v in zip(cfg.sweep, combo):
            doc = set_path(doc, ax.path, v)
            point[ax.path] = v
        out.append((point, doc))
    return out
