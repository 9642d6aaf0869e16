"""Command-line front end: scenarios, sweeps and figure data."""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import contextlib
import io
import json
import math
import sys
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from qngherald import __version__, config
from qngherald.criteria import (
    Witness,
    depth,
    fock_state_matrix,
    nonclassicality,
    qng_threshold,
    qng_threshold_result,
    qng_witness,
)
from qngherald.errors import ConfigError, NumericalError, QNGError
from qngherald.gaussian import Cavity, Particle, Tweezer, derive_physical_rates
from qngherald.herald import FOCK, Basis, ConditionalState, FockDistribution, multipulse, optimal_squeeze_basis, phonon_probabilities
from qngherald.readout import readout_probabilities, swap_time
from qngherald.sensing import crb, fisher

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
Q_REPORTED = 6  # Q0..Q5 always listed


@contextlib.contextmanager
def stage(name: str):
    """Tag errors raised inside with the pipeline stage that produced them."""
    try:
        yield
    except QNGError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
            exc.args = (f"[{name}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise


# ---------------------------------------------------------------------------
# scenario pipeline


def _inputs(cfg: config.ScenarioConfig) -> dict:
    s = cfg.system
    row = {
        "version": __version__,
        "engine": cfg.engine.value,
        "reference": cfg.reference,
        "kappa": s.kappa,
        "gamma": s.gamma,
        "nbar": s.nbar,
        "heating": s.heating,
        "g": s.g,
        "omega_m": s.omega_m,
        "Gamma_ba": s.Gamma_ba,
        "detuning": s.detuning.value,
        "n0": cfg.initial.n0,
        "r": cfg.initial.r,
        "phi0": cfg.initial.phi0,
        "pulses": len(cfg.pulses),
    }
    for i, (p, eta) in enumerate(zip(cfg.pulses, cfg.eta)):
        row[f"pulse{i}.tau"] = p.spec.tau
        row[f"pulse{i}.detuning"] = (p.spec.detuning or s.detuning).value
        row[f"pulse{i}.g"] = s.g if p.spec.g is None else p.spec.g
        row[f"pulse{i}.profile"] = p.profile.kind.value if p.profile else "constant"
        row[f"pulse{i}.eta"] = eta
    return row


def herald(cfg: config.ScenarioConfig) -> ConditionalState:
    profiles = {p.profile for p in cfg.pulses}
    if len(profiles) > 1:
        raise ConfigError("all pulses of a sequence must share one coupling profile", path="pulses")
    return multipulse([p.spec for p in cfg.pulses], cfg.system, cfg.initial, list(cfg.eta), cfg.engine, profiles.pop())


def resolve_basis(cfg: config.ScenarioConfig, state: ConditionalState) -> Basis:
    b = cfg.basis
    if b == "fock":
        return FOCK
    if b == "initial":
        return Basis(cfg.initial.r, cfg.initial.phi0)
    if b == "optimal":
        return optimal_squeeze_basis(state, 1, cfg.initial.phi0, cfg.nmax)
    return Basis(*b)


def _witness(name: str) -> Witness:
    return Witness("nonclassical") if name == "nonclassical" else Witness("qng", int(name[3:]))


def thresholds_for(cfg: config.ScenarioConfig, extra: Iterable[int] = ()) -> dict[int, float]:
    need = set(cfg.orders) | set(extra)
    if cfg.depth:
        need |= {int(w[3:]) for w in cfg.depth.witnesses if w != "nonclassical"}
    return {n: qng_threshold(n, cfg.threshold_starts, cfg.threshold_seed) for n in sorted(need)}


def run_scenario(cfg: config.ScenarioConfig, thresholds: dict[int, float] | None = None) -> dict:
    """One pipeline pass: heralding, witnesses and the optional analyses."""
    thresholds = thresholds if thresholds is not None else thresholds_for(cfg)
    row = _inputs(cfg)
    with stage("herald"):
        state = herald(cfg)
    row["p_s"] = state.norm
    row["mean_occupation"] = state.mean_occupation()
    with stage("witness"):
        basis = resolve_basis(cfg, state)
        dist = phonon_probabilities(state, cfg.nmax, basis)
        row["basis_r"], row["basis_phi"] = basis.r, basis.phi
        for n in range(Q_REPORTED):
            row[f"Q{n}"] = dist[n]
        for n in cfg.orders:
            v = qng_witness(dist, n, thresholds[n])
            row[f"threshold{n}"], row[f"pass{n}"], row[f"margin{n}"] = v.threshold, v.passed, v.margin
        nc = nonclassicality(*(min(max(dist[k], 0.0), 1.0) for k in range(3)))
        row["ineq1"], row["ineq2"] = nc.ineq1, nc.ineq2
    if cfg.depth:
        with stage("depth"):
            for name in cfg.depth.witnesses:
                d = depth(state, _witness(name), basis=basis, nbar=cfg.depth.nbar)
                row[f"depth_{name}"] = d.d
                row[f"depth_{name}_flag"] = "ok" if d.passed_initially and not d.unbounded else (
                    "unbounded" if d.unbounded else "not-passing")
    if cfg.sensing:
        with stage("sensing"):
            probe = dist if basis.r == 0 else phonon_probabilities(state, cfg.nmax)
            s = cfg.sensing
            for Nc in s.Nc:
                F = fisher(probe, Nc, s.kmax)
                row[f"F@{Nc:g}"] = F
                row[f"dNc@{Nc:g}"] = crb(F, s.M)
            row["sense_kmax"], row["sense_M"] = s.kmax, s.M
    if cfg.readout:
        with stage("readout"):
            ro = cfg.readout
            rp = cfg.system.replace(g=ro.g)
            tau = swap_time(rp) if ro.tau == "swap" else ro.tau
            row["readout_tau"], row["readout_g"] = tau, ro.g
            for e in ro.eta:
                ps = readout_probabilities(state, cfg.system, tau, g=ro.g, eta=e, nmax=ro.nmax, engine="rwa")
                for k in range(3):
                    row[f"readout_p{k}@eta={e:g}"] = ps[k]
    return row


def _sweep_worker(args) -> dict:
    index, point, doc, thresholds = args
    row: dict = {"row": index}
    row.update({f"sweep:{k}": v for k, v in point.items()})
    try:
        cfg = config.build(doc)
        row.update(run_scenario(cfg, thresholds))
        row["error"] = ""
    except QNGError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["error_stage"] = getattr(exc, "stage", None) or "config"
    return row


def run_sweep(cfg: config.ScenarioConfig, workers: int = 1) -> Iterator[dict]:
    """Evaluate the Cartesian product of the sweep axes; rows are yielded in axis order."""
    points = config.expand_sweep(cfg)
    thresholds = thresholds_for(cfg)
    jobs = [(i, pt, doc, thresholds) for i, (pt, doc) in enumerate(points)]
    if workers <= 1 or len(jobs) == 1:
        yield from map(_sweep_worker, jobs)
        return
    with cf.ProcessPoolExecutor(max_workers=workers) as ex:
        yield from ex.map(_sweep_worker, jobs)


# ---------------------------------------------------------------------------
# output


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return format(v, ".17g")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def _json_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_value(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return json.dumps(v)


def jsonl_line(row: dict) -> str:
    return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in row.items()) + "}"


def emit(rows: Iterable[dict], fmt: str, dest: str | Path | io.TextIOBase | None) -> int:
    """Write rows as CSV or JSON lines; returns the row count."""
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"unknown format {fmt!r}", path="format")
    with _open(dest) as fh:
        if fmt == "jsonl":
            n = 0
            for row in rows:
                fh.write(jsonl_line(row) + "\n")
                fh.flush()
                n += 1
            return n
        rows = list(rows)
        cols: list[str] = []
        for row in rows:
            cols.extend(k for k in row if k not in cols)
        fh.write(",".join(_csv_cell(c) for c in cols) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(format_value(row.get(c))) for c in cols) + "\n")
        return len(rows)


def _csv_cell(s: str) -> str:
    return '"' + s.replace('"', '""') + '"' if any(ch in s for ch in ',"\n') else s


@contextlib.contextmanager
def _open(dest):
    if dest is None or dest == "-":
        yield sys.stdout
    elif isinstance(dest, io.TextIOBase):
        yield dest
    else:
        path = Path(dest)
        try:
            fh = path.open("w", newline="")
        except OSError as exc:
            raise OSError(f"{path}: {exc.strerror}") from None
        with fh:
            yield fh


def read_jsonl(path: str | Path) -> list[dict]:
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def wigner_grid(state: ConditionalState, extent: float = 4.0, points: int = 101):
    axis = np.linspace(-extent, extent, points)
    re, im = np.meshgrid(axis, axis, indexing="ij")
    return axis, state.wigner(re + 1j * im)


def wigner_dump(state: ConditionalState, dest, extent: float = 4.0, points: int = 101) -> None:
    """Dense Wigner grid; rows are Re(α), columns Im(α)."""
    axis, W = wigner_grid(state, extent, points)
    with _open(dest) as fh:
        fh.write("# W(alpha) normalized to unit integral over d2alpha; vacuum peak 2/pi\n")
        fh.write(f"# rows: Re(alpha) {format_value(-extent)}..{format_value(extent)} ({points}); columns: Im(alpha)\n")
        fh.write("re\\im," + ",".join(format_value(x) for x in axis) + "\n")
        for x, line in zip(axis, W):
            fh.write(format_value(x) + "," + ",".join(format_value(v) for v in line) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _load(args) -> config.ScenarioConfig:
    over = {}
    if getattr(args, "engine", None):
        over["engine"] = args.engine
    if getattr(args, "seed", None) is not None:
        over["analysis"] = {"threshold": {"seed": args.seed}}
    return config.load(args.config, preset=getattr(args, "preset", None), overrides=over or None)


def cmd_herald(args) -> int:
    cfg = _load(args)
    row = run_scenario(config.build(dict(cfg.raw, sweep=[])))
    emit([row], args.format, args.out)
    if args.wigner:
        with stage("wigner"):
            wigner_dump(herald(cfg), args.wigner, args.wigner_extent, args.wigner_points)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    emit(run_sweep(cfg, args.workers), args.format, args.out)
    return EXIT_OK


def cmd_threshold(args) -> int:
    rows = []
    for n in args.n:
        r = qng_threshold_result(n, args.starts, args.seed if args.seed is not None else 20240611)
        rows.append({"n": n, "threshold": r.value, "alpha": r.alpha, "r": r.r, "theta": r.theta, "starts": r.starts})
    emit(rows, args.format, args.out)
    return EXIT_OK


def _probe(args, cfg=None):
    if args.fock is not None:
        return None, fock_state_matrix(args.fock, 60), FockDistribution.fock_state(args.fock, 60)
    st = herald(cfg)
    return st, None, phonon_probabilities(st, cfg.nmax)


def cmd_depth(args) -> int:
    cfg = _load(args) if args.fock is None else None
    st, rho, _ = _probe(args, cfg)
    rows = []
    basis = resolve_basis(cfg, st) if cfg else FOCK
    for name in args.witness:
        with stage("depth"):
            d = depth(st if st is not None else rho, _witness(name), basis=basis, nbar=args.nbar)
        rows.append({"witness": d.witness, "d": d.d, "t_lo": d.bracket[0], "t_hi": d.bracket[1],
                     "passed_initially": d.passed_initially, "unbounded": d.unbounded, "nbar": d.nbar})
    emit(rows, args.format, args.out)
    return EXIT_OK


def cmd_sense(args) -> int:
    cfg = _load(args) if args.fock is None and args.thermal is None else None
    if args.thermal is not None:
        q = FockDistribution.thermal(args.thermal, 60)
    else:
        _, _, q = _probe(args, cfg)
    grid = args.nc or (list(cfg.sensing.Nc) if cfg and cfg.sensing else list(np.geomspace(0.01, 0.5, 12)))
    rows = []
    with stage("sensing"):
        for Nc in grid:
            F = fisher(q, Nc, args.kmax)
            rows.append({"Nc": float(Nc), "F": F, "dNc": crb(F, args.M), "kmax": args.kmax, "M": args.M})
    emit(rows, args.format, args.out)
    return EXIT_OK


def cmd_readout(args) -> int:
    cfg = _load(args)
    st = herald(cfg)
    ro = cfg.readout or config.ReadoutConfig()
    rp = cfg.system.replace(g=ro.g)
    taus = args.tau or [swap_time(rp) if ro.tau == "swap" else ro.tau]
    rows = []
    with stage("readout"):
        for tau in taus:
            for e in ro.eta:
                ps = readout_probabilities(st, cfg.system, tau, g=ro.g, eta=e, nmax=ro.nmax)
                row = {"tau2": tau, "g": ro.g, "eta": e}
                row.update({f"p{k}": ps[k] for k in range(min(6, ro.nmax + 1))})
                rows.append(row)
    emit(rows, args.format, args.out)
    return EXIT_OK


def cmd_rates(args) -> int:
    if args.config:
        import yaml

        try:
            doc = yaml.safe_load(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config ({exc.strerror})", path=args.config) from None
        ph = (doc or {}).get("physical")
        if not ph:
            raise ConfigError("config has no physical block", path="physical")
        name = "config"
    else:
        table = config.physical_presets()
        name = args.physical_preset
        ph = table[name]
    try:
        particle, tweezer = Particle(**ph["particle"]), Tweezer(**ph["tweezer"])
        cav = Cavity(**ph["cavity"]) if ph.get("cavity") else None
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"incomplete physical block ({exc})", path="physical") from None
    rates = derive_physical_rates(particle, tweezer, cav, kappa=float(ph.get("kappa") or 0.0), gamma=float(ph.get("gamma") or 0.0))
    ref = ph.get("reference_rate") or (rates.kappa if cav else rates.omega_m)
    row = {"source": name, "reference_rate": ref, "omega_m": rates.omega_m, "g": rates.g, "Gamma_ba": rates.Gamma_ba,
           "kappa": rates.kappa, "gamma": rates.gamma}
    for k in ("omega_m", "g", "Gamma_ba", "kappa", "gamma"):
        row[f"{k}/ref"] = row[k] / ref
    if ph.get("gamma_nbar"):
        row["gamma_nbar/ref"] = ph["gamma_nbar"] / ref
    emit([row], args.format, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qngherald", description="Heralded non-Gaussian motional states of levitated particles.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "jsonl"), default="jsonl")
    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--config", help="YAML scenario file")
    scen.add_argument("--preset", choices=sorted(config.presets()))
    scen.add_argument("--engine", choices=("rwa", "full", "freespace"))
    scen.add_argument("--seed", type=int, help="threshold optimizer seed")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("herald", parents=[common, scen], help="single scenario")
    p.add_argument("--wigner", help="also write the conditional Wigner grid here")
    p.add_argument("--wigner-extent", type=float, default=4.0)
    p.add_argument("--wigner-points", type=int, default=101)
    p.set_defaults(func=cmd_herald)

    p = sub.add_parser("sweep", parents=[common, scen], help="Cartesian parameter sweep")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("threshold", parents=[common], help="Gaussian thresholds Q_n^G")
    p.add_argument("--n", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    p.add_argument("--starts", type=int, default=64)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("depth", parents=[common, scen], help="QNG and nonclassical depth")
    p.add_argument("--fock", type=int, help="use the ideal Fock state |n> instead of a scenario")
    p.add_argument("--nbar", type=float, default=100.0)
    p.add_argument("--witness", nargs="+", default=["qng1", "nonclassical"])
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("sense", parents=[common, scen], help="displacement-sensing error")
    p.add_argument("--fock", type=int)
    p.add_argument("--thermal", type=float, help="thermal probe with this occupation")
    p.add_argument("--nc", type=float, nargs="+")
    p.add_argument("--kmax", type=int, default=2)
    p.add_argument("--M", type=int, default=500)
    p.set_defaults(func=cmd_sense)

    p = sub.add_parser("readout", parents=[common, scen], help="readout photon statistics")
    p.add_argument("--tau", type=float, nargs="+", help="readout pulse lengths (default: swap time)")
    p.set_defaults(func=cmd_readout)

    p = sub.add_parser("rates", parents=[common], help="physical inputs to dimensionless rates")
    p.add_argument("--config", help="YAML file with a physical block")
    p.add_argument("--physical-preset", choices=sorted(config.physical_presets()), default="cavity")
    p.set_defaults(func=cmd_rates)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QNGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
