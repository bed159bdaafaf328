"""Command-line entry point: ``frameoma {simulate,identify,compare,placement,all}``.

Exit status is 0 on success, 1 on a runtime or data error and 2 on a usage
or configuration error.  Every invocation that gets past argument parsing
leaves a ``manifest.json`` in the output directory listing the settings,
the inputs and the SHA-256 of every file written.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import io as fio
from .compare import build_report
from .config import OUTPUT_ENV, RunConfig, config_from_dict
from .data import parse_channel
from .exceptions import ConfigError, FrameOMAError, InfeasibleCoverError
from .fdd import identify_fdd_spectrum, svd_lines
from .frame_model import (
    ExcitationSpec,
    add_measurement_noise,
    assemble,
    simulate_response,
    solve_modes,
)
from .placement import detectability, minimal_sensor_set
from .pp import identify_pp_spectrum
from .spectral import welch_cpsd

logger = logging.getLogger("frameoma")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    """Output bookkeeping for one invocation."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.out = cfg.output_dir()
        self.outputs: dict[str, Path] = {}
        self.inputs: dict[str, Path] = {}
        self.stage = None

    def path(self, name: str) -> Path:
        return self.out / name

    def wrote(self, *paths):
        for p in paths:
            p = Path(p)
            self.outputs[p.name] = p

    def read(self, path) -> Path:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"input file not found: {path}")
        self.inputs[str(path)] = path
        return path

    def manifest(self, status: str, error: str = None) -> Path:
        doc = {
            "package": "frameoma",
            "version": __version__,
            "command": self.command,
            "status": status,
            "settings": self.cfg.to_dict(),
            "inputs": {k: sha256(p) for k, p in sorted(self.inputs.items()) if p.is_file()},
            "outputs": {k: sha256(p) for k, p in sorted(self.outputs.items()) if p.is_file()},
        }
        if error is not None:
            doc["failed_stage"] = self.stage
            doc["error"] = error
        path = self.path("manifest.json")
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path


# -- stages --------------------------------------------------------------


def _measured(labels):
    return tuple(l for l in labels if parse_channel(l)[1] in ("x", "y"))


def stage_simulate(run: Run):
    cfg = run.cfg
    model = cfg.frame_model()
    sys_ = assemble(model)
    sim = cfg.simulation
    n_modes = min(sim.n_modes, sys_.n_dof)
    exc = ExcitationSpec(cfg.excitation.intensity, cfg.excitation.dofs, cfg.excitation_seed())
    ts = simulate_response(sys_, exc, sim.duration, sim.dt, sim.substeps)
    ts = ts.select(_measured(ts.channels))
    # sensor noise is seeded apart from the excitation
    ts = add_measurement_noise(ts, sim.noise, seed=cfg.excitation_seed() + 1)
    fe = solve_modes(sys_, n_modes).restrict(ts.channels)
    run.wrote(
        fio.write_timeseries(ts, run.path("timeseries.csv")),
        fio.write_modes(fe, run.path("modes_fem.csv")),
    )
    if cfg.plots:
        run.wrote(*fio.emit_plot_data(fe, run.path("modes_fem.csv"), svg=True, geometry=model))
    return ts, fe, model


def stage_identify(run: Run, ts, method: str, geometry=None, write_cpsd=False):
    cfg = run.cfg
    s = cfg.spectral
    spec = welch_cpsd(ts, s.segment_len, s.overlap, s.window)
    run.wrote(fio.write_anpsd(spec, run.path("anpsd.csv")))
    for d in ("x", "y"):
        sub = [c for c in spec.channels if parse_channel(c)[1] == d]
        if sub and len(sub) < spec.n_channels:
            run.wrote(fio.write_anpsd(spec, run.path(f"anpsd_{d}.csv"), sub))
    if write_cpsd:
        run.wrote(fio.write_spectral(spec, run.path("cpsd.csv")))
    if cfg.plots:
        run.wrote(*fio.emit_plot_data(spec, run.path("psd.csv"), svg=True))

    results = {}
    if method in ("pp", "both"):
        run.stage = "identify(pp)"
        pp = identify_pp_spectrum(spec, cfg.pp_config())
        run.wrote(fio.write_modes(pp, run.path("modes_pp.csv")))
        if cfg.plots and len(pp):
            run.wrote(*fio.emit_plot_data(pp, run.path("modes_pp.csv"), True, geometry))
        results["pp"] = pp
    if method in ("fdd", "both"):
        run.stage = "identify(fdd)"
        svd = svd_lines(spec)
        run.wrote(fio.write_svspectra(svd, run.path("svspectra.csv")))
        if cfg.plots:
            run.wrote(*fio.emit_plot_data(svd, run.path("svspectra.csv"), svg=True))
        fdd = identify_fdd_spectrum(spec, cfg.fdd_config())
        run.wrote(fio.write_modes(fdd, run.path("modes_fdd.csv")))
        if cfg.plots and len(fdd):
            run.wrote(*fio.emit_plot_data(fdd, run.path("modes_fdd.csv"), True, geometry))
        results["fdd"] = fdd
    return results


def stage_compare(run: Run, a, b, suffix: str = ""):
    rep = build_report(a, b, run.cfg.compare.threshold)
    run.wrote(
        fio.write_mac(rep.mac, run.path(f"mac{suffix}.csv")),
        fio.write_report(rep, run.path(f"report{suffix}.csv")),
    )
    if run.cfg.plots:
        run.wrote(*fio.emit_plot_data(rep.mac, run.path(f"mac{suffix}.csv"), svg=True))
    return rep


def stage_placement(run: Run, ts, reference):
    cfg = run.cfg
    table = detectability(ts, reference, cfg.detection_config())
    run.wrote(fio.write_detectability(table, run.path("detectability.csv")))
    groups = {"all": table}
    for d in ("x", "y"):
        sub = table.by_direction(d)
        if sub.channels and len(sub.channels) < len(table.channels):
            groups[d] = sub
    results = {}
    for name, tab in groups.items():
        try:
            results[name] = minimal_sensor_set(tab, cfg.placement.max_size)
        except InfeasibleCoverError as exc:
            results[name] = str(exc)
    run.wrote(fio.write_minimal_sets(results, run.path("minimal_sets.txt")))
    if isinstance(results["all"], str):
        raise InfeasibleCoverError(results["all"])
    return table, results


# -- command dispatch ----------------------------------------------------


def _require(value, flag):
    if not value:
        raise ConfigError(f"{flag} is required", flag)
    return value


def execute(run: Run, args) -> None:
    cfg = run.cfg
    cmd = run.command
    if cmd == "simulate":
        run.stage = "simulate"
        stage_simulate(run)
    elif cmd == "identify":
        src = run.read(_require(cfg.input, "--input"))
        run.stage = "load"
        ts = fio.load_timeseries(src)
        run.stage = "identify"
        stage_identify(run, ts, cfg.method, write_cpsd=args.cpsd)
    elif cmd == "compare":
        pa, pb = run.read(_require(args.a, "--a")), run.read(_require(args.b, "--b"))
        run.stage = "load"
        a, b = fio.load_modes(pa), fio.load_modes(pb)
        run.stage = "compare"
        stage_compare(run, a, b)
    elif cmd == "placement":
        src = run.read(_require(cfg.input, "--input"))
        ref = run.read(_require(cfg.reference, "--reference"))
        run.stage = "load"
        ts, fe = fio.load_timeseries(src), fio.load_modes(ref)
        run.stage = "placement"
        stage_placement(run, ts, fe)
    elif cmd == "all":
        run.stage = "simulate"
        ts, fe, model = stage_simulate(run)
        run.stage = "identify"
        ident = stage_identify(run, ts, "both", geometry=model, write_cpsd=args.cpsd)
        for name, modes in ident.items():
            run.stage = f"compare(fem-{name})"
            stage_compare(run, fe, modes, f"_fem_{name}")
        run.stage = "compare(pp-fdd)"
        stage_compare(run, ident["pp"], ident["fdd"], "_pp_fdd")
        run.stage = "placement"
        stage_placement(run, ts, fe)
    run.stage = None


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--output", help=f"output directory (default: ${OUTPUT_ENV} or ./frameoma_out)")
    common.add_argument("--seed", type=int)
    common.add_argument("--plots", action="store_true", help="also render SVG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    spectral = argparse.ArgumentParser(add_help=False)
    spectral.add_argument("--segment-len", type=int)
    spectral.add_argument("--overlap", type=float)
    spectral.add_argument("--window")
    spectral.add_argument("--prominence", type=float, help="PP peak prominence, fraction of max")
    spectral.add_argument("--separation", type=float, help="minimum peak spacing [Hz]")
    spectral.add_argument("--band", type=float, nargs=2, metavar=("FMIN", "FMAX"))
    spectral.add_argument("--ref", help="PP reference channel, e.g. 5:x, or 'per-peak'")
    spectral.add_argument("--mac-threshold", type=float)
    spectral.add_argument("--cpsd", action="store_true", help="also write the full CPSD matrix")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--duration", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--noise", type=float, help="sensor noise, fraction of record RMS")

    place = argparse.ArgumentParser(add_help=False)
    place.add_argument("--tolerance", help="'2%%' (relative) or a value in Hz")
    place.add_argument("--max-size", type=int)

    p = argparse.ArgumentParser(prog="frameoma", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common, sim], help="synthesize an ambient record")
    ident = sub.add_parser("identify", parents=[common, spectral], help="PP and/or FDD")
    ident.add_argument("--input")
    ident.add_argument("--method", choices=("pp", "fdd", "both"))
    cmp_ = sub.add_parser("compare", parents=[common], help="MAC and comparison tables")
    cmp_.add_argument("--a", required=True)
    cmp_.add_argument("--b", required=True)
    cmp_.add_argument("--threshold", type=float)
    pl = sub.add_parser("placement", parents=[common, spectral, place], help="detectability")
    pl.add_argument("--input")
    pl.add_argument("--reference")
    sub.add_parser("all", parents=[common, sim, spectral, place], help="full pipeline")
    return p


_OVERRIDES = {
    "seed": ("seed",),
    "output": ("output",),
    "input": ("input",),
    "reference": ("reference",),
    "method": ("method",),
    "duration": ("simulation", "duration"),
    "dt": ("simulation", "dt"),
    "noise": ("simulation", "noise"),
    "segment_len": ("spectral", "segment_len"),
    "overlap": ("spectral", "overlap"),
    "window": ("spectral", "window"),
    "prominence": ("peaks", "prominence"),
    "separation": ("peaks", "separation"),
    "band": ("peaks", "band"),
    "ref": ("pp", "ref"),
    "mac_threshold": ("fdd", "mac_threshold"),
    "threshold": ("compare", "threshold"),
    "max_size": ("placement", "max_size"),
}


def _tolerance(text: str) -> dict:
    text = text.strip()
    try:
        if text.endswith("%"):
            return {"tolerance_rel": float(text[:-1]) / 100}
        return {"tolerance_hz": float(text)}
    except ValueError:
        raise ConfigError(f"--tolerance: cannot parse {text!r}", "placement.tolerance") from None


def build_config(args) -> RunConfig:
    data = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    for attr, keys in _OVERRIDES.items():
        val = getattr(args, attr, None)
        if val is None:
            continue
        node = data
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = list(val) if isinstance(val, (list, tuple)) else val
    if getattr(args, "plots", False):
        data["plots"] = True
    if getattr(args, "tolerance", None):
        data.setdefault("placement", {}).update(_tolerance(args.tolerance))
    return config_from_dict(data)


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"frameoma: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"frameoma: I/O error: {exc}", file=sys.stderr)
        return 1

    run = Run(cfg, args.command)
    try:
        run.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"frameoma: cannot create output directory {run.out}: {exc}", file=sys.stderr)
        return 1

    status, code, error = "ok", 0, None
    try:
        execute(run, args)
    except ConfigError as exc:
        status, code, error = "usage error", 2, str(exc)
        print(f"frameoma: {exc}", file=sys.stderr)
    except OSError as exc:
        status, code, error = "error", 1, str(exc)
        print(f"frameoma: I/O error: {exc}", file=sys.stderr)
    except (FrameOMAError, ValueError, ArithmeticError) as exc:
        status, code, error = "error", 1, f"{type(exc).__name__}: {exc}"
        print(f"frameoma: stage {run.stage or '?'} failed: {error}", file=sys.stderr)
    run.manifest(status, error)
    if code == 0:
        logger.info("wrote %d files to %s", len(run.outputs) + 1, run.out)
    return code


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
