"""Command-line front end.

Each subcommand is one scenario; parameters come from an optional TOML config
file plus command-line overrides.  Every run writes tab-separated data files
(one header line, 17-significant-digit decimals, fixed row order) and a JSON
manifest with the fully resolved configuration, so identical configs rerun to
byte-identical data files.

Exit codes: 0 success, 2 configuration error, 3 numerical abort (truncation
guard tripped).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisSpec, RotorSpectrum, UnitBridge
from .coupling import cos2_matrix
from .floquet import EDGE, planar_reference_spectrum, spectrum_scan
from .floquet import classify_edge_states, edge_overlap, quasienergy_decomposition
from .observables import (
    alignment_spectrum,
    thermal_alignment_trace,
    thermal_ensemble,
    thermal_population_dynamics,
)
from .propagation import (
    KickBuilder,
    PulseTrainSpec,
    TruncationError,
    one_cycle_operator,
)

SCENARIOS = (
    "states",
    "spectrum-scan",
    "dynamics",
    "overlap-scan",
    "alignment-ft",
    "planar-ref",
)


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


# ---------------------------------------------------------------------------
# configuration


#: (config section, key, type, default); CLI flag is key with _ -> -.
_SCHEMA = [
    ("basis", "M", int, 0),
    ("basis", "parity", str, "even"),
    ("basis", "J_max", int, 512),
    ("train", "P", float, None),
    ("train", "P_start", float, None),
    ("train", "P_stop", float, None),
    ("train", "P_step", float, None),
    ("train", "tau", str, "1/3"),
    ("train", "N", int, 1),
    ("train", "shape", str, "delta"),
    ("train", "fwhm", float, None),
    ("spectrum", "epsilon", float, None),
    ("bridge", "B", float, None),
    ("bridge", "D", float, 0.0),
    ("bridge", "delta_alpha", float, 0.0),
    ("thermal", "temperature", float, 0.0),
    ("basis", "initial_J", int, 0),
    ("sampling", "window", float, 2.0 * np.pi),
    ("sampling", "samples", int, 2048),
    ("sampling", "broadening", float, None),
    ("sampling", "omega_bins", int, 256),
    ("planar", "grid_size", int, 128),
    ("run", "out", str, "out"),
    ("run", "threads", int, 1),
]


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}")


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, the TOML file, and CLI overrides into a flat dict."""
    file_cfg = _load_toml(args.config) if args.config else {}
    cfg: dict = {"scenario": args.scenario}
    for section, key, typ, default in _SCHEMA:
        value = default
        if section in file_cfg and key in file_cfg[section]:
            value = file_cfg[section][key]
        override = getattr(args, key, None)
        if override is not None:
            value = override
        if value is not None:
            try:
                value = typ(value)
            except (TypeError, ValueError):
                raise ConfigError(
                    f"key '{section}.{key}' must be of type {typ.__name__}, "
                    f"got {value!r}"
                )
        cfg[f"{section}.{key}"] = value
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if cfg["basis.parity"] not in ("even", "odd", "both"):
        raise ConfigError("key 'basis.parity' must be even, odd, or both")
    if cfg["basis.J_max"] < 1:
        raise ConfigError("key 'basis.J_max' must be >= 1")
    if cfg["basis.M"] < 0:
        raise ConfigError("key 'basis.M' must be >= 0 (only |M| matters)")
    try:
        frac = Fraction(cfg["train.tau"])
    except (ValueError, ZeroDivisionError):
        raise ConfigError(
            "key 'train.tau' must be a rational p/q fraction of the revival time"
        )
    if frac <= 0:
        raise ConfigError("key 'train.tau' must be positive")
    cfg["train.tau"] = str(frac)
    if cfg["train.N"] < 1:
        raise ConfigError("key 'train.N' must be >= 1")
    if cfg["spectrum.epsilon"] is not None and cfg["bridge.B"] is not None:
        raise ConfigError(
            "keys 'spectrum.epsilon' and 'bridge.B' are mutually exclusive"
        )
    if cfg["run.threads"] < 1:
        raise ConfigError("key 'run.threads' must be >= 1")
    scenario = cfg["scenario"]
    if scenario in ("spectrum-scan", "overlap-scan"):
        for key in ("train.P_start", "train.P_stop", "train.P_step"):
            if cfg[key] is None:
                raise ConfigError(f"scenario {scenario} requires key '{key}'")
        if cfg["train.P_step"] <= 0:
            raise ConfigError("key 'train.P_step' must be > 0")
        if len(_p_grid(cfg)) < 2:
            raise ConfigError(
                "keys 'train.P_start'..'train.P_stop' define an empty or "
                "single-point P grid; need at least 2 points"
            )
    elif cfg["train.P"] is None:
        raise ConfigError(f"scenario {scenario} requires key 'train.P'")
    if scenario == "alignment-ft" and cfg["sampling.broadening"] is None:
        raise ConfigError("scenario alignment-ft requires key 'sampling.broadening'")
    if cfg["thermal.temperature"] > 0 and cfg["bridge.B"] is None:
        raise ConfigError(
            "key 'thermal.temperature' > 0 requires SI constants under 'bridge'"
        )


def _p_grid(cfg: dict) -> np.ndarray:
    start, stop, step = (
        cfg["train.P_start"], cfg["train.P_stop"], cfg["train.P_step"],
    )
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(max(n, 0))


def _bridge(cfg: dict) -> UnitBridge | None:
    if cfg["bridge.B"] is None:
        return None
    return UnitBridge(
        rotational_constant_B=cfg["bridge.B"],
        centrifugal_constant_D=cfg["bridge.D"],
        polarizability_anisotropy=cfg["bridge.delta_alpha"],
    )


def _spectrum(cfg: dict) -> RotorSpectrum:
    bridge = _bridge(cfg)
    if bridge is not None:
        return bridge.spectrum()
    return RotorSpectrum(centrifugal_eps=cfg["spectrum.epsilon"] or 0.0)


def _bases(cfg: dict) -> list[BasisSpec]:
    parities = (
        ("even", "odd") if cfg["basis.parity"] == "both" else (cfg["basis.parity"],)
    )
    return [
        BasisSpec(M=cfg["basis.M"], parity=p, J_max=cfg["basis.J_max"])
        for p in parities
    ]


def _train(cfg: dict, P: float | None = None) -> PulseTrainSpec:
    try:
        return PulseTrainSpec(
            P=cfg["train.P"] if P is None else P,
            tau_fraction=Fraction(cfg["train.tau"]),
            N=cfg["train.N"],
            shape=cfg["train.shape"],
            fwhm=cfg["train.fwhm"],
        )
    except ValueError as exc:
        raise ConfigError(f"invalid 'train' configuration: {exc}")


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_table(path: Path, columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(x) for x in row) + "\n")


def write_manifest(outdir: Path, cfg: dict, wall_time: float, extra=None) -> None:
    doc = {
        "tool": "rotoredge",
        "version": __version__,
        "config": {k: v for k, v in sorted(cfg.items())},
        "wall_time_s": wall_time,
    }
    if extra:
        doc.update(extra)
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# scenarios


def run_states(cfg: dict, outdir: Path) -> dict:
    spectrum = _spectrum(cfg)
    rows, profile_rows = [], []
    edge_index = 0
    for basis in _bases(cfg):
        qset = classify_edge_states(
            quasienergy_decomposition(one_cycle_operator(_train(cfg), basis, spectrum))
        )
        for i, (w, c) in enumerate(zip(qset.omegas, qset.classes)):
            rows.append((cfg["train.P"], float(w), c))
            if c == EDGE:
                for J, amp in zip(basis.J_values, qset.vectors[:, i]):
                    profile_rows.append((edge_index, float(w), int(J), abs(amp) ** 2))
                edge_index += 1
    rows.sort(key=lambda r: r[1])
    write_table(outdir / "quasienergies.tsv", ["P", "omega", "class"], rows)
    write_table(
        outdir / "edge_profiles.tsv",
        ["state", "omega", "J", "population"],
        profile_rows,
    )
    return {"edge_states": edge_index}


def run_spectrum_scan(cfg: dict, outdir: Path) -> dict:
    spectrum = _spectrum(cfg)
    rows, hist_rows, errors = [], [], {}
    for basis in _bases(cfg):
        result = spectrum_scan(
            _p_grid(cfg),
            Fraction(cfg["train.tau"]),
            basis,
            spectrum,
            omega_bins=cfg["sampling.omega_bins"],
            threads=cfg["run.threads"],
        )
        centers = 0.5 * (result.omega_edges[:-1] + result.omega_edges[1:])
        for i, pt in enumerate(result.points):
            if pt.qset is None:
                errors[f"{pt.P:.17g}"] = pt.error
                continue
            for w, c in zip(pt.qset.omegas, pt.qset.classes):
                rows.append((pt.P, float(w), c))
            for wc, count in zip(centers, result.histogram[i]):
                if count:
                    hist_rows.append((pt.P, float(wc), int(count)))
    rows.sort(key=lambda r: (r[0], r[1]))
    hist_rows.sort(key=lambda r: (r[0], r[1]))
    write_table(outdir / "quasienergies.tsv", ["P", "omega", "class"], rows)
    write_table(outdir / "histogram.tsv", ["P", "omega", "count"], hist_rows)
    if errors and not rows:
        raise TruncationError(0, float("nan"))
    return {"point_errors": errors} if errors else {}


def run_dynamics(cfg: dict, outdir: Path) -> dict:
    spectrum = _spectrum(cfg)
    train = _train(cfg)
    J_max = cfg["basis.J_max"]
    T = cfg["thermal.temperature"]
    if T > 0:
        ensemble = thermal_ensemble(T, _bridge(cfg), spectrum=spectrum)
    else:
        from .observables import ThermalEnsemble

        J0 = cfg["basis.initial_J"]
        parity = "even" if (J0 - cfg["basis.M"]) % 2 == 0 else "odd"
        ensemble = ThermalEnsemble(
            members=((J0, cfg["basis.M"], parity, 1.0),),
            temperature=0.0,
            spectrum=spectrum,
        )
    pops, energy = thermal_population_dynamics(ensemble, train, J_max)
    pop_rows = [
        (n, J, float(pops[n, J]))
        for n in range(train.N + 1)
        for J in range(J_max + 1)
    ]
    write_table(
        outdir / "populations.tsv", ["pulse_index", "J", "population"], pop_rows
    )
    write_table(
        outdir / "energy.tsv",
        ["pulse_index", "energy"],
        [(n, float(e)) for n, e in enumerate(energy)],
    )
    return {"ensemble_members": len(ensemble.members)}


def run_overlap_scan(cfg: dict, outdir: Path) -> dict:
    spectrum = _spectrum(cfg)
    bases = _bases(cfg)
    if len(bases) != 1:
        raise ConfigError("scenario overlap-scan requires key 'basis.parity' "
                          "to be even or odd (the initial state fixes it)")
    basis = bases[0]
    from .propagation import WaveFunction

    psi0 = WaveFunction.basis_state(basis, cfg["basis.initial_J"])
    builder = KickBuilder(cos2_matrix(basis))
    rows = []
    for P in _p_grid(cfg):
        train = _train(cfg, P=float(P))
        qset = classify_edge_states(
            quasienergy_decomposition(
                one_cycle_operator(train, basis, spectrum, kick_builder=builder)
            )
        )
        rows.append((float(P), edge_overlap(psi0, qset).total))
    write_table(outdir / "overlap.tsv", ["P", "overlap"], rows)
    return {}


def run_alignment_ft(cfg: dict, outdir: Path) -> dict:
    spectrum = _spectrum(cfg)
    bridge = _bridge(cfg)
    train = _train(cfg)
    T = cfg["thermal.temperature"]
    if T > 0:
        ensemble = thermal_ensemble(T, bridge, spectrum=spectrum)
    else:
        from .observables import ThermalEnsemble

        J0 = cfg["basis.initial_J"]
        parity = "even" if (J0 - cfg["basis.M"]) % 2 == 0 else "odd"
        ensemble = ThermalEnsemble(
            members=((J0, cfg["basis.M"], parity, 1.0),),
            temperature=0.0,
            spectrum=spectrum,
        )
    trace = thermal_alignment_trace(
        ensemble,
        train,
        cfg["basis.J_max"],
        window=cfg["sampling.window"],
        samples=cfg["sampling.samples"],
    )
    spec = alignment_spectrum(trace, cfg["sampling.broadening"], bridge=bridge)
    write_table(
        outdir / "trace.tsv",
        ["time", "alignment"],
        [(float(t), float(v)) for t, v in zip(trace.times, trace.values)],
    )
    unit = "wavenumber" if bridge is not None else "frequency"
    write_table(
        outdir / "spectrum.tsv",
        [unit, "magnitude"],
        [(float(f), float(m)) for f, m in zip(spec.frequencies, spec.magnitudes)],
    )
    return {"ensemble_members": len(ensemble.members)}


def run_planar_ref(cfg: dict, outdir: Path) -> dict:
    omegas = planar_reference_spectrum(
        cfg["train.P"], Fraction(cfg["train.tau"]), cfg["planar.grid_size"]
    )
    write_table(
        outdir / "quasienergies.tsv",
        ["P", "omega"],
        [(cfg["train.P"], float(w)) for w in omegas],
    )
    return {}


_RUNNERS = {
    "states": run_states,
    "spectrum-scan": run_spectrum_scan,
    "dynamics": run_dynamics,
    "overlap-scan": run_overlap_scan,
    "alignment-ft": run_alignment_ft,
    "planar-ref": run_planar_ref,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotoredge",
        description="Quasienergy states, spectra, and pulse-train dynamics "
        "of periodically kicked 3D quantum rotors.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="scenario", required=True)
    for scenario in SCENARIOS:
        p = sub.add_parser(scenario)
        p.add_argument("--config", help="TOML config file")
        for _section, key, typ, _default in _SCHEMA:
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, type=str if typ is str else typ,
                           default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = resolve_config(args)
        outdir = Path(cfg["run.out"])
        outdir.mkdir(parents=True, exist_ok=True)
        extra = _RUNNERS[cfg["scenario"]](cfg, outdir)
    except ConfigError as exc:
        print(f"rotoredge: config error: {exc}", file=sys.stderr)
        return 2
    except TruncationError as exc:
        print(f"rotoredge: numerical abort: {exc}", file=sys.stderr)
        return 3
    write_manifest(outdir, cfg, time.perf_counter() - start, extra)
    return 0


if __name__ == "__main__":
    sys.exit(main())
