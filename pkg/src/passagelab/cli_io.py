"""Command-line front end: config parsing, orchestration, serialization.

Subcommands map to the quantities of the study: `arrival` (detector-1 w1),
`passage` (two-detector G(tau)), `reset-state` (post-detection position and
momentum profiles), `discrete-compare` (N-mode bath vs continuum density),
`kijowski` (reference arrival distribution), `precision-sweep` (std(G) vs
kinetic energy).

Configs are YAML; physical values accept "value unit" strings (um, nm, mm/s,
cm/s, ms, 1/s, ...) while bare numbers are SI. Unknown keys are rejected.
Exit codes: 0 ok, 2 config error, 3 completed with regime warnings,
4 convergence failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from .core import (
    GaussianPacketSpec,
    ParticleSpec,
    build_grid,
    momentum_amplitudes,
    observables,
)
from .detector import DetectorSpec, DiscreteBathSpec, RectangularProfile, continuum_rates
from .discrete_oracle import (
    DiscreteResetConfig,
    compare_densities,
    continuum_reset_density,
    discrete_reset_density,
)
from .exceptions import ConfigError, ConvergenceError, PassageLabError, RegimeWarning
from .passage import (
    ExperimentConfig,
    arrival_stage,
    kijowski_distribution,
    passage_distribution,
)
from .precision import optimal_plan, scaling_sweep
from .propagator import peak_time

THREADS_ENV = "PASSAGELAB_THREADS"

_UNITS = {
    "mass": {"kg": 1.0},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9},
    "velocity": {"m/s": 1.0, "cm/s": 1e-2, "mm/s": 1e-3, "um/s": 1e-6, "µm/s": 1e-6},
    "rate": {"1/s": 1.0, "/s": 1.0, "s^-1": 1.0},
    "frequency": {"1/s": 1.0, "rad/s": 1.0, "s^-1": 1.0},
    "coupling": {"s^-1/2": 1.0, "s^-0.5": 1.0},
    "float": {},
}

_PACKET_SCHEMA = {"center": "length", "sigma": "length", "velocity": "velocity"}
_DETECTOR_SCHEMA = {
    "start": "length",
    "stop": "length",
    "decay_rate": "rate",
    "shift": "rate",
}
_GRID_SCHEMA = {"x_min": "length", "x_max": "length", "n_points": "int"}

SCHEMA = {
    "particle": {"mass": "mass"},
    "packet": _PACKET_SCHEMA,
    "detector1": _DETECTOR_SCHEMA,
    "detector2": _DETECTOR_SCHEMA,
    "grid": _GRID_SCHEMA,
    "solver": {
        "dt": "time",
        "dt2": "time?",
        "t_start": "time?",
        "t_end1": "time?",
        "tau_max": "time?",
        "tau_stride": "int",
    },
    "entry_grid": {"n": "int", "quantile_lo": "float", "quantile_hi": "float"},
    "bath": {
        "n_modes": "int",
        "omega_0": "frequency",
        "omega_max": "frequency?",
        "omega_max_ratio": "float?",
        "coupling": "coupling",
        "delta_t": "time",
        "n_time_samples": "int",
        "packet": _PACKET_SCHEMA,
        "grid": _GRID_SCHEMA,
    },
    "kijowski": {"at_x": "length", "t_min": "time", "t_max": "time", "n_times": "int"},
    "reset_state": {"at_time": "time?"},
    "sweep": {
        "v0_min": "velocity",
        "v0_max": "velocity",
        "n_points": "int",
        "distance": "length",
        "n_entry": "int",
    },
}

DEFAULTS = {
    "particle": {"mass": 2.2069e-25},
    "packet": {"center": 0.0, "sigma": 1e-6, "velocity": 7.17e-3},
    "detector1": {"start": 0.0, "stop": 20e-6, "decay_rate": 2.3895e3, "shift": 0.0},
    "detector2": {"start": 100e-6, "stop": 120e-6, "decay_rate": 2.3895e3, "shift": 0.0},
    "grid": {"x_min": -30e-6, "x_max": 200e-6, "n_points": 8192},
    "solver": {
        "dt": 1e-7,
        "dt2": None,
        "t_start": None,
        "t_end1": None,
        "tau_max": None,
        "tau_stride": 10,
    },
    "entry_grid": {"n": 256, "quantile_lo": 5e-4, "quantile_hi": 0.9995},
    "bath": {
        "n_modes": 15,
        "omega_0": 2.38e12,
        "omega_max": None,
        "omega_max_ratio": 4.6,
        "coupling": 2.782e3,
        "delta_t": 4.185e-11,
        "n_time_samples": 8192,
        "packet": {"center": 0.0, "sigma": 50e-9, "velocity": 1.79},
        "grid": {"x_min": -0.6e-6, "x_max": 0.6e-6, "n_points": 4096},
    },
    "kijowski": {"at_x": 0.0, "t_min": -0.5e-3, "t_max": 1.5e-3, "n_times": 2001},
    "reset_state": {"at_time": None},
    "sweep": {
        "v0_min": 3e-3,
        "v0_max": 30e-3,
        "n_points": 7,
        "distance": 100e-6,
        "n_entry": 256,
    },
}


def parse_quantity(raw, kind: str, path: str) -> float | int | None:
    """One config leaf: bare numbers are SI; strings may carry a unit suffix."""
    nullable = kind.endswith("?")
    base = kind.rstrip("?")
    if raw is None:
        if nullable:
            return None
        raise ConfigError(f"{path}: value is required")
    if isinstance(raw, bool):
        raise ConfigError(f"{path}: boolean is not a quantity")
    if base == "int":
        if isinstance(raw, int):
            return raw
        raise ConfigError(f"{path}: expected an integer, got {raw!r}")
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        parts = raw.split(None, 1)
        try:
            value = float(parts[0])
        except ValueError:
            raise ConfigError(f"{path}: cannot parse number from {raw!r}") from None
        if len(parts) == 1:
            return value
        unit = parts[1].strip()
        table = _UNITS.get(base, {})
        if unit not in table:
            raise ConfigError(
                f"{path}: unknown unit {unit!r} for {base} "
                f"(accepted: {', '.join(sorted(table)) or 'none'})"
            )
        return value * table[unit]
    raise ConfigError(f"{path}: unsupported value {raw!r}")


def _merge(schema: dict, defaults: dict, user: dict, path: str = "") -> dict:
    out = {}
    for key, val in user.items():
        if key not in schema:
            raise ConfigError(f"unknown key: {path}{key}")
    for key, kind in schema.items():
        here = f"{path}{key}"
        if isinstance(kind, dict):
            sub = user.get(key, {})
            if sub is None:
                sub = {}
            if not isinstance(sub, dict):
                raise ConfigError(f"{here}: expected a mapping")
            out[key] = _merge(kind, defaults[key], sub, here + ".")
        elif key in user:
            out[key] = parse_quantity(user[key], kind, here)
        else:
            out[key] = defaults[key]
    return out


def load_config(path: str | None) -> dict:
    """Parse and validate a YAML config file; None gives pure defaults."""
    if path is None:
        return _merge(SCHEMA, DEFAULTS, {})
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return _merge(SCHEMA, DEFAULTS, raw)


def build_experiment(conf: dict) -> ExperimentConfig:
    particle = ParticleSpec(mass=conf["particle"]["mass"])
    pk = conf["packet"]
    packet = GaussianPacketSpec(
        center_x0=pk["center"], sigma_x=pk["sigma"], mean_velocity_v0=pk["velocity"]
    )

    def _det(section: dict) -> DetectorSpec:
        return DetectorSpec(
            profile=RectangularProfile(section["start"], section["stop"]),
            decay_a=section["decay_rate"],
            shift=section["shift"],
        )

    g = conf["grid"]
    s = conf["solver"]
    e = conf["entry_grid"]
    return ExperimentConfig(
        particle=particle,
        packet=packet,
        detector1=_det(conf["detector1"]),
        detector2=_det(conf["detector2"]),
        grid=build_grid(g["x_min"], g["x_max"], g["n_points"]),
        dt=s["dt"],
        dt2=s["dt2"],
        t_start=s["t_start"],
        t_end1=s["t_end1"],
        n_entry=e["n"],
        entry_quantile_lo=e["quantile_lo"],
        entry_quantile_hi=e["quantile_hi"],
        tau_max=s["tau_max"],
        tau_stride=s["tau_stride"],
    )


def build_bath(conf: dict) -> tuple[DiscreteBathSpec, dict]:
    b = conf["bath"]
    omega_max = b["omega_max"]
    if omega_max is None:
        ratio = b["omega_max_ratio"]
        if ratio is None:
            raise ConfigError("bath: provide omega_max or omega_max_ratio")
        omega_max = ratio * b["omega_0"]
    bath = DiscreteBathSpec(
        n_modes=b["n_modes"],
        omega_max=omega_max,
        coupling_g=b["coupling"],
        omega_0=b["omega_0"],
    )
    return bath, b


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(f"{col[i]:.12e}" for col in columns) + "\n")


_PLOT_TEMPLATE = """\
#!/usr/bin/env python3
\"\"\"Plot {title} from {csv_name} (generated alongside the data).\"\"\"
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with (here / "{csv_name}").open() as fh:
    reader = csv.reader(fh)
    header = next(reader)
    cols = list(zip(*[[float(v) for v in row] for row in reader]))

fig, ax = plt.subplots(figsize=(7, 4.5))
for name, ys in zip(header[1:], cols[1:]):
    ax.plot(cols[0], ys, label=name)
ax.set_xlabel(header[0])
ax.legend()
{extra}
fig.tight_layout()
fig.savefig(here / "{png_name}", dpi=150)
print("wrote", here / "{png_name}")
"""


def _write_plot_script(out: Path, stem: str, title: str, logy: bool = False) -> Path:
    extra = 'ax.set_yscale("log")' if logy else ""
    script = _PLOT_TEMPLATE.format(
        title=title, csv_name=f"{stem}.csv", png_name=f"{stem}.png", extra=extra
    )
    path = out / f"plot_{stem}.py"
    path.write_text(script)
    return path


def _summary(out_dir: Path, name: str, conf: dict, payload: dict, warned: list[str]) -> Path:
    doc = {
        "subcommand": name,
        "config": conf,
        "results": payload,
        "warnings": warned,
    }
    path = out_dir / f"{name.replace('-', '_')}_summary.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _cmd_arrival(conf: dict, out: Path, emit_plots: bool) -> dict:
    cfg = build_experiment(conf)
    record, ensemble = arrival_stage(cfg)
    _write_csv(
        out / "arrival.csv",
        ["t_seconds", "w1_per_second"],
        [record.times, record.density_w1],
    )
    if emit_plots:
        _write_plot_script(out, "arrival", "first-detection density")
    return {
        "peak_time_seconds": peak_time(record),
        "detection_probability": ensemble.p_detected_1,
        "residual_norm": ensemble.residual_norm_1,
        "samples": int(len(record.times)),
    }


def _cmd_passage(conf: dict, out: Path, emit_plots: bool) -> dict:
    cfg = build_experiment(conf)
    record, ensemble = arrival_stage(cfg)
    dist = passage_distribution(cfg, ensemble)
    _write_csv(
        out / "passage.csv", ["tau_seconds", "g_per_second"], [dist.tau, dist.g_tau]
    )
    if emit_plots:
        _write_plot_script(out, "passage", "passage-time distribution")
    never, residual2 = dist.leakage_report
    return {
        "total_probability": dist.total_probability,
        "mean_tau_seconds": dist.mean_tau,
        "std_tau_seconds": dist.std_tau,
        "leakage_never_detected": never,
        "leakage_stage2_residual": residual2,
        "detection_probability_1": ensemble.p_detected_1,
        "arrival_peak_seconds": peak_time(record),
        "entry_grid_size": int(len(ensemble.entry_times)),
    }


def _cmd_reset_state(conf: dict, out: Path, emit_plots: bool) -> dict:
    cfg = build_experiment(conf)
    record, ensemble = arrival_stage(cfg)
    want = conf["reset_state"]["at_time"]
    if want is None:
        want = peak_time(record)
    i = int(np.argmin(np.abs(ensemble.entry_times - want)))
    t_used = float(ensemble.entry_times[i])
    from .core import WaveFunction

    psi = WaveFunction(grid=cfg.grid, amplitudes=ensemble.states[i], time=t_used)
    mom = observables(psi, hbar=cfg.particle.hbar)
    dens_x = np.abs(psi.amplitudes) ** 2
    phi = momentum_amplitudes(psi)
    order = np.argsort(cfg.grid.k)
    p_sorted = cfg.particle.hbar * cfg.grid.k[order]
    dens_p = (np.abs(phi) ** 2 / cfg.particle.hbar)[order]
    packet0 = GaussianPacketSpec(
        center_x0=conf["packet"]["center"],
        sigma_x=conf["packet"]["sigma"],
        mean_velocity_v0=conf["packet"]["velocity"],
    )
    from .core import gaussian_free_state

    psi0 = gaussian_free_state(packet0, cfg.particle, 0.0, cfg.grid)
    phi0 = momentum_amplitudes(psi0)
    dens_p0 = (np.abs(phi0) ** 2 / cfg.particle.hbar)[order]
    _write_csv(
        out / "reset_state_position.csv",
        ["x_meters", "density_per_meter"],
        [cfg.grid.x, dens_x],
    )
    _write_csv(
        out / "reset_state_momentum.csv",
        ["p_kg_m_per_s", "reset_density", "initial_packet_density"],
        [p_sorted, dens_p, dens_p0],
    )
    if emit_plots:
        _write_plot_script(out, "reset_state_position", "reset state, position")
        _write_plot_script(out, "reset_state_momentum", "reset state, momentum")
    return {
        "entry_time_seconds": t_used,
        "norm_sq": mom.norm_sq,
        "std_x_meters": mom.std_x,
        "std_p_kg_m_per_s": mom.std_p,
        "mean_p_kg_m_per_s": mom.mean_p,
    }


def _cmd_discrete_compare(conf: dict, out: Path, emit_plots: bool) -> dict:
    bath, b = build_bath(conf)
    particle = ParticleSpec(mass=conf["particle"]["mass"])
    pk = b["packet"]
    packet = GaussianPacketSpec(
        center_x0=pk["center"], sigma_x=pk["sigma"], mean_velocity_v0=pk["velocity"]
    )
    grid = build_grid(b["grid"]["x_min"], b["grid"]["x_max"], b["grid"]["n_points"])
    rcfg = DiscreteResetConfig(
        bath=bath, packet=packet, delta_t=b["delta_t"], n_time_samples=b["n_time_samples"]
    )
    disc = discrete_reset_density(rcfg, grid, particle)
    rates = continuum_rates(bath)
    cont = continuum_reset_density(packet, particle, rates.decay_a, b["delta_t"], grid)
    metrics = compare_densities(
        disc, cont, exclusion=(-2.0 * packet.sigma_x, 2.0 * packet.sigma_x)
    )
    _write_csv(
        out / "discrete_compare.csv",
        ["x_meters", "discrete_density_per_meter", "continuum_density_per_meter"],
        [grid.x, disc.values, cont.values],
    )
    if emit_plots:
        _write_plot_script(out, "discrete_compare", "discrete vs continuum density")
    return {
        "l1_full": metrics.l1_full,
        "l1_masked": metrics.l1_masked,
        "exclusion_meters": list(metrics.exclusion),
        "decay_a_per_second": rates.decay_a,
        "shift_per_second": rates.shift,
    }


def _cmd_kijowski(conf: dict, out: Path, emit_plots: bool) -> dict:
    particle = ParticleSpec(mass=conf["particle"]["mass"])
    pk = conf["packet"]
    packet = GaussianPacketSpec(
        center_x0=pk["center"], sigma_x=pk["sigma"], mean_velocity_v0=pk["velocity"]
    )
    kj = conf["kijowski"]
    t = np.linspace(kj["t_min"], kj["t_max"], kj["n_times"])
    pi_k = kijowski_distribution(packet, particle, kj["at_x"], t)
    _write_csv(out / "kijowski.csv", ["t_seconds", "pi_k_per_second"], [t, pi_k])
    if emit_plots:
        _write_plot_script(out, "kijowski", "reference arrival distribution")
    norm = float(np.trapezoid(pi_k, t))
    return {"normalization_on_grid": norm, "at_x_meters": kj["at_x"]}


def _cmd_precision_sweep(conf: dict, out: Path, emit_plots: bool, threads: int) -> dict:
    sw = conf["sweep"]
    particle = ParticleSpec(mass=conf["particle"]["mass"])
    v0s = np.geomspace(sw["v0_min"], sw["v0_max"], sw["n_points"])
    if threads > 1:
        pool = ThreadPoolExecutor(max_workers=threads)
        mapper = pool.map
    else:
        pool = None
        mapper = map
    try:
        result = scaling_sweep(
            v0s, sw["distance"], particle, n_entry=sw["n_entry"], mapper=mapper
        )
    finally:
        if pool is not None:
            pool.shutdown()
    _write_csv(
        out / "precision_sweep.csv",
        ["v0_m_per_s", "energy_joules", "std_tau_seconds", "delta_tau_opt_seconds"],
        [result.v0, result.energy, result.std_tau, result.delta_tau_opt],
    )
    if emit_plots:
        _write_plot_script(out, "precision_sweep", "width vs energy", logy=True)
    plan_ref = optimal_plan(sw["distance"], particle, 7.17e-3)
    return {
        "exponent": result.exponent,
        "total_probability": [float(v) for v in result.total_probability],
        "reference_plan_v0_7.17mm_s": {
            "delta_x_opt_meters": plan_ref.delta_x_opt,
            "a_opt_per_second": plan_ref.a_opt,
            "delta_tau_opt_seconds": plan_ref.delta_tau_opt,
        },
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="passagelab",
        description="Simulated quantum arrival- and passage-time measurements.",
    )
    parser.add_argument(
        "subcommand",
        choices=[
            "arrival",
            "passage",
            "reset-state",
            "discrete-compare",
            "kijowski",
            "precision-sweep",
        ],
    )
    parser.add_argument("--config", default=None, help="YAML config path")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get(THREADS_ENV, "1")),
        help=f"worker threads for sweeps (default ${THREADS_ENV} or 1)",
    )
    parser.add_argument(
        "--emit-plots", action="store_true", help="write plot scripts next to the CSVs"
    )
    args = parser.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2

    started = time.time()
    try:
        conf = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RegimeWarning)
            if args.subcommand == "arrival":
                payload = _cmd_arrival(conf, out, args.emit_plots)
            elif args.subcommand == "passage":
                payload = _cmd_passage(conf, out, args.emit_plots)
            elif args.subcommand == "reset-state":
                payload = _cmd_reset_state(conf, out, args.emit_plots)
            elif args.subcommand == "discrete-compare":
                payload = _cmd_discrete_compare(conf, out, args.emit_plots)
            elif args.subcommand == "kijowski":
                payload = _cmd_kijowski(conf, out, args.emit_plots)
            else:
                payload = _cmd_precision_sweep(conf, out, args.emit_plots, args.threads)
        warned = [str(w.message) for w in caught if issubclass(w.category, RegimeWarning)]
        payload["runtime_seconds"] = round(time.time() - started, 3)
        _summary(out, args.subcommand, conf, payload, warned)
        for line in warned:
            print(f"warning: {line}", file=sys.stderr)
        return 3 if warned else 0
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PassageLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
