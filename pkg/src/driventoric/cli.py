"""Command-line front end: JSON-configured runs emitting CSV series and JSON
summaries.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  All
randomness flows through an explicit integer seed in the configuration, so
identical configurations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .diagnostics import (
    count_in_gap_edge_modes,
    edge_spectrum,
    heating_q,
    heating_qbar,
    majorana_scan,
    random_even_configs,
    sector_ground_energies,
    spin_oracle,
)
from .exchange import DegeneratePathError, FusionSector, exchange_phase
from .floquet import PropagationError, quasienergy_sweep, write_sweep_csv
from .lattice import (
    LatticeError,
    LatticeSpec,
    SectorSpec,
    VortexConfig,
    build_lattice,
)
from .model import DriveParams

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SECTOR_LABELS = {"PP": (1, 1), "PA": (1, -1), "AP": (-1, 1), "AA": (-1, -1)}


class ConfigError(ValueError):
    pass


def _check_keys(data: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")
    missing = required - set(data)
    if missing:
        raise ConfigError(f"missing keys {sorted(missing)} in {where}")


def _parse_lattice(data: dict) -> LatticeSpec:
    _check_keys(data, {"Lx", "Ly", "topology"}, {"Lx", "Ly"}, "lattice")
    try:
        return build_lattice(int(data["Lx"]), int(data["Ly"]), data.get("topology", "torus"))
    except LatticeError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_params(data: dict) -> DriveParams:
    _check_keys(
        data,
        {"g", "J", "Delta", "omega", "phi_x", "phi_y", "t0", "mu"},
        {"J", "Delta"},
        "params",
    )
    g = float(data.get("g", 1.0))
    if "omega" in data and "mu" in data:
        raise ConfigError("give either omega or mu, not both")
    if "omega" in data:
        omega = float(data["omega"])
    elif "mu" in data:
        omega = 2.0 * (2.0 * g + float(data["mu"]))
    else:
        raise ConfigError("params needs omega (or mu to derive it)")
    try:
        return DriveParams(
            J=float(data["J"]),
            Delta=float(data["Delta"]),
            omega=omega,
            g=g,
            phi_x=float(data.get("phi_x", 0.0)),
            phi_y=float(data.get("phi_y", math.pi / 2)),
            t0=float(data.get("t0", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_sector(value) -> SectorSpec:
    if isinstance(value, str):
        if value not in SECTOR_LABELS:
            raise ConfigError(f"unknown sector label {value!r}")
        return SectorSpec(*SECTOR_LABELS[value])
    _check_keys(value, {"wx", "wy"}, {"wx", "wy"}, "sector")
    try:
        return SectorSpec(int(value["wx"]), int(value["wy"]))
    except LatticeError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_vortices(data, lat: LatticeSpec) -> list[VortexConfig]:
    """Explicit vertex list, or seeded random configurations at a density."""
    if data is None:
        return [VortexConfig.empty(lat)]
    if "vertices" in data:
        _check_keys(data, {"vertices"}, {"vertices"}, "vortices")
        try:
            return [
                VortexConfig.from_vertices(lat, [(int(c), int(r)) for c, r in data["vertices"]])
            ]
        except LatticeError as exc:
            raise ConfigError(str(exc)) from exc
    _check_keys(data, {"density", "seed", "samples"}, {"density", "seed"}, "vortices")
    return random_even_configs(
        lat, float(data["density"]), int(data.get("samples", 20)), int(data["seed"])
    )


def _write_csv(path: str, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: repr(v) if isinstance(v, float) else v for k, v in row.items()}
            )


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


COMMON_KEYS = {"lattice", "params", "sector", "vortices", "n_steps", "scheme"}


def _common(config: dict):
    lat = _parse_lattice(config.get("lattice", {}))
    params = _parse_params(config.get("params", {}))
    n_steps = int(config.get("n_steps", 256))
    scheme = config.get("scheme", "cf4")
    if scheme not in ("cf4", "midpoint"):
        raise ConfigError(f"unknown scheme {scheme!r}")
    return lat, params, n_steps, scheme


def cmd_spectrum(config: dict, out_dir: str, sector_flag: str | None, threads: int) -> dict:
    _check_keys(
        config, COMMON_KEYS | {"grid", "flag_fraction"}, {"lattice", "params"}, "config"
    )
    lat, params, n_steps, scheme = _common(config)
    plan: dict = {"command": "spectrum", "lattice": lat.topology, "n_steps": n_steps}
    if lat.topology == "cylinder":
        sector = _parse_sector(config.get("sector", "AA"))
        rows = edge_spectrum(lat, params, wy=sector.wy, n_steps=n_steps, scheme=scheme)
        _write_csv(
            os.path.join(out_dir, "spectrum.csv"),
            ["momentum", "quasienergy", "edge_weight"],
            rows,
        )
        try:
            count, gap = count_in_gap_edge_modes(rows)
        except ValueError:
            count, gap = None, None  # cylinder too narrow to separate bulk from edge
        _write_json(
            os.path.join(out_dir, "spectrum.json"),
            {
                "schema_version": 1,
                "in_gap_edge_modes": count,
                "bulk_gap": gap,
                "n_rows": len(rows),
            },
        )
        plan["rows"] = len(rows)
        return plan
    sector = _parse_sector(config.get("sector", "AA"))
    cfgs = _parse_vortices(config.get("vortices"), lat)
    cfg = cfgs[0]
    grid_spec = config.get("grid")
    if grid_spec is not None:
        grid = [_parse_params(g) for g in grid_spec]
    else:
        grid = [params]
    if cfg.total() > 0:
        rows = majorana_scan(
            grid,
            lat,
            cfg,
            sector,
            n_steps=n_steps,
            scheme=scheme,
            flag_fraction=float(config.get("flag_fraction", 0.05)),
        )
        _write_csv(
            os.path.join(out_dir, "scan.csv"),
            [
                "param_index",
                "J",
                "Delta",
                "omega",
                "min_abs_eps",
                "min_pi_dist",
                "bulk_gap_zero",
                "bulk_gap_pi",
                "zero_mode",
                "pi_mode",
                "ipr_zero_mode",
            ],
            rows,
        )
    else:
        rows = quasienergy_sweep(grid, lat, cfg, sector, n_steps=n_steps, scheme=scheme)
        write_sweep_csv(rows, os.path.join(out_dir, "scan.csv"))
    _write_json(
        os.path.join(out_dir, "spectrum.json"),
        {"schema_version": 1, "n_rows": len(rows), "vortices": cfg.total()},
    )
    plan["rows"] = len(rows)
    return plan


def cmd_exchange(config: dict, out_dir: str, sector_flag: str | None, threads: int) -> dict:
    _check_keys(
        config,
        COMMON_KEYS | {"arm_length", "junction", "orientation"},
        {"lattice", "params"},
        "config",
    )
    lat, params, n_steps, scheme = _common(config)
    arm = int(config.get("arm_length", 2))
    junction = tuple(config["junction"]) if "junction" in config else None
    orientation = config.get("orientation", "ccw")
    if sector_flag is not None and sector_flag not in ("vacuum", "fermion"):
        raise ConfigError(f"unknown fusion sector {sector_flag!r}")
    sectors = [sector_flag] if sector_flag else ["vacuum", "fermion"]
    summary = {"schema_version": 1, "results": {}}
    for name in sectors:
        result = exchange_phase(
            FusionSector(name),
            params,
            lat,
            arm_length=arm,
            junction=junction,
            orientation=orientation,
            n_steps=n_steps,
            scheme=scheme,
        )
        with open(os.path.join(out_dir, f"exchange_{name}.json"), "w") as fh:
            fh.write(result.to_json())
            fh.write("\n")
        summary["results"][name] = result.exchange_phase
    if len(sectors) == 2:
        summary["sector_difference"] = math.remainder(
            summary["results"]["fermion"] - summary["results"]["vacuum"], 2 * math.pi
        )
    _write_json(os.path.join(out_dir, "exchange.json"), summary)
    return {"command": "exchange", "sectors": sectors, "arm_length": arm}


def _degeneracy_point(args):
    size, params_json, n_steps, scheme = args
    params = DriveParams(**json.loads(params_json))
    lat = build_lattice(size, size)
    out = sector_ground_energies(lat, params, n_steps=n_steps, scheme=scheme)
    return size, out


def cmd_degeneracy(config: dict, out_dir: str, sector_flag: str | None, threads: int) -> dict:
    _check_keys(config, COMMON_KEYS | {"sizes"}, {"params", "sizes"}, "config")
    params = _parse_params(config["params"])
    n_steps = int(config.get("n_steps", 256))
    scheme = config.get("scheme", "cf4")
    sizes = [int(s) for s in config["sizes"]]
    args = [
        (
            size,
            json.dumps(
                {
                    "J": params.J,
                    "Delta": params.Delta,
                    "omega": params.omega,
                    "g": params.g,
                    "phi_x": params.phi_x,
                    "phi_y": params.phi_y,
                    "t0": params.t0,
                }
            ),
            n_steps,
            scheme,
        )
        for size in sizes
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_degeneracy_point, args))
    else:
        results = [_degeneracy_point(a) for a in args]
    rows = []
    summary = {"schema_version": 1, "splittings": {}}
    for size, out in results:
        for row in out.rows:
            rows.append({"L": size, **row})
        summary["splittings"][str(size)] = out.splitting
    _write_csv(
        os.path.join(out_dir, "degeneracy.csv"),
        ["L", "sector", "wx", "wy", "energy", "parity", "parity_determinate", "physical_energy"],
        rows,
    )
    _write_json(os.path.join(out_dir, "degeneracy.json"), summary)
    return {"command": "degeneracy", "sizes": sizes}


def cmd_heating(config: dict, out_dir: str, sector_flag: str | None, threads: int) -> dict:
    _check_keys(
        config, COMMON_KEYS | {"n_periods", "sample_every"}, {"lattice", "params"}, "config"
    )
    lat, params, n_steps, scheme = _common(config)
    sector = _parse_sector(config.get("sector", "AA"))
    cfgs = _parse_vortices(config.get("vortices"), lat)
    n_periods = int(config.get("n_periods", 1000))
    sample_every = int(config.get("sample_every", 1))
    series = []
    q_bars = []
    for cfg in cfgs:
        report = heating_q(
            n_periods, params, cfg, sector, lat, n_steps=n_steps, scheme=scheme,
            sample_every=sample_every,
        )
        series.append(dict(report.q_series))
        q_bars.append(heating_qbar(params, cfg, sector, lat, n_steps=n_steps, scheme=scheme))
    periods = sorted(series[0])
    rows = []
    for n in periods:
        values = [s[n] for s in series]
        rows.append(
            {
                "n": n,
                "Q_mean": float(np.mean(values)),
                "Q_std": float(np.std(values)),
            }
        )
    _write_csv(os.path.join(out_dir, "heating_q.csv"), ["n", "Q_mean", "Q_std"], rows)
    _write_json(
        os.path.join(out_dir, "heating.json"),
        {
            "schema_version": 1,
            "q_bar_mean": float(np.mean(q_bars)),
            "q_bar_std": float(np.std(q_bars)),
            "samples": len(cfgs),
            "J_over_omega": params.J / params.omega,
        },
    )
    return {"command": "heating", "samples": len(cfgs), "n_periods": n_periods}


def cmd_oracle(config: dict, out_dir: str, sector_flag: str | None, threads: int) -> dict:
    _check_keys(config, {"params", "n_steps", "scheme", "threshold"}, {"params"}, "config")
    params = _parse_params(config["params"])
    n_steps = int(config.get("n_steps", 512))
    scheme = config.get("scheme", "cf4")
    threshold = config.get("threshold")
    report = spin_oracle(
        params,
        t0=params.t0,
        n_steps=n_steps,
        threshold=float(threshold) if threshold is not None else None,
        run_control=True,
        scheme=scheme,
    )
    with open(os.path.join(out_dir, "oracle.json"), "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    verdict = "PASS" if report.passed else "FAIL"
    print(
        f"oracle max mismatch {report.max_mismatch:.3e} "
        f"(threshold {report.threshold:.3e}, control {report.control_mismatch:.3e}): {verdict}"
    )
    return {"command": "oracle", "passed": report.passed}


COMMANDS = {
    "spectrum": cmd_spectrum,
    "exchange": cmd_exchange,
    "degeneracy": cmd_degeneracy,
    "heating": cmd_heating,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="driventoric",
        description="Floquet simulator for the driven toric code in its free-fermion form",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--dry-run", action="store_true", help="print the resolved plan and exit")
    parser.add_argument(
        "--sector", default=None, help="restrict exchange to one fusion sector"
    )
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        if not isinstance(config, dict):
            raise ConfigError("top-level configuration must be a JSON object")
        if args.dry_run:
            plan = {
                "command": args.command,
                "config": config,
                "out": args.out,
                "threads": args.threads,
            }
            print(json.dumps(plan, indent=2, sort_keys=True))
            return 0
        os.makedirs(args.out, exist_ok=True)
        plan = COMMANDS[args.command](config, args.out, args.sector, args.threads)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PropagationError, DegeneratePathError, ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps({"done": plan}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
