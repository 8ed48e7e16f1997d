"""Command-line entry point.

Subcommands: solve (single-frequency training run), sweep (frequency sweep
with spectral post-processing), oracle (analytic reference only), gradcheck
(finite-difference gradient audit).  One YAML config file per run; the
resolved configuration (defaults filled in, overrides applied) is written
next to the outputs for provenance.  All numeric outputs are CSV with a
header row so any plotting tool can consume them.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

import argparse
import datetime
import os
import sys

import numpy as np
import yaml

from . import backend
from .geometry import (PhysicalConfig, ShoeboxDomain, absorption_coefficient,
                       make_config, quad_count, training_point_count)
from .model import param_count, save_params, total_field_batch
from .oracle import (NewtonError, build_mode_table, export_mode_table,
                     modal_green_batch)
from .spectral import error_metrics, impulse_response, spl, sweep, unwrap_phase
from .training import TrainConfig, TrainingError, gradcheck, train, write_report


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "domain": {"dims": list, "source": list},
    "physics": {"c": (int, float), "rho": (int, float), "impedance": dict},
    "frequency": (int, float),
    "sweep": {"start": (int, float), "stop": (int, float), "step": (int, float)},
    "training": {"epochs": int, "lr": (int, float), "lr_decay": (int, float),
                 "ppw": (int, float), "n_min": int, "quad_min": int,
                 "batch_threshold": int, "resample_every": int, "seed": int},
    "receiver": list,
    "grid": {"points_per_axis": int},
    "oracle": {"freq_factor": (int, float)},
    "output_dir": str,
}


def _check_keys(cfg: dict, schema: dict, path: str = "") -> None:
    for key, val in cfg.items():
        if key not in schema:
            raise ConfigError(f"unknown configuration key '{path}{key}'")
        spec = schema[key]
        if isinstance(spec, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"'{path}{key}' must be a mapping")
            _check_keys(val, spec, path=f"{path}{key}.")
        elif not isinstance(val, spec):
            raise ConfigError(f"'{path}{key}' has the wrong type")


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a YAML mapping")
    _check_keys(cfg, _SCHEMA)
    return cfg


def _resolve(cfg: dict, args) -> dict:
    """Fill in defaults and apply command-line overrides."""
    out = {
        "domain": dict(cfg.get("domain", {})),
        "physics": dict(cfg.get("physics", {"c": 343.0, "rho": 1.2})),
        "training": dict(cfg.get("training", {})),
        "grid": dict(cfg.get("grid", {"points_per_axis": 10})),
        "oracle": dict(cfg.get("oracle", {"freq_factor": 2.0})),
        "output_dir": cfg.get("output_dir", "out"),
    }
    for key in ("frequency", "sweep", "receiver"):
        if key in cfg:
            out[key] = cfg[key]
    out["physics"].setdefault("c", 343.0)
    out["physics"].setdefault("rho", 1.2)
    defaults = TrainConfig()
    for name in ("epochs", "lr", "lr_decay", "ppw", "n_min", "quad_min",
                 "batch_threshold", "resample_every", "seed"):
        out["training"].setdefault(name, getattr(defaults, name))
    if args.seed is not None:
        out["training"]["seed"] = args.seed
    if args.out is not None:
        out["output_dir"] = args.out
    return out


def _domain(cfg: dict) -> ShoeboxDomain:
    dom = cfg.get("domain", {})
    if "dims" not in dom:
        raise ConfigError("domain.dims is required")
    try:
        return ShoeboxDomain(dims=tuple(dom["dims"]),
                             source=tuple(dom["source"]) if dom.get("source") else None)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _physics(cfg: dict, f: float) -> PhysicalConfig:
    phys = cfg["physics"]
    imp = phys.get("impedance")
    if not isinstance(imp, dict) or "re" not in imp:
        raise ConfigError("physics.impedance must be a mapping with re/im")
    Z = complex(float(imp["re"]), float(imp.get("im", 0.0)))
    try:
        return make_config(float(phys["c"]), float(phys["rho"]), f, Z)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc))


def _train_config(cfg: dict) -> TrainConfig:
    t = cfg["training"]
    try:
        return TrainConfig(epochs=int(t["epochs"]), lr=float(t["lr"]),
                           lr_decay=float(t["lr_decay"]),
                           ppw=float(t["ppw"]), n_min=int(t["n_min"]),
                           quad_min=int(t["quad_min"]) if t["quad_min"] else None,
                           batch_threshold=int(t["batch_threshold"]),
                           resample_every=int(t["resample_every"]),
                           seed=int(t["seed"]))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc))


def _write_csv(path, header, columns) -> None:
    data = np.column_stack(columns)
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="",
               fmt="%.12g")


def _write_provenance(outdir, resolved) -> None:
    with open(os.path.join(outdir, "resolved_config.yaml"), "w", encoding="utf-8") as fh:
        yaml.safe_dump(resolved, fh, sort_keys=True)


class _RunLock:
    """One process per run directory."""

    def __init__(self, outdir):
        self.path = os.path.join(outdir, ".hergnet.lock")

    def __enter__(self):
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(f"run directory is locked ({self.path}); "
                              "remove the lock if no other run is active")
        os.write(self.fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc):
        os.close(self.fd)
        os.unlink(self.path)
        return False


def _grid_points(domain, n_per_axis):
    return domain.interior_grid(n_per_axis)


def cmd_solve(cfg, args) -> int:
    if "frequency" not in cfg:
        raise ConfigError("solve requires a 'frequency' entry")
    f = float(cfg["frequency"])
    domain = _domain(cfg)
    phys = _physics(cfg, f)
    tc = _train_config(cfg)
    n_train = training_point_count(domain, f, phys.c, tc.ppw, tc.n_min)
    n_quad = quad_count(f, tc.quad_min or tc.n_min)
    n_param = param_count(domain.ndim, n_quad)

    if args.dry_run:
        print(f"n_train = {n_train}")
        print(f"n_quad = {n_quad}")
        print(f"n_param = {n_param}")
        print("dry run: configuration valid, no training performed")
        return 0

    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    with _RunLock(outdir):
        _write_provenance(outdir, cfg)
        rng = np.random.default_rng(tc.seed)
        try:
            params, report = train(tc, phys, domain, rng)
        except TrainingError as exc:
            print(f"training failed: {exc}", file=sys.stderr)
            return 3
        save_params(os.path.join(outdir, "params.npz"), params)
        write_report(os.path.join(outdir, "train_report.txt"), report)
        _write_csv(os.path.join(outdir, "loss_history.csv"),
                   ["epoch", "loss"],
                   [np.arange(len(report.loss_history)), report.loss_history])

        grid = _grid_points(domain, cfg["grid"]["points_per_axis"])
        pred, _ = total_field_batch(params, grid, phys, domain)
        cols = [grid[:, a] for a in range(domain.ndim)]
        names = ["x_m", "y_m", "z_m"][:domain.ndim]
        _write_csv(os.path.join(outdir, "field_pred.csv"),
                   names + ["re", "im"], cols + [pred.real, pred.imag])
        summary_err = None
        if domain.source is not None:
            oracle_vals = modal_green_batch(grid, np.asarray(domain.source), phys,
                                            domain,
                                            freq_factor=cfg["oracle"]["freq_factor"])
            _write_csv(os.path.join(outdir, "field_oracle.csv"),
                       names + ["re", "im"], cols + [oracle_vals.real, oracle_vals.imag])
            err = error_metrics(pred, oracle_vals)
            _write_csv(os.path.join(outdir, "field_error.csv"),
                       names + ["abs_err"], cols + [err.pointwise])
            summary_err = err

        with open(os.path.join(outdir, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write(f"timestamp = {datetime.datetime.now().isoformat()}\n")
            fh.write(f"backend = {backend.backend_name()}\n")
            fh.write(f"frequency_hz = {f}\n")
            fh.write(f"n_train = {n_train}\nn_quad = {n_quad}\nn_param = {n_param}\n")
            fh.write(f"alpha = {absorption_coefficient(phys.Z, phys.rho, phys.c):.6f}\n")
            fh.write(f"final_loss = {report.loss_history[-1]:.6e}\n")
            fh.write(f"wall_time_s = {report.wall_time:.1f}\n")
            if summary_err is not None:
                fh.write(f"grid_max_abs_error = {summary_err.max_abs:.6e}\n")
                fh.write(f"grid_max_rel_error = {summary_err.max_rel:.6e}\n")
                fh.write(f"grid_rel_l2_error = {summary_err.rel_l2:.6e}\n")
    print(f"solve complete: outputs in {outdir}")
    return 0


def cmd_sweep(cfg, args) -> int:
    if "sweep" not in cfg:
        raise ConfigError("sweep requires a 'sweep' entry")
    if "receiver" not in cfg:
        raise ConfigError("sweep requires a 'receiver' entry")
    sw = cfg["sweep"]
    try:
        freqs = np.arange(float(sw["start"]), float(sw["stop"]) + 0.5 * float(sw["step"]),
                          float(sw["step"]))
    except KeyError as exc:
        raise ConfigError(f"sweep entry missing {exc}")
    if len(freqs) == 0 or freqs[0] <= 0:
        raise ConfigError("sweep range is empty or starts at a non-positive frequency")
    domain = _domain(cfg)
    if domain.source is None:
        raise ConfigError("sweep requires a domain source")
    phys = _physics(cfg, float(freqs[0]))
    tc = _train_config(cfg)
    receiver = np.asarray(cfg["receiver"], dtype=float)
    if receiver.shape != (domain.ndim,):
        raise ConfigError("receiver dimension does not match the domain")

    if args.dry_run:
        for f in freqs:
            print(f"f = {f:7.1f} Hz: n_train = "
                  f"{training_point_count(domain, f, phys.c, tc.ppw, tc.n_min)}, "
                  f"n_quad = {quad_count(f, tc.quad_min or tc.n_min)}")
        return 0

    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    with _RunLock(outdir):
        _write_provenance(outdir, cfg)

        def progress(i, total, f):
            print(f"[{i + 1}/{total}] f = {f:.1f} Hz", flush=True)

        result = sweep(tc, phys, domain, freqs, receiver,
                       oracle_freq_factor=cfg["oracle"]["freq_factor"],
                       progress=progress)
        tf, otf = result.model, result.oracle
        _write_csv(os.path.join(outdir, "transfer_function.csv"),
                   ["f_hz", "re", "im", "oracle_re", "oracle_im"],
                   [tf.freqs, tf.values.real, tf.values.imag,
                    otf.values.real, otf.values.imag])
        _write_csv(os.path.join(outdir, "spl.csv"),
                   ["f_hz", "spl_db", "oracle_spl_db"],
                   [tf.freqs, spl(tf.values), spl(otf.values)])
        _write_csv(os.path.join(outdir, "phase.csv"),
                   ["f_hz", "phase_rad", "oracle_phase_rad"],
                   [tf.freqs, unwrap_phase(tf.values), unwrap_phase(otf.values)])
        ir = impulse_response(tf)
        oir = impulse_response(otf)
        _write_csv(os.path.join(outdir, "impulse_response.csv"),
                   ["t_s", "h", "oracle_h"], [ir.t, ir.h, oir.h])
        peak = np.abs(oir.h).max()
        _write_csv(os.path.join(outdir, "ir_error.csv"),
                   ["t_s", "rel_err"], [ir.t, np.abs(ir.h - oir.h) / peak])
        with open(os.path.join(outdir, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write(f"timestamp = {datetime.datetime.now().isoformat()}\n")
            fh.write(f"backend = {backend.backend_name()}\n")
            fh.write(f"n_frequencies = {len(freqs)}\n")
            fh.write(f"failures = {len(result.failures)}\n")
            for f, msg in result.failures:
                fh.write(f"failed f = {f}: {msg}\n")
        if result.failures:
            print(f"sweep finished with {len(result.failures)} per-frequency "
                  f"failures; partial outputs flagged in summary.txt", file=sys.stderr)
            return 3
    print(f"sweep complete: outputs in {outdir}")
    return 0


def cmd_oracle(cfg, args) -> int:
    if "frequency" not in cfg:
        raise ConfigError("oracle requires a 'frequency' entry")
    f = float(cfg["frequency"])
    domain = _domain(cfg)
    phys = _physics(cfg, f)
    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    with _RunLock(outdir):
        _write_provenance(outdir, cfg)
        try:
            table = build_mode_table(phys, domain,
                                     freq_factor=cfg["oracle"]["freq_factor"])
        except NewtonError as exc:
            print(f"mode finding failed: {exc}", file=sys.stderr)
            return 3
        export_mode_table(os.path.join(outdir, "mode_table.txt"), table)
        if domain.source is not None:
            grid = _grid_points(domain, cfg["grid"]["points_per_axis"])
            vals = modal_green_batch(grid, np.asarray(domain.source), phys,
                                     domain, table=table)
            names = ["x_m", "y_m", "z_m"][:domain.ndim]
            _write_csv(os.path.join(outdir, "field_oracle.csv"),
                       names + ["re", "im"],
                       [grid[:, a] for a in range(domain.ndim)] + [vals.real, vals.imag])
    print(f"oracle outputs in {outdir}")
    return 0


def cmd_gradcheck(cfg, args) -> int:
    domain = _domain(cfg) if "domain" in cfg else \
        ShoeboxDomain(dims=(1.0, 1.4), source=(0.2, 0.4))
    f = float(cfg.get("frequency", 300.0))
    phys = _physics(cfg, f) if "physics" in cfg and "impedance" in cfg["physics"] \
        else make_config(343.0, 1.2, f, (10 - 10j) * 1.2 * 343.0)
    rng = np.random.default_rng(cfg["training"]["seed"])
    report = gradcheck(phys, domain, rng)
    print(f"gradcheck: max relative error {report.max_rel_error:.3e} "
          f"over {report.n_checked} coordinates")
    return 0 if report.max_rel_error < 1e-5 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hergnet",
        description="Plane-wave superposition Helmholtz solver for shoebox rooms")
    parser.add_argument("command", choices=["solve", "sweep", "oracle", "gradcheck"])
    parser.add_argument("--config", required=True, help="YAML configuration file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="training seed (overrides config)")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate config and print counts, no computation")
    parser.add_argument("--threads", type=int, default=0,
                        help="worker thread limit (numba lane only)")
    args = parser.parse_args(argv)

    backend.set_num_threads(args.threads)
    handlers = {"solve": cmd_solve, "sweep": cmd_sweep,
                "oracle": cmd_oracle, "gradcheck": cmd_gradcheck}
    try:
        cfg = _resolve(load_config(args.config), args)
        return handlers[args.command](cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, NewtonError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
