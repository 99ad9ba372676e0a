"""Command-line drivers: config-driven experiments with CSV outputs.

Subcommands: forward, fdm, compare, inverse, ablate-activation,
export-source, diagnostics.  Every run writes its outputs plus a manifest
(file -> sha256) and an echo of the configuration into the output
directory, so reruns are verifiable byte-for-byte.  Figures are emitted as
plot-ready CSV data, never images.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .config import RunConfig, parse_config_file, serialize_config
from .excitation import RosenbergSpec, rosenberg_wave
from .fdm import FdmConfig, extract_steady_period, fdm_simulate, resample_field
from .losses import PrimedWeights
from .network import ArchitectureConfig, eval_with_input_derivs, save_checkpoint
from .physics import (
    AirProperties,
    TubeGeometry,
    loss_coefficients,
    radiation_constants,
)
from .sampling import (
    CollocationCounts,
    build_collocation,
    collocation_diagnostics,
    uniform_grid,
)
from .training import TrainConfig, TrainingProblem, train

logger = logging.getLogger("tubepinn")

HISTORY_COLUMNS = [
    "epoch", "L_all", "L_E", "L_B", "L_C", "L_P", "L_u", "L_p", "L_t", "L_M",
    "lr", "omega_c", "l_v", "d_v",
]


# ---------------------------------------------------------------------------
# config -> objects
# ---------------------------------------------------------------------------


def build_air(c: dict) -> AirProperties:
    a = c["air"]
    return AirProperties(
        rho=a["rho"],
        K=a["bulk_modulus"],
        c=a["speed_of_sound"],
        mu=a["viscosity"],
        eta=a["heat_capacity_ratio"],
        lambda_th=a["thermal_conductivity"],
        cp=a["cp"],
        cp_unit_convention=a["cp_convention"],
    )


def build_tube(c: dict) -> TubeGeometry:
    return TubeGeometry(length=c["tube"]["length"], diameter=c["tube"]["diameter"])


def build_source(c: dict) -> RosenbergSpec:
    s = c["source"]
    return RosenbergSpec(
        f0=s["f0"],
        peak_velocity=s["peak_velocity"],
        rise_fraction=s["rise_fraction"],
        fall_fraction=s["fall_fraction"],
        smoothing_window=s["smoothing_window"] or None,
        sample_count=s["sample_count"],
        n_harmonics=s["n_harmonics"] or None,
    )


def build_counts(c: dict) -> CollocationCounts:
    s = c["sampler"]
    return CollocationCounts(
        n_interior=s["n_interior"],
        n_boundary=s["n_boundary"],
        n_coupling=s["n_coupling"],
        n_periodic=s["n_periodic"],
        n_measurement=s["n_measurement"],
    )


def build_arch(c: dict, seed: int, activation=None) -> ArchitectureConfig:
    n = c["network"]
    return ArchitectureConfig(
        n_nodes=n["n_nodes"],
        n_blocks=n["n_blocks"],
        alpha_phi=n["alpha_phi"],
        alpha_u=n["alpha_u"],
        seed=seed,
        activation=activation or n["activation"],
    )


def build_weights(c: dict) -> PrimedWeights:
    w = c["weights"]
    return PrimedWeights(
        lambda_E=w["lambda_E"],
        lambda_P=w["lambda_P"],
        lambda_C=w["lambda_C"],
        lambda_p=w["lambda_p"],
        lambda_t=w["lambda_t"],
        lambda_M=w["lambda_M"],
        lambda_B_primed=w["lambda_B_primed"],
        lambda_u_primed=w["lambda_u_primed"],
        lambda_l_primed=w["lambda_l_primed"],
        lambda_r_primed=w["lambda_r_primed"],
    )


def build_train_config(c: dict, mode: str, seed: int) -> TrainConfig:
    t = c["training"]
    return TrainConfig(
        epochs=t["epochs"],
        lr_init=t["lr_init"],
        lr_decay=t["lr_decay"],
        early_stop=t["early_stop"],
        seed=seed,
        mode=mode,
        noise_fraction=t["noise_fraction"],
        log_every=t["log_every"],
        scalar_warmup_epochs=max(0, t["scalar_warmup_epochs"]),
    )


def build_fdm_config(c: dict, **overrides) -> FdmConfig:
    f = dict(c["fdm"])
    f.pop("csv_stride_x")
    f.pop("csv_stride_t")
    f["field_periods"] = f["field_periods"] or None
    f.update(overrides)
    return FdmConfig(**f)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


class ResultWriter:
    """Accumulates output files in a run directory and writes the manifest."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out_dir / name

    def write_csv(self, name: str, header: list[str], rows):
        with open(self.path(name), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)

    def write_history(self, history):
        rows = []
        for r in history:
            rows.append(
                [r.epoch]
                + [_fmt(v) for v in (r.L_all, r.L_E, r.L_B, r.L_C, r.L_P, r.L_u, r.L_p, r.L_t)]
                + [_fmt(r.L_M), _fmt(r.lr), _fmt(r.omega_c), _fmt(r.l_v), _fmt(r.d_v)]
            )
        self.write_csv("loss_history.csv", HISTORY_COLUMNS, rows)

    def write_config(self, config: RunConfig, resolved: dict):
        with open(self.path("config.txt"), "w") as fh:
            fh.write(serialize_config(config))
        with open(self.path("config_resolved.json"), "w") as fh:
            json.dump(resolved, fh, indent=1, sort_keys=True)

    def finish(self) -> dict:
        manifest = {"files": {}}
        for name in sorted(set(self.files)):
            digest = hashlib.sha256((self.out_dir / name).read_bytes()).hexdigest()
            manifest["files"][name] = digest
        with open(self.out_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
        return manifest


def write_waveform(writer: ResultWriter, name: str, t: np.ndarray, values: np.ndarray):
    writer.write_csv(name, ["t", "value"], ([_fmt(a), _fmt(b)] for a, b in zip(t, values)))


def write_field(writer: ResultWriter, name: str, x, t, p, u):
    rows = (
        [_fmt(x[i]), _fmt(t[j]), _fmt(p[i, j]), _fmt(u[i, j])]
        for i in range(len(x))
        for j in range(len(t))
    )
    writer.write_csv(name, ["x", "t", "p", "u"], rows)


def read_field_csv(path) -> "tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]":
    data = np.genfromtxt(path, delimiter=",", names=True)
    x = np.unique(data["x"])
    t = np.unique(data["t"])
    p = np.full((x.size, t.size), np.nan)
    u = np.full((x.size, t.size), np.nan)
    ix = np.searchsorted(x, data["x"])
    it = np.searchsorted(t, data["t"])
    p[ix, it] = data["p"]
    u[ix, it] = data["u"]
    if np.isnan(p).any():
        raise ValueError(f"{path}: field CSV does not cover a full rectangular grid")
    return x, t, p, u


def read_waveform_csv(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    return np.asarray(data["t"], dtype=float), np.asarray(data["value"], dtype=float)


# ---------------------------------------------------------------------------
# shared evaluation
# ---------------------------------------------------------------------------


def evaluate_pressure_grid(params, sets, coeffs, air, area, gx, gt):
    """PINN pressure on a rectangular (x, t) grid, shape (nx, nt)."""
    GX, GT = np.meshgrid(gx, gt, indexing="ij")
    norm = sets.norm
    tape = ad.Tape()
    b = eval_with_input_derivs(
        tape, params, "wave", norm.to_norm_x(GX.ravel()), norm.to_norm_t(GT.ravel())
    )
    phi = b.value.value[:, 0]
    phi_x = b.d_dx.value[:, 0] * norm.scale_x
    phi_t = b.d_dt.value[:, 0] * norm.scale_t
    tape.release()
    R = float(ad.value_of(coeffs.R))
    p = R * area * phi + air.rho * phi_t
    u = -area * phi_x
    return p.reshape(GX.shape), u.reshape(GX.shape)


def _resolve(args, inverse=False):
    config = parse_config_file(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config.set("training", "seed", args.seed)
    resolved = config.resolved(profile=args.profile, inverse=inverse)
    return config, resolved


def _out_dir(args, default_name: str) -> Path:
    base = args.out or os.environ.get("TUBEPINN_OUT", "runs")
    return Path(base) / default_name


def _forward_problem(resolved, seed):
    air = build_air(resolved)
    geom = build_tube(resolved)
    spec = build_source(resolved)
    sets = build_collocation(
        geom.length,
        spec.period,
        build_counts(resolved),
        sequence=resolved["sampler"]["sequence"],
        seed=seed,
        skip=resolved["sampler"]["skip"],
    )
    arch = build_arch(resolved, seed)
    problem = TrainingProblem(
        air=air,
        geom=geom,
        omega_c=resolved["tube"]["omega_c"],
        arch=arch,
        sets=sets,
        weights=build_weights(resolved),
        mode="forward",
        source=spec,
        include_periodicity=resolved["training"]["include_periodicity"],
    )
    return air, geom, spec, sets, problem


def _checkpoint_callback(resolved, writer):
    every = resolved["training"]["checkpoint_every"]
    if not every:
        return None
    path = writer.path("checkpoint.ckpt")

    def callback(epoch, params, report):
        if epoch % every == 0:
            save_checkpoint(params, path)

    return callback


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_forward(args) -> int:
    config, resolved = _resolve(args, inverse=False)
    seed = resolved["training"]["seed"]
    air, geom, spec, sets, problem = _forward_problem(resolved, seed)
    writer = ResultWriter(_out_dir(args, "forward"))
    writer.write_config(config, resolved)
    result = train(problem, build_train_config(resolved, "forward", seed),
                   callback=_checkpoint_callback(resolved, writer))
    writer.write_history(result.history)
    save_checkpoint(result.params, writer.path("model.ckpt"))

    coeffs = loss_coefficients(air, geom, 0.0, resolved["tube"]["omega_c"])
    gx = uniform_grid(resolved["output"]["grid_nx"], 0.0, geom.length)
    gt = uniform_grid(resolved["output"]["grid_nt"], 0.0, spec.period)
    p, u = evaluate_pressure_grid(result.params, sets, coeffs, air, geom.area(0.0), gx, gt)
    write_field(writer, "field.csv", gx, gt, p, u)
    t_wave = uniform_grid(1000, 0.0, spec.period)
    pw, _ = evaluate_pressure_grid(result.params, sets, coeffs, air, geom.area(0.0),
                                   np.array([geom.length]), t_wave)
    write_waveform(writer, "waveform_outlet.csv", t_wave, pw[0])
    manifest = writer.finish()
    print(f"forward run complete: {result.epochs_run} epochs, "
          f"final L_all {result.history[-1].L_all:.4e}, "
          f"{len(manifest['files'])} files in {writer.out_dir}")
    return 0


def _fdm_run(resolved, spec, air, geom, **overrides):
    coeffs = loss_coefficients(air, geom, 0.0, resolved["tube"]["omega_c"])
    rad = radiation_constants(air, geom.area(geom.length))
    area0 = geom.area(0.0)
    source = lambda t: area0 * rosenberg_wave(spec, t)
    cfg = build_fdm_config(resolved, **overrides)
    field = fdm_simulate(air, geom, coeffs, rad, source, spec.period, cfg)
    return field, cfg


def sweep_time_step(period: float, c: float, dx: float, cfl_max: float = 0.995) -> float:
    """Largest stable snapped step for a sweep member (leapfrog likes CFL->1)."""
    import math

    spp = int(math.ceil(c * period / (cfl_max * dx)))
    return period / spp


def cmd_fdm(args) -> int:
    config, resolved = _resolve(args, inverse=False)
    air = build_air(resolved)
    geom = build_tube(resolved)
    spec = build_source(resolved)
    writer = ResultWriter(_out_dir(args, "fdm"))
    writer.write_config(config, resolved)

    field, cfg = _fdm_run(resolved, spec, air, geom)
    print(f"CFL number {field.meta['cfl']:.3f}, steps/period {field.meta['steps_per_period']}")
    one = extract_steady_period(field, spec.period, cfg.steady_tol)
    print(f"steady period extracted (index {one.meta['period_index']}, "
          f"difference {one.meta['achieved_period_diff']:.2e})")

    sx = resolved["fdm"]["csv_stride_x"]
    st = resolved["fdm"]["csv_stride_t"]
    write_field(writer, "field.csv", one.x[::sx], one.t[::st], one.p[::sx, ::st], one.u[::sx, ::st])
    spp = field.meta["steps_per_period"]
    t_last = field.probe_t[-spp - 1 :] - field.probe_t[-spp - 1]
    write_waveform(writer, "waveform_outlet.csv", t_last, field.probe_p_outlet[-spp - 1 :])
    write_waveform(writer, "waveform_inlet_u.csv", t_last, field.probe_u_inlet[-spp - 1 :])

    if args.sweep:
        for dx in (1e-1, 1e-2, 1e-3):
            if abs(dx - cfg.delta_x) < 1e-15:
                member = field
            else:
                dt = sweep_time_step(spec.period, air.c, dx)
                member, _ = _fdm_run(resolved, spec, air, geom, delta_x=dx, delta_t=dt)
            spp_m = member.meta["steps_per_period"]
            t_m = member.probe_t[-spp_m - 1 :] - member.probe_t[-spp_m - 1]
            write_waveform(writer, f"waveform_dx_{dx:g}.csv", t_m, member.probe_p_outlet[-spp_m - 1 :])
            print(f"sweep dx={dx:g}: CFL {member.meta['cfl']:.3f}")
    manifest = writer.finish()
    print(f"{len(manifest['files'])} files in {writer.out_dir}")
    return 0


def periodic_spectral_resample(values: np.ndarray, n_out: int) -> np.ndarray:
    """Exact resampling of one period (without duplicated endpoint)."""
    F = np.fft.rfft(values)
    return np.fft.irfft(F, n_out) * (n_out / values.size)


def compare_fields(x_a, t_a, p_a, x_b, t_b, p_b, u_b):
    """Resample field B onto grid A and difference the pressures."""
    from .fdm import FdmField

    field_b = FdmField(x=x_b, t=t_b, p=p_b, u=u_b)
    GX, GT = np.meshgrid(x_a, t_a, indexing="ij")
    pb, _ = resample_field(field_b, GX.ravel(), GT.ravel())
    return p_a - pb.reshape(GX.shape)


def cmd_compare(args) -> int:
    pinn_dir = Path(args.pinn)
    fdm_dir = Path(args.fdm)
    writer = ResultWriter(_out_dir(args, "compare"))
    xa, ta, pa, _ = read_field_csv(pinn_dir / "field.csv")
    xb, tb, pb, ub = read_field_csv(fdm_dir / "field.csv")
    span_x = min(xa[-1], xb[-1]) - max(xa[0], xb[0])
    if span_x <= 0 or abs(ta[-1] - tb[-1]) > 0.05 * ta[-1]:
        raise SystemExit("compare: the two runs do not cover the same (x, t) domain")
    keep_x = (xa >= xb[0]) & (xa <= xb[-1])
    keep_t = (ta >= tb[0]) & (ta <= tb[-1])
    xg, tg = xa[keep_x], ta[keep_t]
    delta = compare_fields(xg, tg, pa[np.ix_(keep_x, keep_t)], xb, tb, pb, ub)
    peak = np.abs(pb).max()
    rel = np.abs(delta) / peak
    rows = (
        [_fmt(xg[i]), _fmt(tg[j]), _fmt(delta[i, j]), _fmt(rel[i, j])]
        for i in range(xg.size)
        for j in range(tg.size)
    )
    writer.write_csv("difference.csv", ["x", "t", "delta_p", "relative_delta"], rows)
    summary = {
        "fdm_peak_pressure": float(peak),
        "median_relative_delta": float(np.median(rel)),
        "p95_relative_delta": float(np.percentile(rel, 95)),
        "max_relative_delta": float(rel.max()),
    }
    with open(writer.path("summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)

    # single-period spectra of both outlet waveforms on a shared grid
    t_p, w_p = read_waveform_csv(pinn_dir / "waveform_outlet.csv")
    t_f, w_f = read_waveform_csv(fdm_dir / "waveform_outlet.csv")
    n = 1024
    period = max(t_p[-1], t_f[-1])
    grid = np.arange(n) * (period / n)
    wp = np.interp(grid, t_p, w_p)
    wf = np.interp(grid, t_f, w_f)
    f0 = 1.0 / period
    amp_p = np.abs(np.fft.rfft(wp)) / n * 2
    amp_f = np.abs(np.fft.rfft(wf)) / n * 2
    freq = f0 * np.arange(amp_p.size)
    writer.write_csv(
        "spectra.csv",
        ["frequency", "pinn", "fdm"],
        ([_fmt(a), _fmt(b), _fmt(c)] for a, b, c in zip(freq, amp_p, amp_f)),
    )
    writer.finish()
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def shift_waveform(t: np.ndarray, values: np.ndarray, period: float, shift_fraction: float):
    """Circularly advance a periodic waveform by a fraction of its period."""
    if shift_fraction == 0.0:
        return values.copy()
    phase = (t + shift_fraction * period) % period
    order = np.argsort(t % period)
    ps = (t % period)[order]
    vs = values[order]
    ps = np.concatenate([[ps[-1] - period], ps, [ps[0] + period]])
    vs = np.concatenate([[vs[-1]], vs, [vs[0]]])
    return np.interp(phase, ps, vs)


def cmd_inverse(args) -> int:
    config, resolved = _resolve(args, inverse=True)
    seed = resolved["training"]["seed"]
    mode = args.mode or resolved["inverse"]["mode"]
    if mode not in ("omega", "design"):
        raise SystemExit(f"inverse mode must be 'omega' or 'design', got {mode!r}")
    train_mode = "inverse_omega" if mode == "omega" else "inverse_design"

    air = build_air(resolved)
    spec = build_source(resolved)
    inv = resolved["inverse"]
    if mode == "omega":
        geom = build_tube(resolved)
    else:
        geom = TubeGeometry(length=inv["length_init"], diameter=inv["diameter_init"])

    if not args.pressure_target:
        raise SystemExit("inverse: --pressure-target CSV (t,value at x=l) is required")
    t_meas, p_meas = read_waveform_csv(args.pressure_target)

    counts = build_counts(resolved)
    sets = build_collocation(
        geom.length, spec.period, counts,
        sequence=resolved["sampler"]["sequence"], seed=seed, skip=resolved["sampler"]["skip"],
    )
    # targets: inlet volume velocity from the known source of the TRUE tube,
    # outlet pressure from the measurement file; optional T/2-style shift
    area_true = build_tube(resolved).area(0.0)
    u_bar = area_true * rosenberg_wave(spec, sets.boundary_t)
    p_bar = np.interp(sets.measurement_t, t_meas, p_meas)
    shift = args.shift if args.shift is not None else inv["shift"]
    if shift:
        u_bar = shift_waveform(sets.boundary_t, u_bar, spec.period, shift)
        p_bar = shift_waveform(sets.measurement_t, p_bar, spec.period, shift)

    problem = TrainingProblem(
        air=air,
        geom=geom,
        omega_c=inv["omega_c_init"] if mode == "omega" else resolved["tube"]["omega_c"],
        arch=build_arch(resolved, seed),
        sets=sets,
        weights=build_weights(resolved),
        mode=train_mode,
        target_u=u_bar,
        target_p=p_bar,
        omega_c_init=inv["omega_c_init"],
        length_init=inv["length_init"],
        diameter_init_mm=inv["diameter_init"] * 1e3,
        include_periodicity=resolved["training"]["include_periodicity"],
    )
    writer = ResultWriter(_out_dir(args, f"inverse_{mode}"))
    writer.write_config(config, resolved)
    result = train(problem, build_train_config(resolved, train_mode, seed),
                   callback=_checkpoint_callback(resolved, writer))
    writer.write_history(result.history)
    save_checkpoint(result.params, writer.path("model.ckpt"))

    traj = result.inverse.trajectory
    if mode == "omega":
        writer.write_csv(
            "trajectory.csv", ["epoch", "omega_c"],
            ([i, _fmt(s["omega_c"])] for i, s in enumerate(traj)),
        )
        final = {"omega_c": traj[-1]["omega_c"]}
        truth = {"omega_c": inv["ground_truth_omega_c"]}
    else:
        writer.write_csv(
            "trajectory.csv", ["epoch", "length", "diameter_mm"],
            ([i, _fmt(s["length"]), _fmt(s["diameter_mm"])] for i, s in enumerate(traj)),
        )
        final = {"length": traj[-1]["length"], "diameter_mm": traj[-1]["diameter_mm"]}
        truth = {
            "length": inv["ground_truth_length"],
            "diameter_mm": inv["ground_truth_diameter"] * 1e3,
        }
    summary = {"mode": mode, "identified": final, "epochs_run": result.epochs_run}
    summary["percent_error"] = {
        k: abs(final[k] - truth[k]) / abs(truth[k]) * 100.0 for k in final
    }
    with open(writer.path("summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    writer.finish()
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def cmd_ablate_activation(args) -> int:
    config, resolved = _resolve(args, inverse=False)
    seed = resolved["training"]["seed"]
    histories = {}
    for activation in ("snake", "tanh", "sin"):
        air, geom, spec, sets, problem = _forward_problem(resolved, seed)
        problem.arch = build_arch(resolved, seed, activation=activation)
        result = train(problem, build_train_config(resolved, "forward", seed))
        histories[activation] = [r.L_all for r in result.history]
        print(f"{activation}: final L_all {histories[activation][-1]:.4e} "
              f"after {len(histories[activation])} epochs")
    writer = ResultWriter(_out_dir(args, "ablate_activation"))
    writer.write_config(config, resolved)
    n = max(len(h) for h in histories.values())
    rows = []
    for i in range(n):
        rows.append(
            [i] + [_fmt(histories[a][i]) if i < len(histories[a]) else "" for a in ("snake", "tanh", "sin")]
        )
    writer.write_csv("ablation.csv", ["epoch", "snake", "tanh", "sin"], rows)
    writer.finish()
    return 0


def cmd_export_source(args) -> int:
    config, resolved = _resolve(args, inverse=False)
    spec = build_source(resolved)
    writer = ResultWriter(_out_dir(args, "source"))
    writer.write_config(config, resolved)
    t = np.arange(2048) * (spec.period / 2048)
    write_waveform(writer, "source.csv", t, rosenberg_wave(spec, t))
    writer.finish()
    print(f"one-period source waveform written to {writer.out_dir/'source.csv'}")
    return 0


def cmd_diagnostics(args) -> int:
    config, resolved = _resolve(args, inverse=False)
    air = build_air(resolved)
    geom = build_tube(resolved)
    spec = build_source(resolved)
    sets = build_collocation(geom.length, spec.period, build_counts(resolved))
    diag = collocation_diagnostics(sets, c=air.c)
    cfl = air.c * resolved["fdm"]["delta_t"] / resolved["fdm"]["delta_x"]
    diag["fdm_cfl"] = cfl
    print(json.dumps(diag, indent=1, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tubepinn",
        description="Physics-informed solver for 1D acoustic-tube resonance",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, inverse=False):
        p.add_argument("--config", help="run configuration file")
        p.add_argument("--out", help="output directory (default $TUBEPINN_OUT or ./runs)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--profile", choices=["paper", "desk"], default="paper")

    p = sub.add_parser("forward", help="train the forward solver, emit field/waveform CSVs")
    common(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("fdm", help="run the finite-difference reference solver")
    common(p)
    p.add_argument("--sweep", action="store_true", help="emit the spatial-resolution sweep")
    p.set_defaults(func=cmd_fdm)

    p = sub.add_parser("compare", help="difference a forward run against an fdm run")
    common(p)
    p.add_argument("--pinn", required=True, help="forward run directory")
    p.add_argument("--fdm", required=True, help="fdm run directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("inverse", help="identify omega_c or tube dimensions from waveforms")
    common(p, inverse=True)
    p.add_argument("--mode", choices=["omega", "design"])
    p.add_argument("--pressure-target", help="CSV (t,value) of measured outlet pressure")
    p.add_argument("--shift", type=float, default=None,
                   help="circularly shift targets by this fraction of a period")
    p.set_defaults(func=cmd_inverse)

    p = sub.add_parser("ablate-activation", help="train snake/tanh/sin variants, emit losses")
    common(p)
    p.set_defaults(func=cmd_ablate_activation)

    p = sub.add_parser("export-source", help="write the one-period source waveform CSV")
    common(p)
    p.set_defaults(func=cmd_export_source)

    p = sub.add_parser("diagnostics", help="print collocation resolution and CFL diagnostics")
    common(p)
    p.set_defaults(func=cmd_diagnostics)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
