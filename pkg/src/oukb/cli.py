"""Command-line entry points.

Subcommands::

    simulate    write one trajectory CSV
    filter      run the known-parameter filter on a fresh trajectory
    mme         moment estimate from one trajectory
    onestep     one-step estimator process from one trajectory
    mle-grid    reference grid MLE / Bayes point from one trajectory
    adaptive    adaptive filter path from one trajectory
    mc          a Monte Carlo experiment with report files and verdicts

Every flag can also come from a JSON config file (``--config``) whose keys
mirror :class:`oukb.harness.McConfig`; explicit flags override file values.
Exit status: 0 when all verdicts pass, 2 when any verdict fails, 1 on an
execution error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .adaptive import adaptive_filter, adaptive_path_to_csv
from .harness import McConfig, build_spec, emit_report, overall_passed, run_mc
from .kalman import filter_path_to_csv, kb_filter
from .model import derived_quantities
from .moments import mme_ab, mme_af, mme_scalar, r_statistics
from .onestep import LearningConfig, estimator_path_to_csv, grid_mle_and_bayes, onestep_process
from .simulate import RngStream, simulate_path, trajectory_to_csv, unit_increments

_CONFIG_KEYS = (
    "experiment case theta0 f a b sigma T dt delta epsilon_star reps seed "
    "v_grid theta_box out variant mle_grid_points workers"
).split()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--case", choices=["F", "A", "B", "AF", "AB"], default=None)
    p.add_argument("--theta0", type=str, default=None, help="scalar or 'v1,v2'")
    p.add_argument("--f", type=float, default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--v-grid", type=str, default=None, help="comma-separated, e.g. 0.5,1")
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--config", type=str, default=None, help="JSON file mirroring McConfig")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--variant", choices=["steady_state", "closed_form_gamma", "full_riccati"], default=None)
    p.add_argument("--retain-hidden", action="store_true")


def _parse_theta0(text: str):
    parts = [float(v) for v in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _merged_config(args: argparse.Namespace, experiment: str) -> McConfig:
    file_vals = {}
    if args.config:
        file_vals = json.loads(Path(args.config).read_text())
        unknown = set(file_vals) - set(_CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    merged = {"experiment": experiment}
    for key in _CONFIG_KEYS:
        if key == "experiment":
            continue
        cli_val = getattr(args, key, None)
        if key == "theta0" and cli_val is not None:
            cli_val = _parse_theta0(cli_val)
        if key == "v_grid" and cli_val is not None:
            cli_val = tuple(float(v) for v in cli_val.split(","))
        if cli_val is not None:
            merged[key] = cli_val
        elif key in file_vals:
            val = file_vals[key]
            if key in ("v_grid", "theta_box") and val is not None:
                val = _to_tuple(val)
            if key == "theta0" and isinstance(val, list):
                val = tuple(val)
            merged[key] = val
    return McConfig(**merged)


def _to_tuple(val):
    if isinstance(val, (list, tuple)):
        return tuple(_to_tuple(v) for v in val)
    return val


def _outdir(cfg: McConfig) -> Path:
    out = Path(cfg.out or "oukb_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _single_traj(cfg: McConfig, retain_hidden: bool):
    spec = build_spec(cfg)
    theta0 = cfg.theta0 if spec.dim == 1 else np.asarray(cfg.theta0, float)
    traj = simulate_path(
        spec, theta0, cfg.T, cfg.dt, RngStream(cfg.seed, 0), retain_hidden=retain_hidden
    )
    return spec, theta0, traj


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="oukb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "filter", "mme", "onestep", "mle-grid", "adaptive", "mc"):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "mc":
            p.add_argument(
                "--experiment",
                choices=["mme", "onestep", "mle_grid", "adaptive", "filter_check"],
                default=None,
            )
    args = parser.parse_args(argv)

    try:
        return _dispatch(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    cmd = args.command
    if cmd == "mc":
        experiment = args.experiment
        if experiment is None and args.config:
            experiment = json.loads(Path(args.config).read_text()).get("experiment")
        if experiment is None:
            raise ValueError("mc requires --experiment or an experiment key in --config")
        cfg = _merged_config(args, experiment)
        report = run_mc(cfg)
        out = _outdir(cfg)
        emit_report(report, out)
        for name, v in sorted(report.verdicts.items()):
            status = "pass" if v.get("passed", True) else "FAIL"
            print(f"{status:4s}  {name}: value={v.get('value')!r} target={v.get('target', v.get('bracket'))!r}")
        print(f"report written to {out}")
        return 0 if overall_passed(report) else 2

    cfg = _merged_config(args, "mme")  # experiment field unused by single-trajectory commands
    out = _outdir(cfg)
    if cmd == "simulate":
        _, _, traj = _single_traj(cfg, args.retain_hidden)
        trajectory_to_csv(traj, out / "trajectory.csv")
        print(f"wrote {out / 'trajectory.csv'}")
        return 0
    if cmd == "filter":
        spec, theta0, traj = _single_traj(cfg, args.retain_hidden)
        dq = derived_quantities(spec, theta0)
        fp = kb_filter(traj.x, spec, theta0, m0=0.0, gamma0=dq.b**2 / (2 * dq.a), dt=cfg.dt)
        filter_path_to_csv(fp, out / "filter.csv")
        print(f"wrote {out / 'filter.csv'}")
        return 0
    if cmd == "mme":
        spec, _, traj = _single_traj(cfg, False)
        stats = r_statistics(unit_increments(traj))
        if spec.case == "AF":
            res = mme_af(spec, stats)
        elif spec.case == "AB":
            res = mme_ab(spec, stats)
        else:
            res = mme_scalar(spec, stats)
        (out / "mme.csv").write_text(
            "theta_star,clamped,residual\n"
            f"{_fmt_theta(res.theta_star)},{int(res.clamped)},{res.residual:.17g}\n"
        )
        print(f"theta_star={res.theta_star!r} clamped={res.clamped} residual={res.residual:.3g}")
        return 0
    if cmd == "onestep":
        spec, _, traj = _single_traj(cfg, False)
        path = onestep_process(traj, spec, LearningConfig(cfg.delta, cfg.epsilon_star))
        estimator_path_to_csv(path, out / "estimator.csv")
        print(f"preliminary={path.preliminary.theta_star!r}; wrote {out / 'estimator.csv'}")
        return 0
    if cmd == "mle-grid":
        spec, _, traj = _single_traj(cfg, False)
        lo, hi = spec.theta_box
        grid = np.linspace(lo, hi, cfg.mle_grid_points)
        mle, bayes, loglik = grid_mle_and_bayes(traj, spec, grid)
        np.savetxt(
            out / "mle_grid.csv",
            np.column_stack([grid, loglik]),
            delimiter=",",
            header="theta,loglik",
            comments="",
            fmt="%.17g",
        )
        print(f"mle={mle:.6g} bayes={bayes:.6g}; wrote {out / 'mle_grid.csv'}")
        return 0
    if cmd == "adaptive":
        spec, theta0, traj = _single_traj(cfg, args.retain_hidden)
        path = onestep_process(traj, spec, LearningConfig(cfg.delta, cfg.epsilon_star))
        apath = adaptive_filter(traj, spec, path, variant=cfg.variant)
        m_true = y = None
        if args.retain_hidden:
            dq = derived_quantities(spec, theta0)
            fp = kb_filter(traj.x, spec, theta0, m0=0.0, gamma0=dq.b**2 / (2 * dq.a), dt=cfg.dt)
            i_tau = int(round(apath.tau / cfg.dt))
            m_true = fp.m[i_tau + 1 :]
            y = traj.y[i_tau + 1 :]
        adaptive_path_to_csv(apath, out / "adaptive.csv", m_true=m_true, y=y)
        print(f"wrote {out / 'adaptive.csv'}")
        return 0
    raise ValueError(f"unhandled command {cmd!r}")


def _fmt_theta(theta) -> str:
    arr = np.atleast_1d(np.asarray(theta, float))
    return ";".join(f"{v:.17g}" for v in arr)


if __name__ == "__main__":
    sys.exit(main())
