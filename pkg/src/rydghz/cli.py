"""Command-line front end.

Subcommands: simulate (one trajectory of the branch-transfer step), ghz
(full three-step protocol), sweep (grid evaluation), scaling (minimum-area
search plus power-law fit), oracle-check (chain-vs-product-space
equivalence).  All outputs are deterministic: CSV for series, JSON with
sorted keys for summaries, no timestamps inside data files.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 oracle equivalence violation.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .basis import build_basis, collective_state
from .config import ConfigError, RunConfig, load_config, load_preset
from .fullspace import run_equivalence_check
from .propagator import DecayParams, IntegrationError, propagate
from .protocols import (
    ProtocolWarning,
    RegimeError,
    ghz_protocol,
    prepare_superposition,
    superposition_transfer,
)
from .sweeps import (
    SweepError,
    SweepSpec,
    find_min_area,
    fit_scaling,
    run_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ORACLE = 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydghz",
        description="Collective-chain simulator and adiabatic entanglement protocols",
    )
    parser.add_argument("--config", type=Path, help="INI configuration file")
    parser.add_argument("--preset", help="named preset: fig2, fig3_top, fig3_bottom, fig4")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    parser.add_argument(
        "--seed", type=int, default=None,
        help="reserved; dynamics is deterministic and ignores it",
    )
    parser.add_argument(
        "command",
        choices=("simulate", "ghz", "sweep", "scaling", "oracle-check"),
    )
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    if args.config is not None and args.preset is not None:
        raise ConfigError("give either --config or --preset, not both")
    if args.config is not None:
        return load_config(args.config)
    if args.preset is not None:
        return load_preset(args.preset)
    return RunConfig()


def _write_manifest(args: argparse.Namespace, out: Path) -> None:
    """Run provenance, kept apart from the data files.

    Data files must be bit-identical across reruns of the same config, so
    anything descriptive goes here and nothing here feeds back into results.
    """
    from . import __version__

    doc = {
        "command": args.command,
        "config": str(args.config) if args.config else None,
        "preset": args.preset,
        "workers": args.workers,
        "package_version": __version__,
    }
    _write_json(out / "manifest.json", doc)


def _decay(cfg: RunConfig) -> DecayParams | None:
    return DecayParams(rydberg_rate=cfg.gamma_T) if cfg.gamma_T > 0 else None


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    """One trajectory of the branch-transfer schedule; CSV plus summary."""
    basis = build_basis(cfg.n_atoms)
    decay = _decay(cfg)
    if cfg.initial == "prepared":
        prep = prepare_superposition(
            cfg.n_atoms,
            omega_max=cfg.prepare_omega_T,
            variant=cfg.rap_variant,
            config=cfg.integrator,
            decay=decay,
        )
        state = prep.final
    else:
        try:
            state = collective_state(basis, cfg.initial)
        except Exception:
            raise ConfigError(
                f"initial must be 'prepared' or a basis label, got {cfg.initial!r}"
            ) from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProtocolWarning)
        result = superposition_transfer(
            state, cfg.transfer, config=cfg.integrator, decay=decay
        )
    traj = result.steps[-1][1]
    traj.write_csv(out / "trajectory.csv")
    summary = {
        "n_atoms": cfg.n_atoms,
        "final_populations": {k: v for k, v in result.final.populations().items()},
        "key_populations": result.populations,
        "norm2": result.norm2,
        "norm_drift": abs(1.0 - result.norm2) if cfg.gamma_T == 0 else None,
        "n_steps": traj.n_steps,
    }
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_ghz(cfg: RunConfig, out: Path) -> int:
    """Full three-step run; JSON summary plus per-step trajectory CSVs."""
    from .protocols import adiabaticity_metric

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProtocolWarning)
        result = ghz_protocol(
            cfg.n_atoms,
            transfer=cfg.transfer,
            isolation=cfg.isolation,
            rap_variant=cfg.rap_variant,
            prepare_omega=cfg.prepare_omega_T,
            config=cfg.integrator,
            decay=_decay(cfg),
        )
    result.write_json(out / "ghz.json", trajectory_dir=out)
    doc = json.loads((out / "ghz.json").read_text())
    doc["adiabaticity_metric"] = sum(
        adiabaticity_metric(s, cfg.gamma_T)
        for s in (cfg.transfer.schedule(), cfg.isolation.schedule())
    )
    _write_json(out / "ghz.json", doc)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path, workers: int) -> int:
    """Grid evaluation; full CSV plus plot-ready two-column files."""
    if len(cfg.sweep.grid) == 0:
        raise ConfigError("sweep grid is empty; set [sweep] grid")
    spec = SweepSpec(
        parameter=cfg.sweep.parameter,
        grid=cfg.sweep.grid,
        n_atoms=cfg.n_atoms,
        base=cfg.transfer,
        isolation=cfg.isolation,
        observable=cfg.sweep.observable,
        prepare_omega=cfg.prepare_omega_T,
        rap_variant=cfg.rap_variant,
        gamma=cfg.gamma_T,
        config=cfg.integrator,
    )
    result = run_sweep(spec, workers=workers)
    result.write_csv(out / "sweep.csv")
    plot_cols = (
        ("p_g0", "p_r_last")
        if cfg.sweep.observable == "step2_populations"
        else ("ghz_fidelity",)
    )
    for col in plot_cols:
        lines = [
            f"{row.value!r} {getattr(row, col)!r}" for row in result.rows
        ]
        (out / f"sweep_{col}.dat").write_text("\n".join(lines) + "\n")
    n_failed = sum(1 for row in result.rows if row.status != "ok")
    if n_failed:
        print(f"{n_failed} of {len(result.rows)} points failed; see status column",
              file=sys.stderr)
    return EXIT_OK


def cmd_scaling(cfg: RunConfig, out: Path) -> int:
    """Minimum-area search over an atom-number range plus the power-law fit."""
    block = cfg.scaling
    if block.n_max < block.n_min:
        raise ConfigError("scaling range has n_max < n_min")
    points = []
    rows = ["n_atoms,omega_m_T_min,tau_opt,fidelity"]
    lo = block.area_lo
    for n in range(block.n_min, block.n_max + 1):
        res = find_min_area(
            n,
            threshold=block.threshold,
            search_range=(lo, block.area_hi),
            rel_tol=block.rel_tol,
            taus=block.taus,
            base=cfg.transfer,
            isolation=cfg.isolation,
        )
        points.append((n, res.omega_min))
        rows.append(f"{n},{res.omega_min!r},{res.tau_opt!r},{res.fidelity!r}")
        # the minimum area grows with N, so the found value floors the next search
        lo = max(block.area_lo, res.omega_min * 0.85)
    fit = fit_scaling(points)
    fit.write_json(out / "scaling.json")
    (out / "min_area.csv").write_text("\n".join(rows) + "\n")
    (out / "scaling.dat").write_text(
        "\n".join(f"{n!r} {a!r}" for n, a in points) + "\n"
    )
    print(f"alpha = {fit.alpha:.4f}")
    return EXIT_OK


def cmd_oracle_check(cfg: RunConfig, out: Path) -> int:
    """Chain-vs-product-space equivalence for N up to the size guard."""
    if cfg.n_atoms > 6:
        raise ConfigError(
            f"oracle-check builds 3^N product spaces; n_atoms={cfg.n_atoms} > 6"
        )
    reports = []
    failed = False
    for n in range(2, cfg.n_atoms + 1):
        rep = run_equivalence_check(n, n_draws=cfg.oracle_draws)
        reports.append(
            {
                "n_atoms": n,
                "n_draws": rep.n_draws,
                "max_block_deviation": rep.max_block_deviation,
                "max_closure_defect": rep.max_closure_defect,
                "worst_entry": list(rep.worst_entry),
                "passed": rep.passed,
            }
        )
        line = (
            f"N={n}: max deviation {rep.max_block_deviation:.3e}, "
            f"closure {rep.max_closure_defect:.3e} -> "
            f"{'pass' if rep.passed else 'FAIL'}"
        )
        print(line)
        if not rep.passed:
            failed = True
            print(
                f"  worst entry at {rep.worst_entry}: "
                f"|diff| = {rep.max_block_deviation:.3e}",
                file=sys.stderr,
            )
    _write_json(out / "oracle_check.json", {"reports": reports})
    return EXIT_ORACLE if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(args, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "ghz":
            return cmd_ghz(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, max(1, args.workers))
        if args.command == "scaling":
            return cmd_scaling(cfg, out)
        return cmd_oracle_check(cfg, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, RegimeError, SweepError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
