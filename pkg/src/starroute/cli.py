"""Command-line interface.

Three subcommands: ``solve`` (one instance, JSON report + scene figure),
``sweep`` (parameter sweep, CSV + metadata + trend figure), ``validate``
(randomized self-check suite). Exit codes: 0 success, 1 input error,
2 infeasible instance, 3 failed validation.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .oracle import verify_power_closed_form, verify_solution
from .report import oracle_section, render_report, solution_report, to_db
from .scene import SceneError, ConfigError, SolverMode
from .scenes import bundled_scene_names, resolve_config, resolve_scene
from .selection import NoPathError, solve_multi_user, solve_single_user
from .splitting import InfeasibleError
from .sweep import (
    SWEEP_PARAMS,
    parse_values,
    run_sweep,
    sweep_meta,
    write_csv,
    write_meta,
)
from .validation import run_suite

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_VALIDATION = 3

_ORACLE_DRAWS = 25


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="starroute",
        description=(
            "Plan multi-surface beam routes: pick line-of-sight paths, split"
            " energy across panel faces, and verify every closed form against"
            " a matrix-level simulation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bundled = ", ".join(f"bundled:{name}" for name in bundled_scene_names())

    solve = sub.add_parser("solve", help="solve one scene and write a report")
    solve.add_argument(
        "--scene",
        required=True,
        help=f"scene JSON path or a bundled name ({bundled})",
    )
    solve.add_argument(
        "--config",
        required=True,
        help="config JSON path or a bundled name (bundled:<scene-name>)",
    )
    solve.add_argument(
        "--mode",
        choices=[m.value for m in SolverMode],
        help="override the operating mode from the config",
    )
    solve.add_argument(
        "--user",
        type=int,
        help="serve a single user of a multi-user scene (node id)",
    )
    solve.add_argument("--out", default=".", help="output directory (default: .)")
    solve.add_argument(
        "--no-figures", action="store_true", help="skip rendering the scene figure"
    )

    sweep = sub.add_parser("sweep", help="sweep one parameter, write CSV + figure")
    sweep.add_argument("--scene", required=True, help=f"scene path or {bundled}")
    sweep.add_argument("--config", required=True, help="config path or bundled:<name>")
    sweep.add_argument(
        "--param",
        required=True,
        choices=list(SWEEP_PARAMS),
        help="parameter to sweep: m0 (panel edge), s (candidate budget), k (users)",
    )
    sweep.add_argument(
        "--values",
        required=True,
        help="sweep values: 'start:step:stop' (inclusive) or 'a,b,c'",
    )
    sweep.add_argument(
        "--modes",
        nargs="+",
        choices=[m.value for m in SolverMode],
        help="modes to sweep (default: all three)",
    )
    sweep.add_argument(
        "--workers", type=int, default=1, help="parallel worker processes (default: 1)"
    )
    sweep.add_argument("--out", default=".", help="output directory (default: .)")
    sweep.add_argument(
        "--no-figures", action="store_true", help="skip rendering the trend figure"
    )

    validate = sub.add_parser("validate", help="run the randomized self-check suite")
    validate.add_argument("--seed", type=int, default=20260822)
    validate.add_argument(
        "--quick", action="store_true", help="smaller draw counts for a fast pass"
    )
    validate.add_argument("--report", help="also write the suite report as JSON here")

    return parser


def _out_dir(raw: str) -> Path:
    out = Path(raw)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_solve(args) -> int:
    scene = resolve_scene(args.scene)
    config = resolve_config(args.config)
    if args.mode is not None:
        config = replace(config, mode=SolverMode(args.mode))
    if args.user is not None:
        if not scene.is_user(args.user):
            raise SceneError(f"--user {args.user} is not a user node of this scene")
        solution = solve_single_user(scene, config, args.user)
    elif scene.n_users == 1:
        solution = solve_single_user(scene, config)
    else:
        solution = solve_multi_user(scene, config)

    isolated, composite = verify_solution(scene, config, solution.forest)
    closed_form = verify_power_closed_form(
        scene, config, solution.forest, draws=_ORACLE_DRAWS
    )
    report = solution_report(
        scene, config, solution, oracle=oracle_section(isolated, composite, closed_form)
    )

    out = _out_dir(args.out)
    report_path = out / "report.json"
    report_path.write_text(render_report(report))

    db = to_db(solution.objective)
    print(f"mode: {solution.mode.value}")
    print(f"objective: {solution.objective:.6e} ({db:.2f} dB)")
    for user, power in sorted(solution.user_powers.items()):
        print(f"  user {user}: {power:.6e} ({to_db(power):.2f} dB)")
    print(f"paths selected: {len(solution.forest.paths)}")
    for path, owner in zip(solution.forest.paths, solution.forest.owners):
        faces = ",".join(use.value for use in path.hop_surfaces)
        print(f"  user {owner} via {list(path.ris_sequence)} [{faces}]")
    print(f"oracle relative error: {isolated.relative_error:.3e}")
    if not isolated.ok or not closed_form.ok:
        print("warning: matrix-level verification disagrees with the closed forms")
    print(f"wrote {report_path}")
    if not args.no_figures:
        from .figures import solution_figure

        figure_path = solution_figure(scene, solution, out / "solution.png")
        print(f"wrote {figure_path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scene = resolve_scene(args.scene)
    config = resolve_config(args.config)
    values = parse_values(args.values)
    modes = (
        tuple(SolverMode(m) for m in args.modes)
        if args.modes
        else tuple(SolverMode)
    )
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    rows = run_sweep(
        scene, config, args.param, values, modes=modes, workers=args.workers
    )

    out = _out_dir(args.out)
    csv_path = write_csv(rows, out / "sweep.csv")
    meta_path = write_meta(
        sweep_meta(scene, config, args.param, values, rows), out / "sweep.meta.json"
    )

    for mode in modes:
        line = [r for r in rows if r.mode == mode.value]
        alive = [r for r in line if not r.infeasible]
        if alive:
            best = max(alive, key=lambda r: r.objective_linear)
            print(
                f"{mode.value}: {len(alive)}/{len(line)} cells feasible,"
                f" best {best.objective_db:.2f} dB at {args.param}={best.value}"
            )
        else:
            print(f"{mode.value}: all {len(line)} cells infeasible")
    print(f"wrote {csv_path}")
    print(f"wrote {meta_path}")
    if not args.no_figures:
        from .figures import sweep_figure

        figure_path = sweep_figure(rows, args.param, out / "sweep.png")
        print(f"wrote {figure_path}")
    if all(r.infeasible for r in rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_validate(args) -> int:
    report = run_suite(seed=args.seed, quick=args.quick, log=print)
    doc = report.as_dict()
    if args.report:
        path = Path(args.report)
        if path.parent != Path(""):
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")
        print(f"wrote {path}")
    verdict = "passed" if report.passed else "FAILED"
    total = doc["wall_s"]
    print(f"validation {verdict} ({len(report.checks)} checks, {total:.1f}s)")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_validate(args)
    except (NoPathError, InfeasibleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SceneError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
