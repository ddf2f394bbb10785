"""Command-line interface.

Subcommands: gen, run, oracle, audit, curves, experiment, sweep. Configs are
JSON, given inline or as a file path. Exit codes: 0 success, 2 validation
failure, 3 resource-budget failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from .algorithms import PolicySpec, run
from .audit import audit_ctif, demonstrate_tif_impossibility, probed_instance
from .bench import ExperimentSpec, pareto_curves, robustness_sweep, run_experiment
from .core import write_instance
from .errors import KnapfairError, ParameterError, ResourceBudgetError, ValidationError
from .instances import GeneratorSpec, generate, ingest
from .oracles import apx_greedy, opt_dp, oracle_star

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3


def _load_config(text: str) -> dict[str, Any]:
    """Parse a JSON object given inline or as a path to a JSON file."""
    s = text.strip()
    if not s.startswith("{"):
        p = Path(s)
        if not p.exists():
            raise ValidationError(f"config file {s!r} does not exist")
        s = p.read_text()
    try:
        data = json.loads(s)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON config: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    return data


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_gen(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    spec = GeneratorSpec.from_json_dict(cfg)
    inst = generate(spec, seed=args.seed)
    if not args.out:
        raise ValidationError("gen needs --out to know where to write the instance")
    write_instance(inst, args.out)
    print(f"wrote {len(inst)} items to {args.out} (L={inst.lower}, U={inst.upper}, m={inst.granularity})")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    inst = ingest(args.instance)
    policy = PolicySpec.from_json_dict(_load_config(args.policy))
    if args.seed is not None and policy.kind == "zcl_randomized":
        policy = PolicySpec.zcl_randomized(args.seed)
    trace = run(policy, inst)
    payload = {
        "policy": policy.to_json_dict(),
        "instance": args.instance,
        "final_value": trace.final_value,
        "final_utilization": trace.final_utilization,
        "accepted": list(trace.accepted_indices()),
    }
    _write_or_print(json.dumps(payload, indent=2, sort_keys=True), args.out)
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    inst = ingest(args.instance)
    if args.solver == "dp":
        res = opt_dp(inst, cell_budget=args.cell_budget)
    elif args.solver == "apx":
        res = apx_greedy(inst)
    else:
        res = oracle_star(inst, mode=args.dstar_mode)
    payload = {
        "solver": args.solver,
        "value": res.value,
        "chosen": list(res.chosen),
        "meta": res.meta,
    }
    _write_or_print(json.dumps(payload, indent=2, sort_keys=True), args.out)
    return EXIT_OK


def _cmd_audit(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    demo = cfg.get("demonstrate")
    if demo:
        report = demonstrate_tif_impossibility(
            demo,
            cfg.get("gadget_params"),
            PolicySpec.from_json_dict(cfg["policy"]) if "policy" in cfg else None,
        )
        print(report.summary)
        if args.out:
            Path(args.out).write_text(json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n")
        return EXIT_OK

    for key in ("policy", "alpha", "instances", "densities"):
        if key not in cfg:
            raise ValidationError(f"audit config missing key {key!r}")
    policy = PolicySpec.from_json_dict(cfg["policy"])
    bases = []
    for src in cfg["instances"]:
        if isinstance(src, str):
            bases.append(ingest(src))
        else:
            bases.append(generate(GeneratorSpec.from_json_dict(src)))
    interval = tuple(cfg["interval"]) if "interval" in cfg else None
    report = audit_ctif(
        policy,
        float(cfg["alpha"]),
        bases,
        [float(x) for x in cfg["densities"]],
        trials=int(cfg.get("trials", 1)),
        seed=args.seed if args.seed is not None else int(cfg.get("seed", 0)),
        interval=interval,  # type: ignore[arg-type]
        positions=cfg.get("positions"),
    )
    print(f"verdict: {report.verdict} ({report.probes_compared}/{report.probes_total} probes compared, "
          f"{report.boundary_items} boundary)")
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n")
        by_fp = {b.fingerprint: b for b in bases}
        for i, w in enumerate(report.witnesses[:4]):
            base = by_fp[w.fingerprint]
            stem = Path(args.out).with_suffix("")
            write_instance(probed_instance(base, w.density, w.position_a), f"{stem}-witness{i}a.csv")
            write_instance(probed_instance(base, w.density, w.position_b), f"{stem}-witness{i}b.csv")
    return EXIT_OK


def _cmd_curves(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    lower = float(cfg.get("L", 1.0))
    upper = float(cfg.get("U", 5.0))
    if cfg.get("kind") == "thresholds":
        from .bench import threshold_table, write_threshold_csv

        policies = [PolicySpec.from_json_dict(p) for p in cfg.get("policies", [{"kind": "zcl"}])]
        rows = threshold_table(policies, lower, upper, grid=int(cfg.get("grid", 512)))
        if not args.out:
            raise ValidationError("curves kind=thresholds needs --out")
        write_threshold_csv(rows, args.out)
        print(f"wrote {len(rows)} threshold samples to {args.out}")
        return EXIT_OK
    if "alpha_grid" in cfg:
        grid = [float(a) for a in cfg["alpha_grid"]]
    else:
        import numpy as np

        from .numerics import BoundContext

        a0 = BoundContext(lower, upper).alpha_min
        grid = [float(a) for a in np.linspace(a0, 1.0, int(cfg.get("grid_points", 25)))]
    table = pareto_curves(
        lower,
        upper,
        grid,
        m=int(cfg.get("m", 200)),
        n_points=int(cfg.get("n_points", 25)),
        check=bool(cfg.get("check", False)),
    )
    if args.format == "json":
        _write_or_print(table.to_json(), args.out)
    else:
        if not args.out:
            raise ValidationError("curves --format csv needs --out")
        table.write_csv(args.out)
        print(f"wrote {len(table.rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    spec = ExperimentSpec.from_json_dict(cfg)
    report = run_experiment(spec)
    if args.format == "json":
        _write_or_print(report.to_json(), args.out)
    else:
        if not args.out:
            raise ValidationError("experiment --format csv needs --out")
        report.write_cdf_csv(args.out)
        print(f"wrote CDFs for {len(report.results)} policies to {args.out} "
              f"({report.skipped_instances} instances skipped)")
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    table = robustness_sweep(
        gamma_grid=[float(g) for g in cfg.get("gamma_grid", (0.0, 0.33, 0.66))],
        d_hat_choices=tuple(cfg.get("d_hat_choices", ("L", "U", "random"))),
        lower=float(cfg.get("L", 1.0)),
        upper=float(cfg.get("U", 5.0)),
        m=int(cfg.get("m", 200)),
        n_points=int(cfg.get("n_points", 25)),
        seed=args.seed if args.seed is not None else int(cfg.get("seed", 0)),
        check=bool(cfg.get("check", False)),
    )
    if args.format == "json":
        _write_or_print(table.to_json(), args.out)
    else:
        if not args.out:
            raise ValidationError("sweep --format csv needs --out")
        table.write_csv(args.out)
        print(f"wrote {len(table.rows)} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knapfair",
        description="Time-fair online knapsack policies, oracles, audits, and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, fmt: bool = True) -> None:
        p.add_argument("--seed", type=int, default=None, help="override the config's seed")
        p.add_argument("--out", type=str, default=None, help="output path (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--config", required=True, help="GeneratorSpec JSON (inline or path)")
    common(p, fmt=False)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="run one policy over one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True, help="PolicySpec JSON (inline or path)")
    common(p, fmt=False)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("oracle", help="offline/semi-online benchmark values")
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", choices=("dp", "apx", "star"), default="dp")
    p.add_argument("--dstar-mode", choices=("definition", "open_gap"), default="definition")
    p.add_argument("--cell-budget", type=int, default=10**8, help="DP table size cap")
    common(p, fmt=False)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("audit", help="fairness audit or impossibility demonstration")
    p.add_argument("--config", required=True)
    common(p, fmt=False)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("curves", help="fairness/competitiveness bound curves")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=_cmd_curves)

    p = sub.add_parser("experiment", help="empirical CR CDFs over generated instances")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("sweep", help="adversarial-prediction robustness sweep")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValidationError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except KnapfairError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
