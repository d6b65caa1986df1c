"""Command-line entry point: ``pnglab <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import hydro
from .errors import RecordError

OUT_ENV = "PNGLAB_OUT"
DEFAULT_OUT = "pnglab-runs"


def _common(p, *, horizon=True, replicas=False):
    p.add_argument("--lambda", dest="lam", type=float, help="source intensity")
    p.add_argument("--rho", type=float, help="sink intensity")
    if horizon:
        p.add_argument("--horizon", type=float, help="time horizon (window side for single runs)")
    if replicas:
        p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=f"output path (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--format", choices=("csv", "json", "svg"))
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    from .experiments import EXPERIMENTS

    ap = argparse.ArgumentParser(prog="pnglab", description="Last-passage, Hammersley and PNG simulations.")
    sub = ap.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("sample", help="sample one point configuration")
    _common(p)
    p.add_argument("--window", type=float, nargs=2, metavar=("X", "T"))
    p.add_argument("--replica", type=int, default=0)

    p = sub.add_parser("simulate", help="single run with exports")
    p.add_argument("model", choices=("lpp", "hammersley", "png"))
    _common(p)
    p.add_argument("--input", help="point configuration JSON (overrides sampling flags)")

    p = sub.add_parser("experiment", help="run an ensemble experiment")
    p.add_argument("id", choices=sorted(EXPERIMENTS))
    _common(p, replicas=True)
    p.add_argument("--config", help="JSON file with experiment spec fields")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("tabulate", help="tabulate closed-form laws")
    p.add_argument("what", choices=("cdf", "shape", "burgers"))
    _common(p, horizon=False)
    p.add_argument("--points", type=int, default=201)
    return ap


def _out_root(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _emit(text: str, dest: str | None):
    if dest:
        Path(dest).parent.mkdir(parents=True, exist_ok=True)
        Path(dest).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _csv(header, rows) -> str:
    return "\n".join([",".join(header)] + [",".join(str(v) for v in r) for r in rows]) + "\n"


def _cmd_sample(args) -> int:
    from .pointfield import sample_config

    side = args.horizon or 10.0
    window = tuple(args.window) if args.window else (side, side)
    c = sample_config(args.lam or 0.0, args.rho or 0.0, window, args.seed or 0, args.replica)
    if (args.format or "json") == "json":
        _emit(c.to_json(), args.out)
    elif args.format == "csv":
        rows = [(k, x, t) for k, (x, t) in zip(["bulk"] * c.bulk_x.size, c.bulk)]
        rows += [("source", x, 0.0) for x in c.sources] + [("sink", 0.0, t) for t in c.sinks]
        _emit(_csv(["kind", "x", "t"], rows), args.out)
    else:
        raise ValueError("sample supports csv and json")
    return 0


def _cmd_simulate(args) -> int:
    from . import hammersley, lpp, png
    from .pointfield import SQRT2, PointConfig, sample_config

    if args.input:
        c = PointConfig.from_json(Path(args.input))
    else:
        side = args.horizon or 50.0
        c = sample_config(args.lam or 0.0, args.rho or 0.0, (side, side), args.seed or 0)
    fmt = args.format or "csv"
    if args.model == "lpp":
        d = lpp.level_decomposition(c)
        if fmt == "csv":
            text = _csv(["level", "x", "t", "kind"], lpp.level_rows(d))
        elif fmt == "json":
            text = json.dumps({"levels": d.n_levels, "points": c.n_points,
                               "beta_points": int(d.all_beta_points()[0].size)})
        else:
            text = hammersley.spacetime_svg(hammersley.evolve(c))
    elif args.model == "hammersley":
        run = hammersley.evolve(c)
        scp = None
        try:
            scp = hammersley.second_class(c)
        except Exception:
            pass
        if fmt == "csv":
            text = _csv(["particle", "time", "position"], hammersley.trajectory_rows(run))
        elif fmt == "json":
            text = json.dumps({"particles": len(run.trajectories), "sink_exits": len(run.sink_exits),
                               "scp_jumps": len(scp) if scp else None})
        else:
            text = hammersley.spacetime_svg(run, scp)
    else:
        horizon = min(c.window) / SQRT2
        two = png.evolve_two_type(png.nucleations_from(c), horizon)
        if fmt == "csv":
            text = _csv(["z", "s", "h"], two.profile.grid_rows())
        elif fmt == "json":
            text = json.dumps({"horizon": horizon, "phi": two.interface.phi.tolist(),
                               "sigma": two.interface.sigma.tolist()})
        else:
            text = png.layer_svg(two.profile, two.interface)
    _emit(text, args.out)
    return 0


def _cmd_experiment(args) -> int:
    from .experiments import default_spec
    from .harness import ExperimentSpec, run_ensemble

    fields = {}
    if args.config:
        fields = json.loads(Path(args.config).read_text())
        fields.setdefault("experiment", args.id)
        if fields["experiment"] != args.id:
            raise ValueError(f"config file is for {fields['experiment']!r}, not {args.id!r}")
        fields = ExperimentSpec.from_dict(fields).to_dict()
        fields["lam"] = fields.pop("lambda")
        fields.pop("experiment")
    overrides = {"lam": args.lam, "rho": args.rho, "horizon": args.horizon, "replicas": args.replicas,
                 "seed": args.seed, "workers": args.workers}
    fields.update({k: v for k, v in overrides.items() if v is not None})
    fields["out"] = str(_out_root(args)) if args.out or not fields.get("out") else fields["out"]
    spec = default_spec(args.id, **fields)
    record = run_ensemble(spec)
    fmt = args.format or "csv"
    if fmt == "json":
        print(json.dumps(record.summary_dict(), indent=2, default=str))
    else:
        for v in record.verdicts:
            print(v.line())
        if not record.verdicts:
            print("no verdicts (statistics only)")
        print(f"record: {Path(spec.out) / f'{spec.experiment}-seed{spec.seed}'}")
    return 0 if record.passed else 1


def _cmd_tabulate(args) -> int:
    from . import svgplot

    fmt = args.format or "csv"
    if args.what == "shape":
        rows, header = hydro.tabulate_shape(args.points), ["c", "f"]
    else:
        params = hydro.ModelParams(0.5 if args.lam is None else args.lam, 1.0 if args.rho is None else args.rho)
        if args.what == "cdf":
            rows, header = hydro.tabulate_cdf(params, args.points), ["r", "z_cdf"]
        else:
            rows, header = hydro.tabulate_burgers(params, n=args.points), ["x", "u"]
    if fmt == "csv":
        text = _csv(header, rows)
    elif fmt == "json":
        text = json.dumps({header[0]: [r[0] for r in rows], header[1]: [r[1] for r in rows]})
    else:
        xs, ys = zip(*rows)
        text = svgplot.plot([(header[1], xs, ys, "line")], xlabel=header[0], ylabel=header[1])
    _emit(text, args.out)
    return 0


COMMANDS = {"sample": _cmd_sample, "simulate": _cmd_simulate, "experiment": _cmd_experiment,
            "tabulate": _cmd_tabulate}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, RecordError, OSError) as exc:
        print(f"pnglab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
