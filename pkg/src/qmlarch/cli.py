"""Command-line interface: datagen, train, evaluate, compile, boundary.

Exit codes: 0 success, 1 usage error, 2 runtime or numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import compiler, moons, plotting
from .hybrid import from_checkpoint, to_checkpoint
from .trainer import TrainConfig, compile_model, config_dict, default_data, evaluate, train, write_metrics

log = logging.getLogger("qmlarch")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _split_sizes(n: int, noise: float) -> moons.SplitSpec:
    test = valid = n // 10
    return moons.SplitSpec(n - test - valid, test, valid, noise)


def _load_data(data_dir):
    d = Path(data_dir)
    missing = [f for f in moons.SPLIT_FILES if not (d / f).is_file()]
    if missing:
        raise FileNotFoundError(f"missing data files in {d}: {', '.join(missing)}")
    return moons.read_splits(d)


def _load_model(path):
    with open(path) as fh:
        return from_checkpoint(json.load(fh))


def _load_circuits(paths, model):
    if not paths:
        return None
    per_wire = model.quantum.per_wire
    expected = model.n_wires if per_wire else 1
    if len(paths) != expected:
        raise UsageError(f"model {model.variant} needs {expected} gate list(s), got {len(paths)}")
    width = 1 if per_wire else model.n_wires
    return [compiler.circuit_from_text(Path(p).read_text(), width) for p in paths]


def cmd_datagen(args) -> int:
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    if args.noise < 0:
        raise UsageError("--noise must be non-negative")
    out = Path(args.out)
    pool = moons.make_moons(args.n, args.noise, args.seed)
    if args.no_split:
        out.mkdir(parents=True, exist_ok=True)
        moons.write_csv(out / "moons.csv", pool)
        print(f"wrote {len(pool)} points to {out / 'moons.csv'}")
        return 0
    spec = _split_sizes(args.n, args.noise)
    if min(spec.test, spec.validation) < 1:
        raise UsageError("--n too small to split 80/10/10; use --no-split")
    parts = moons.split(pool, spec, args.seed)
    for p, d in zip(moons.write_splits(out, *parts), parts):
        print(f"wrote {len(d)} points to {p}")
    return 0


def cmd_train(args) -> int:
    try:
        cfg = TrainConfig(
            variant=args.model,
            seed=args.seed,
            lr=args.lr,
            delta_theta=args.delta_theta,
            max_epochs=args.epochs,
            batch_size=args.batch_size,
            mu_method=args.mu,
            skip_if_unitary=args.skip_if_unitary,
            early_stop_accuracy=args.early_stop,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = _load_data(args.data_dir) if args.data_dir else default_data(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model, report = train(cfg, data)
    (out / "checkpoint.json").write_text(json.dumps(to_checkpoint(model)) + "\n")
    write_metrics(out / "metrics.csv", report)
    summary = {"config": config_dict(cfg), "report": report.summary()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    s = report.summary()
    print(f"model {cfg.variant} seed {cfg.seed}: {s['batches']} batches, stop: {s['stop_reason']}")
    print(f"best train batch accuracy {s['best_train_acc']:.4f} at epoch {s['best_epoch']} batch {s['best_batch']}")
    print(f"test accuracy {s['test_acc']:.4f}, validation accuracy {s['valid_acc']:.4f}")
    return 0 if not s["stop_reason"].startswith("numeric_error") else 2


def cmd_evaluate(args) -> int:
    model = _load_model(args.checkpoint)
    circuits = _load_circuits(args.circuit, model)
    for name, d in zip(("train", "test", "valid"), _load_data(args.data_dir)):
        print(f"{name}: {evaluate(model, d, circuits):.4f} ({len(d)} points)")
    return 0


def cmd_compile(args) -> int:
    model = _load_model(args.checkpoint)
    circuits = compile_model(model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = [f"circuit_q{w}" for w in range(len(circuits))] if model.quantum.per_wire else ["circuit"]
    for name, c, m in zip(names, circuits, model.quantum.matrices()):
        (out / f"{name}.txt").write_text(compiler.circuit_to_text(c))
        (out / f"{name}.qasm").write_text(compiler.circuit_to_qasm(c))
        rep = compiler.verification_report(c, m)
        print(
            f"{name}: {rep['n_wires']} wire(s), {rep['gates']} gates, "
            f"{rep['cnots']} CNOTs (bound {rep['cnot_bound']}), residual {c.residual:.3e}"
        )
    return 0


def cmd_boundary(args) -> int:
    try:
        resolution = plotting.parse_resolution(args.grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    model = _load_model(args.checkpoint)
    circuits = _load_circuits(args.circuit, model)
    grid = plotting.boundary_grid(model, resolution=resolution)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = _load_data(args.data_dir)[0] if args.data_dir else None
    plotting.write_grid_csv(out / "boundary.csv", grid)
    (out / "boundary.svg").write_text(plotting.render_svg(grid, data, title=f"model {model.variant}"))
    f0, f1 = grid.fractions()
    print(f"grid {resolution[0]}x{resolution[1]}: class 0 {f0:.3f}, class 1 {f1:.3f}")
    if circuits is None:
        return 0
    cgrid = plotting.boundary_grid(model, resolution=resolution, circuits=circuits)
    plotting.write_grid_csv(out / "boundary_compiled.csv", cgrid)
    (out / "boundary_compiled.svg").write_text(
        plotting.render_svg(cgrid, data, title=f"model {model.variant}, compiled")
    )
    cmp = plotting.compare_grids(grid, cgrid)
    print(f"matrix vs compiled: {cmp['disagreeing']} of {cmp['cells']} cells differ, "
          f"max logit difference {cmp['max_logit_diff']:.3e}")
    return 0 if cmp["disagreeing"] == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmlarch", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("datagen", help="generate two-moons CSV files")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--n", type=int, default=moons.SplitSpec().total)
    d.add_argument("--noise", type=float, default=moons.SplitSpec().noise_std)
    d.add_argument("--no-split", action="store_true", help="write a single moons.csv")
    d.add_argument("--out", default="data")
    d.set_defaults(func=cmd_datagen)

    t = sub.add_parser("train", help="train model A, B or C")
    t.add_argument("--model", choices=["A", "B", "C"], default="A")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--epochs", type=int, default=50)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--delta-theta", type=float, default=math.pi / 10)
    t.add_argument("--batch-size", type=int, default=100)
    t.add_argument("--mu", choices=["qr", "schur", "polar"], default="schur")
    t.add_argument("--skip-if-unitary", action="store_true")
    t.add_argument("--early-stop", type=float, default=1.0)
    t.add_argument("--data-dir", help="directory with train/test/valid CSVs (default: generate from --seed)")
    t.add_argument("--out", default="run")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="accuracy of a checkpoint on each split")
    e.add_argument("checkpoint")
    e.add_argument("--data-dir", required=True)
    e.add_argument("--circuit", action="append", help="gate list to use instead of the stored matrix")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compile", help="QSD-compile the quantum layer of a checkpoint")
    c.add_argument("checkpoint")
    c.add_argument("--out", default="compiled")
    c.set_defaults(func=cmd_compile)

    b = sub.add_parser("boundary", help="decision-boundary grid as CSV and SVG")
    b.add_argument("checkpoint")
    b.add_argument("--circuit", action="append", help="gate list(s) to compare against the matrix model")
    b.add_argument("--grid", default="100x100")
    b.add_argument("--data-dir", help="overlay the training points")
    b.add_argument("--out", default="boundary")
    b.set_defaults(func=cmd_boundary)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qmlarch {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, TypeError, ArithmeticError, RuntimeError) as exc:
        residual = getattr(exc, "residual", None)
        extra = f" (residual {residual:.3e})" if residual is not None else ""
        print(f"qmlarch {args.command}: {type(exc).__name__}: {exc}{extra}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
