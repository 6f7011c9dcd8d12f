"""Command-line entry point: ``irpdfl <subcommand> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  Output files are
written atomically, so a failed or rejected invocation leaves none behind.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import predictor as pr
from . import training as tr
from .diffopt import gradient_check, random_program
from .instance import InstanceFormatError, generate_instance, instance_to_json, read_instance
from .model import build_standard_form, decode_plan
from .solver import OPTIMAL, branch_and_bound, solve_relaxation

GRADCHECK_TOL = 1e-4
EVAL_COLUMNS = ("instance", "mse", "realized_regret")


class UsageError(Exception):
    pass


def _write_atomic(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _header(seed, argv):
    return f"# irpdfl v1 seed={seed} cmd={shlex.join(argv)}"


def _triple(text):
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected n,t,k integers, got {text!r}")
    if len(vals) != 3 or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"expected three positive integers n,t,k, got {text!r}")
    return vals


def _widths(text):
    try:
        vals = tuple(int(v) for v in text.split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated widths, got {text!r}")
    if min(vals, default=1) < 1:
        raise argparse.ArgumentTypeError("widths must be positive")
    return vals


def _eps_grid(text):
    """``LO:HI:STEP`` inclusive of HI (up to rounding)."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI:STEP, got {text!r}")
    if lo < 0 or hi < lo or step <= 0:
        raise argparse.ArgumentTypeError(f"need 0 <= LO <= HI and STEP > 0, got {text!r}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def _positive(kind):
    def parse(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return parse


def build_parser():
    p = argparse.ArgumentParser(prog="irpdfl", description="Inventory routing with decision-focused demand learning.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--n", type=_positive(int), default=2)
    g.add_argument("--t", type=_positive(int), default=2)
    g.add_argument("--k", type=_positive(int), default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", default="instance.json")

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("file")
    s.add_argument("--demand", help="CSV with N rows and T columns replacing the instance demand")
    s.add_argument("--method", choices=("bnb", "relax-qp", "relax-barrier"), default="bnb")
    s.add_argument("--lambda", dest="lam", type=_positive(float), default=0.1)
    s.add_argument("--mu", type=_positive(float), default=1e-3)
    s.add_argument("-o", "--output", help="write the decoded plan as JSON")

    c = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    c.add_argument("--method", choices=("qp", "barrier"), default="qp")
    c.add_argument("--dim", type=_positive(int), default=10)
    c.add_argument("--trials", type=_positive(int), default=20)
    c.add_argument("--mu", type=_positive(float), default=1e-2)
    c.add_argument("--h", type=_positive(float), help="step (default 1e-5, or 1e-6 when mu <= 1e-4)")
    c.add_argument("--seed", type=int, default=0)

    w = sub.add_parser("sweep", help="regret versus prediction error")
    w.add_argument("--instances", type=_positive(int), default=30)
    w.add_argument("--eps", type=_eps_grid, default=_eps_grid("0:0.5:0.05"))
    w.add_argument("--trials", type=_positive(int), default=1)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--template", type=_triple, default=(3, 2, 4), help="instance size n,t,k")
    w.add_argument("-o", "--output", default="sweep.csv")

    d = sub.add_parser("dataset", help="synthesize a feature/demand dataset directory")
    d.add_argument("--instances", type=_positive(int), default=30)
    d.add_argument("--template", type=_triple, default=(2, 3, 3))
    d.add_argument("--target", choices=("seasonal", "linear"), default="seasonal")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("-o", "--output", default="data")

    t = sub.add_parser("train", help="train a demand model")
    t.add_argument("--mode", choices=("two-stage", "dfl"), default="two-stage")
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--lr", type=float, default=1e-2)
    reg = t.add_mutually_exclusive_group()
    reg.add_argument("--lambda", dest="lam", type=_positive(float), help="DFL through the regularized QP")
    reg.add_argument("--mu", type=_positive(float), help="DFL through the log-barrier center")
    t.add_argument("--data", required=True)
    t.add_argument("--hidden", type=_widths, default=(32, 32))
    t.add_argument("--activation", choices=pr.ACTIVATIONS, default="tanh")
    t.add_argument("--init", help="warm-start model file")
    t.add_argument("--eval-every", type=_positive(int), default=1)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("-o", "--output", default="model.txt")
    t.add_argument("--report", default="report.csv")

    e = sub.add_parser("eval", help="realized regret of a model on the test split")
    e.add_argument("--model", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--activation", choices=pr.ACTIVATIONS, default="tanh")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("-o", "--output", default="eval.csv")
    return p


# -- subcommands -----------------------------------------------------------------


def _cmd_gen(args, argv):
    inst = generate_instance(args.n, args.t, args.k, args.seed)
    _write_atomic(args.output, instance_to_json(inst) + "\n")
    print(f"wrote {args.output}")


def _cmd_solve(args, argv):
    inst = read_instance(args.file)
    d = None
    if args.demand:
        try:
            d = np.loadtxt(args.demand, delimiter=",", ndmin=2, comments="#")
        except (OSError, ValueError) as exc:
            raise RuntimeError(f"{args.demand}: cannot read demand ({exc})") from exc
    if args.method == "bnb":
        prog = build_standard_form(inst, d)
        sol = branch_and_bound(prog)
    elif args.method == "relax-qp":
        prog = build_standard_form(inst, d, "regularized", lam=args.lam)
        sol = solve_relaxation(prog)
    else:
        prog = build_standard_form(inst, d, "barrier", mu=args.mu)
        sol = solve_relaxation(prog)
    if sol.status != OPTIMAL:
        print(f"status={sol.status}")
        raise RuntimeError(f"{args.file}: solver finished with status {sol.status}")
    print(f"status={sol.status} objective={sol.objective!r}")
    if args.output:
        plan = decode_plan(prog, sol.x, integral=args.method == "bnb")
        _write_atomic(args.output, json.dumps(plan.to_dict(), indent=1) + "\n")


def _cmd_gradcheck(args, argv):
    rng = np.random.default_rng(args.seed)
    h = args.h or (1e-6 if args.method == "barrier" and args.mu <= 1e-4 else 1e-5)
    worst = 0.0
    for _ in range(args.trials):
        if args.method == "qp":
            prog = random_program(rng, args.dim, "qp")
        else:
            prog = random_program(rng, max(args.dim, 2), "barrier", args.mu)
        g = rng.normal(size=prog.n_vars)
        worst = max(worst, *gradient_check(prog, g, h))
    print(f"max relative error {worst:.3e} over {args.trials} trials")
    return 0 if worst <= GRADCHECK_TOL else 1


def _cmd_sweep(args, argv):
    report = tr.sweep_regret_vs_error(args.instances, args.eps, args.trials, args.seed, template=args.template)
    _write_atomic(args.output, report.to_csv(_header(args.seed, argv)))
    for eps, trial, reason in report.skipped:
        print(f"skipped eps={eps} trial={trial}: {reason}", file=sys.stderr)
    print(f"wrote {len(report.rows)} rows to {args.output} ({len(report.skipped)} skipped); "
          f"spearman={report.trend():.3f}")


def _cmd_dataset(args, argv):
    data = pr.synthesize_dataset(args.instances, args.template, args.seed, args.target)
    out = Path(args.output)
    if out.exists() and not out.is_dir():
        raise RuntimeError(f"{out} exists and is not a directory")
    with tempfile.TemporaryDirectory() as tmp:
        pr.save_dataset(data, tmp)
        out.mkdir(parents=True, exist_ok=True)
        _write_atomic(out / "records.json", (Path(tmp) / "records.json").read_text())
    print(f"wrote {len(data.records)} records to {out}")


def _cmd_train(args, argv):
    data = pr.load_dataset(args.data)
    if args.mode == "two-stage" and (args.lam or args.mu):
        raise UsageError("--lambda/--mu only apply to --mode dfl")
    if args.epochs < 0 or args.lr < 0:
        raise UsageError("--epochs and --lr must be nonnegative")
    kw = dict(epochs=args.epochs, lr=args.lr, seed=args.seed, hidden=args.hidden,
              activation=args.activation, eval_every=args.eval_every)
    if args.mode == "dfl":
        if args.mu:
            cfg = tr.TrainConfig(mode="dfl", diff_method="barrier", mu=args.mu, **kw)
        else:
            cfg = tr.TrainConfig(mode="dfl", diff_method="kkt_qp", lam=args.lam or 0.1, **kw)
    else:
        cfg = tr.TrainConfig(mode="two_stage", **kw)
    init = pr.load_model(args.init, args.activation) if args.init else None
    model, report = tr.train(data, cfg, init)
    with tempfile.TemporaryDirectory() as tmp:
        pr.save_model(model, Path(tmp) / "m")
        model_text = (Path(tmp) / "m").read_text()
    _write_atomic(args.report, report.to_csv(_header(args.seed, argv)))
    _write_atomic(args.output, model_text)
    for entry in report.skipped:
        print(f"skipped: {entry}", file=sys.stderr)
    last = report.rows[-1]
    print(f"epochs={args.epochs} train_loss={last[1]!r} val_mse={last[2]!r} val_realized_regret={last[3]!r}")


def _cmd_eval(args, argv):
    model = pr.load_model(args.model, args.activation)
    data = pr.load_dataset(args.test)
    records = data.split("test") or data.records
    cfg = tr.TrainConfig(seed=args.seed)
    per = tr.regrets_by_instance(model, records, cfg)
    rows = [(r.instance_id, tr.mse(pr.forward(model, r.features), r.demand),
             float("nan") if per[r.instance_id] is None else per[r.instance_id]) for r in records]
    _write_atomic(args.output, tr._to_csv(EVAL_COLUMNS, rows, _header(args.seed, argv)))
    ok = [r[2] for r in rows if np.isfinite(r[2])]
    print(f"instances={len(rows)} planned={len(ok)} mean_realized_regret={float(np.mean(ok)) if ok else float('nan')!r}")


COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "gradcheck": _cmd_gradcheck,
    "sweep": _cmd_sweep,
    "dataset": _cmd_dataset,
    "train": _cmd_train,
    "eval": _cmd_eval,
}


def run(argv=None) -> int:
    """Parse ``argv`` and run the subcommand; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        code = COMMANDS[args.command](args, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"irpdfl: error: {exc}", file=sys.stderr)
        return 2
    except (InstanceFormatError, ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0 if code is None else int(code)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
