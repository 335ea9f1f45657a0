"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .data import ColumnTransform, load_csv, save_csv
from .errors import KMError
from .kernels import KernelSpec, median_bandwidth
from .machines import (
    DEFAULT_FOLDS,
    fit_machine,
    load_machine,
    predict,
    save_machine,
    select_lambda,
    weighted_empirical_risk,
)
from .outcome import fit_outcome, get_basis
from .propensity import CLAMP_HI, CLAMP_LO, fit_glm
from .simulate import SettingSpec, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _lambda(text: str):
    if text == "cv":
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'cv', got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError("lambda must be positive")
    return v


def _kernel(text: str):
    try:
        return text, KernelSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


class _Formatter(argparse.HelpFormatter):
    """Shows defaults only for optional flags that have one."""

    def _get_help_string(self, action):
        text = action.help or ""
        if action.required or any(action.default is v for v in (None, False, argparse.SUPPRESS)):
            return text
        return f"{text} (default: %(default)s)".strip()


def build_parser() -> argparse.ArgumentParser:
    fmt = _Formatter
    p = _Parser(prog="kmissing", description="Kernel machines with missing responses.",
                formatter_class=fmt)
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", help="generate a simulated training set",
                       formatter_class=fmt)
    s.add_argument("--setting", type=int, required=True, help="setting id (1-4)")
    s.add_argument("--n", type=int, required=True, help="number of rows")
    s.add_argument("--seed", type=int, default=0, help="master seed")
    s.add_argument("--replication", type=int, default=0, help="replication stream index")
    s.add_argument("--out", required=True, help="output CSV")
    s.add_argument("--truth", action="store_true", help="include the true propensity column pi")

    f = sub.add_parser("fit", help="fit a kernel machine", formatter_class=fmt)
    f.add_argument("--data", required=True, help="training CSV")
    f.add_argument("--method", choices=("cc", "wcc", "dr"), required=True,
                   help="complete-case, weighted complete-case or doubly robust")
    f.add_argument("--kernel", type=_kernel, default="rbf",
                   help="rbf, rbf:GAMMA or linear; bare rbf uses the median heuristic")
    f.add_argument("--lambda", dest="lam", type=_lambda, default="cv",
                   help="ridge penalty, or cv for cross-validation")
    f.add_argument("--link", choices=("logit", "probit", "known"), default="logit",
                   help="propensity link; known uses the pi column of --data")
    f.add_argument("--outcome-basis", default=None,
                   help="outcome basis for dr: linear, setting1..setting4")
    f.add_argument("--task", choices=("auto", "regression", "classification"), default="auto",
                   help="outcome task; auto means classification iff labels are -1/1")
    f.add_argument("--folds", type=int, default=DEFAULT_FOLDS, help="CV folds")
    f.add_argument("--seed", type=int, default=0, help="CV fold seed")
    f.add_argument("--clamp-lo", type=float, default=CLAMP_LO, help="propensity floor")
    f.add_argument("--clamp-hi", type=float, default=CLAMP_HI, help="propensity ceiling")
    f.add_argument("--model-out", required=True, help="output model file")

    pr = sub.add_parser("predict", help="evaluate a model on new rows", formatter_class=fmt)
    pr.add_argument("--model", required=True, help="model file written by fit")
    pr.add_argument("--data", required=True, help="CSV whose features are evaluated")
    pr.add_argument("--out", required=True, help="output CSV with column f")

    e = sub.add_parser("eval", help="risk of a model on a dataset", formatter_class=fmt)
    e.add_argument("--model", required=True, help="model file written by fit")
    e.add_argument("--data", required=True, help="CSV with responses")
    e.add_argument("--pi-from", default=None,
                   help="CSV with a pi column aligned with --data rows (adds weighted risk)")

    b = sub.add_parser("bench", help="run the simulation study", formatter_class=fmt)
    b.add_argument("--settings", type=_int_list, default="1,2,3,4", help="setting ids")
    b.add_argument("--ns", type=_int_list, default="100,200,400,800",
                   help="training sizes")
    b.add_argument("--reps", type=int, default=100, help="replications per cell")
    b.add_argument("--test-size", type=int, default=10_000, help="test rows per cell")
    b.add_argument("--methods", type=_str_list, default=",".join(bench_mod.METHODS),
                   help="methods to run")
    b.add_argument("--lambda", dest="lam", type=_lambda, default="cv",
                   help="fixed ridge penalty, or cv")
    b.add_argument("--seed", type=int, default=0, help="master seed")
    b.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: core count); never changes results")
    b.add_argument("--out", required=True, help="output directory")

    r = sub.add_parser("realdata", help="repeated-split evaluation on a CSV",
                       formatter_class=fmt)
    r.add_argument("--data", required=True, help="input CSV")
    r.add_argument("--splits", type=int, default=100, help="number of random splits")
    r.add_argument("--test-n", type=int, default=200,
                   help="test rows per split, drawn from observed rows")
    r.add_argument("--log-cols", type=_str_list, default=(),
                   help="columns to log-transform (feature names or y)")
    r.add_argument("--std-cols", type=_str_list, default=(),
                   help="columns to standardize (feature names or y)")
    r.add_argument("--lambda", dest="lam", type=_lambda, default="cv",
                   help="fixed ridge penalty, or cv")
    r.add_argument("--link", choices=("logit", "probit", "known"), default="logit",
                   help="propensity link; known uses the pi column")
    r.add_argument("--seed", type=int, default=0, help="split and CV seed")
    r.add_argument("--out", required=True, help="output directory")
    return p


def _infer_task(ds, task: str) -> str:
    if task != "auto":
        return task
    y = ds.y[ds.observed]
    return "classification" if y.size and np.all((y == 1) | (y == -1)) else "regression"


def cmd_simulate(a) -> int:
    ds = generate(SettingSpec(a.setting, a.n, a.seed, include_truth=a.truth), a.replication)
    save_csv(ds, a.out, include_pi=a.truth)
    return EXIT_OK


def cmd_fit(a) -> int:
    if a.method == "dr" and a.outcome_basis is None:
        raise UsageError("kmissing fit: --outcome-basis is required with --method dr")
    if a.outcome_basis is not None:
        try:
            get_basis(a.outcome_basis)
        except ValueError as exc:
            raise UsageError(f"kmissing fit: --outcome-basis: {exc}")
    ds = load_csv(a.data)
    _, kernel = a.kernel
    if kernel is None:
        kernel = KernelSpec("rbf", median_bandwidth(ds.x))
    pi = None
    if a.method != "cc":
        if a.link == "known":
            if ds.true_pi is None:
                raise UsageError("kmissing fit: --link known needs a pi column in --data")
            pi = np.clip(ds.true_pi, a.clamp_lo, a.clamp_hi)
        else:
            pi = fit_glm(ds.x, ds.m, a.link, a.clamp_lo, a.clamp_hi).predict(ds.x)
    out = None
    if a.method == "dr":
        out = fit_outcome(ds, a.outcome_basis, _infer_task(ds, a.task))
    lam = a.lam
    if lam is None:
        lam = select_lambda(ds, kernel, a.method, pi, out, folds=a.folds, seed=a.seed)
    save_machine(fit_machine(a.method, ds, kernel, lam, pi, out), a.model_out)
    print(f"kernel={kernel} lambda={lam!r}")
    return EXIT_OK


def cmd_predict(a) -> int:
    mach = load_machine(a.model)
    ds = load_csv(a.data)
    f = predict(mach, ds.x)
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f"])
        w.writerows([repr(float(v))] for v in f)
    return EXIT_OK


def _read_pi(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "pi" not in rows[0]:
        raise UsageError(f"kmissing eval: --pi-from {path} has no pi column")
    return np.array([float(r["pi"]) for r in rows])


def cmd_eval(a) -> int:
    mach = load_machine(a.model)
    ds = load_csv(a.data)
    f = predict(mach, ds.x)
    obs = ds.observed
    print(f"n={ds.n}")
    print(f"n_complete={ds.n_complete}")
    print(f"mse={float(np.mean((ds.y[obs] - f[obs]) ** 2))!r}")
    if a.pi_from is not None:
        pi = _read_pi(a.pi_from)
        print(f"weighted_risk={weighted_empirical_risk(ds, f, pi)!r}")
    return EXIT_OK


def cmd_bench(a) -> int:
    threads = a.threads or os.cpu_count() or 1
    try:
        plan = bench_mod.BenchPlan(settings=a.settings, ns=a.ns, replications=a.reps,
                                   test_size=a.test_size, methods=a.methods, seed=a.seed,
                                   lam=a.lam, threads=threads)
    except ValueError as exc:
        raise UsageError(f"kmissing bench: {exc}")
    table = bench_mod.run_plan(
        plan, progress=lambda s, n: print(f"setting {s} n={n} done", file=sys.stderr))
    for path in table.write(a.out):
        print(path)
    return EXIT_OK


def cmd_realdata(a) -> int:
    ds = load_csv(a.data)
    names = list(ds.feature_names)

    def col(name):
        if name == "y":
            return "y"
        if name not in names:
            raise UsageError(f"kmissing realdata: unknown column {name!r}")
        return names.index(name)

    transforms = [ColumnTransform(col(c), "log") for c in a.log_cols]
    transforms += [ColumnTransform(col(c), "standardize") for c in a.std_cols]
    cfg = bench_mod.RealDataConfig(lam=a.lam, link="logit" if a.link == "known" else a.link,
                                   pi_known=a.link == "known")
    res = bench_mod.real_data_protocol(ds, a.splits, a.test_n, a.seed, transforms, cfg)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "realdata_table.csv"
    bench_mod.write_real_data_table(res, path)
    print(path)
    if "y" in a.log_cols or "y" in a.std_cols:
        print("note: risks are on the transformed response scale")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "realdata": cmd_realdata,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KMError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
