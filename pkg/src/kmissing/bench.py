"""Replication harness for the simulation table and the real-data protocol."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, apply_transforms
from .errors import BadSize, Empty, KMError, TooFewCompleteCases
from .kernels import KernelSpec, gram, median_bandwidth
from .machines import DEFAULT_FOLDS, DEFAULT_GRID, fit_machine, select_lambda
from .outcome import fit_outcome, fit_regression_outcome
from .propensity import fit_glm
from .simulate import TASK, SettingSpec, generate, generate_test

log = logging.getLogger(__name__)

METHODS = ("Reg", "CC", "WCC-M", "WCC-C", "DR-M", "DR-MR", "DR-MM", "DRC")

# method -> (machine kind, propensity link, outcome basis role)
_RECIPES = {
    "CC": ("cc", None, None),
    "WCC-M": ("wcc", "probit", None),
    "WCC-C": ("wcc", "logit", None),
    "DR-M": ("dr", "probit", "misspecified"),
    "DR-MR": ("dr", "logit", "misspecified"),
    "DR-MM": ("dr", "probit", "correct"),
    "DRC": ("dr", "logit", "correct"),
}


def summarize(values) -> tuple[float, float, float]:
    """``(median, mean, sample std)``; the std of a single value is 0."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise Empty("nothing to summarize")
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return float(np.median(v)), float(np.mean(v)), std


def _derived_seed(seed: int, *keys: int) -> int:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=keys)
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class BenchPlan:
    settings: tuple[int, ...] = (1, 2, 3, 4)
    ns: tuple[int, ...] = (100, 200, 400, 800)
    replications: int = 100
    test_size: int = 10_000
    methods: tuple[str, ...] = METHODS
    seed: int = 0
    lam: float | None = None
    grid: tuple[float, ...] = DEFAULT_GRID
    folds: int = DEFAULT_FOLDS
    threads: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")


@dataclass
class Cell:
    risks: list = field(default_factory=list)
    misclass: list = field(default_factory=list)
    failures: int = 0


@dataclass
class RiskTable:
    """Per (setting, n, method) test risks across replications."""

    cells: dict = field(default_factory=dict)
    replications: int = 0

    def cell(self, setting: int, n: int, method: str) -> Cell:
        return self.cells[(setting, n, method)]

    def stats(self, setting: int, n: int, method: str) -> dict:
        c = self.cell(setting, n, method)
        out = {"count": len(c.risks)}
        if c.risks:
            out["median"], out["mean"], out["std"] = summarize(c.risks)
        if c.misclass:
            med, mean, std = summarize(c.misclass)
            out.update(misclass_median=med, misclass_mean=mean, misclass_std=std)
        return out

    def mean(self, setting: int, n: int, method: str) -> float:
        return self.stats(setting, n, method)["mean"]

    def long_rows(self):
        for (s, n, meth) in sorted(self.cells, key=_cell_order):
            for stat, value in self.stats(s, n, meth).items():
                yield s, n, meth, stat, value

    def write(self, out_dir) -> list[Path]:
        """Long CSV, wide (appendix-table) CSV and failure counts."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        long_p = out_dir / "risk_table.csv"
        with open(long_p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["setting", "n", "method", "stat", "value"])
            for s, n, meth, stat, value in self.long_rows():
                w.writerow([s, n, meth, stat, _fmt(value)])

        keys = sorted({(s, n) for s, n, _ in self.cells})
        methods = [m for m in METHODS if any(k[2] == m for k in self.cells)]
        wide_p = out_dir / "risk_table_wide.csv"
        with open(wide_p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["setting", "n", "stat", *methods])
            for s, n in keys:
                per = {m: self.stats(s, n, m) for m in methods}
                stat_names = ["median", "mean", "std"]
                if any("misclass_mean" in st for st in per.values()):
                    stat_names += ["misclass_median", "misclass_mean", "misclass_std"]
                for stat in stat_names:
                    w.writerow([s, n, stat, *(_fmt(per[m].get(stat, float("nan")))
                                              for m in methods)])

        fail_p = out_dir / "failures.csv"
        with open(fail_p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["setting", "n", "method", "successes", "failures"])
            for (s, n, meth) in sorted(self.cells, key=_cell_order):
                c = self.cells[(s, n, meth)]
                w.writerow([s, n, meth, len(c.risks), c.failures])
        return [long_p, wide_p, fail_p]


def _cell_order(key):
    s, n, meth = key
    return s, n, METHODS.index(meth)


def _fmt(v) -> str:
    return str(v) if isinstance(v, (int, np.integer)) else format(float(v), ".10g")


def fit_reg(ds: Dataset, intercept: bool = False) -> np.ndarray:
    """Complete-case OLS coefficients on the raw features.

    The simulation baseline has no intercept column; with ``intercept=True``
    the first coefficient is the intercept.
    """
    X = ds.x[ds.observed]
    if intercept:
        X = np.column_stack([np.ones(X.shape[0]), X])
    if X.shape[0] < X.shape[1]:
        raise TooFewCompleteCases(f"{X.shape[0]} complete cases for {X.shape[1]} coefficients")
    beta, *_ = np.linalg.lstsq(X, ds.y[ds.observed], rcond=None)
    return beta


def predict_reg(beta: np.ndarray, x: np.ndarray) -> np.ndarray:
    if beta.shape[0] == x.shape[1] + 1:
        return beta[0] + x @ beta[1:]
    return x @ beta


def _correct_basis(setting: int) -> str:
    return f"setting{setting}"


def run_replication(plan: BenchPlan, setting: int, n: int, rep: int, test: Dataset) -> dict:
    """Fit every planned method on one training draw.

    Returns ``method -> (risk, misclassification or None)`` with an
    exception instance in place of the tuple when a fit failed.
    """
    ds = generate(SettingSpec(setting, n, plan.seed), rep)
    task = TASK[setting]
    results: dict = {}
    kernel = KernelSpec("rbf", median_bandwidth(ds.x))
    K = gram(kernel, ds.x)
    K_test = gram(kernel, test.x, ds.x)
    props: dict = {}
    outs: dict = {}
    cv_seed = _derived_seed(plan.seed, setting, n, 7, rep)

    def score(f):
        risk = float(np.mean((test.y - f) ** 2))
        mis = float(np.mean(np.where(f >= 0, 1.0, -1.0) != test.y)) if task == "classification" else None
        return risk, mis

    for meth in plan.methods:
        try:
            if meth == "Reg":
                results[meth] = score(predict_reg(fit_reg(ds), test.x))
                continue
            kind, link, role = _RECIPES[meth]
            pi = None
            if link is not None:
                if link not in props:
                    props[link] = fit_glm(ds.x, ds.m, link)
                pi = props[link].predict(ds.x)
            out = None
            if role is not None:
                basis = _correct_basis(setting) if role == "correct" else "linear"
                if basis not in outs:
                    outs[basis] = fit_outcome(ds, basis, task)
                out = outs[basis]
            if plan.lam is not None:
                lam = plan.lam
            else:
                lam = select_lambda(ds, kernel, kind, pi, out, plan.grid, plan.folds,
                                    cv_seed, K=K)
            mach = fit_machine(kind, ds, kernel, lam, pi, out, K=K)
            Kt = K_test[:, ds.observed] if kind == "cc" else K_test
            results[meth] = score(Kt @ mach.alpha)
        except (KMError, np.linalg.LinAlgError) as exc:
            log.warning("setting %s n=%s rep=%s %s failed: %s", setting, n, rep, meth, exc)
            results[meth] = exc
    return results


def run_plan(plan: BenchPlan, progress=None) -> RiskTable:
    """Run every (setting, n, replication); output does not depend on ``threads``."""
    table = RiskTable(replications=plan.replications)
    for setting in plan.settings:
        for n in plan.ns:
            test = generate_test(SettingSpec(setting, n, plan.seed), plan.test_size)
            reps = range(plan.replications)
            if plan.threads > 1:
                with ThreadPoolExecutor(max_workers=plan.threads) as pool:
                    res = list(pool.map(lambda r: run_replication(plan, setting, n, r, test), reps))
            else:
                res = [run_replication(plan, setting, n, r, test) for r in reps]
            for meth in plan.methods:
                cell = table.cells.setdefault((setting, n, meth), Cell())
                for r_res in res:
                    v = r_res[meth]
                    if isinstance(v, Exception):
                        cell.failures += 1
                        continue
                    cell.risks.append(v[0])
                    if v[1] is not None:
                        cell.misclass.append(v[1])
            if progress is not None:
                progress(setting, n)
    return table


# ---------------------------------------------------------------- real data

REAL_METHODS = ("Reg", "CC", "WCC", "DR")


@dataclass(frozen=True)
class RealDataConfig:
    lam: float | None = None
    grid: tuple[float, ...] = DEFAULT_GRID
    folds: int = DEFAULT_FOLDS
    seed: int = 0
    link: str = "logit"
    outcome_basis: str = "linear"
    pi_known: bool = False


def real_data_eval(train: Dataset, test: Dataset, config: RealDataConfig = RealDataConfig()):
    """MSE and inverse-propensity weighted MSE per method on one split.

    Weighted MSE is ``(1/n_test) sum (y - f)^2 / pi_hat`` with ``pi_hat`` from
    the propensity model fitted on the training split (or the ``pi`` column
    when ``config.pi_known``).
    """
    if not np.all(test.observed):
        raise ValueError("test responses must all be observed")
    if config.pi_known:
        if train.true_pi is None or test.true_pi is None:
            raise ValueError("pi_known needs a pi column")
        pi_tr, pi_te = train.true_pi, test.true_pi
    else:
        prop = fit_glm(train.x, train.m, config.link)
        pi_tr, pi_te = prop.predict(train.x), prop.predict(test.x)
    kernel = KernelSpec("rbf", median_bandwidth(train.x))
    K = gram(kernel, train.x)
    K_test = gram(kernel, test.x, train.x)
    out = fit_regression_outcome(train, config.outcome_basis)
    results = {}
    for meth in REAL_METHODS:
        if meth == "Reg":
            f = predict_reg(fit_reg(train, intercept=True), test.x)
        else:
            kind = meth.lower()
            pi = None if kind == "cc" else pi_tr
            o = out if kind == "dr" else None
            lam = config.lam if config.lam is not None else select_lambda(
                train, kernel, kind, pi, o, config.grid, config.folds, config.seed, K=K)
            mach = fit_machine(kind, train, kernel, lam, pi, o, K=K)
            Kt = K_test[:, train.observed] if kind == "cc" else K_test
            f = Kt @ mach.alpha
        sq = (test.y - f) ** 2
        results[meth] = (float(np.mean(sq)), float(np.mean(sq / pi_te)))
    return results


def real_data_protocol(ds: Dataset, splits: int = 100, test_n: int = 200, seed: int = 0,
                       transforms=(), config: RealDataConfig = RealDataConfig()) -> dict:
    """Repeated random splits; the test part is drawn from observed rows.

    Transforms are fitted on each training part and reused on its test part.
    Returns ``method -> {"mse": [...], "wmse": [...]}``.
    """
    obs = np.flatnonzero(ds.observed)
    if not 0 < test_n < obs.size:
        raise BadSize(f"test_n must be in (0, {obs.size}) observed rows")
    out = {m: {"mse": [], "wmse": []} for m in REAL_METHODS}
    for s in range(splits):
        rng = np.random.default_rng(_derived_seed(seed, 11, s))
        is_test = np.zeros(ds.n, dtype=bool)
        is_test[rng.choice(obs, size=test_n, replace=False)] = True
        train, test = ds.subset(np.flatnonzero(~is_test)), ds.subset(np.flatnonzero(is_test))
        if transforms:
            train, fitted = apply_transforms(train, transforms, fit=True)
            test, _ = apply_transforms(test, fitted, fit=False)
        cfg = RealDataConfig(**{**config.__dict__, "seed": _derived_seed(seed, 12, s)})
        for meth, (mse, wmse) in real_data_eval(train, test, cfg).items():
            out[meth]["mse"].append(mse)
            out[meth]["wmse"].append(wmse)
    return out


def write_real_data_table(results: dict, path) -> None:
    """Table layout: rows (stat, weighted|not weighted), columns methods."""
    methods = [m for m in REAL_METHODS if m in results]
    stats = {m: {k: summarize(v) for k, v in results[m].items()} for m in methods}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stat", "mse", *methods])
        for i, stat in enumerate(("median", "mean", "std")):
            for key, label in (("wmse", "weighted"), ("mse", "not weighted")):
                w.writerow([stat, label, *(_fmt(stats[m][key][i]) for m in methods)])
