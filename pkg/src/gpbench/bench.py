"""Benchmark harness: scenario config, repetition loops, wall-clock timing,
and append-only CSV emission.

Config format: flat ``key = value`` lines with dotted section prefixes and
``#`` comments.  See the README for the full schema.
"""

import concurrent.futures
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .covkernel import CovarianceSpec, TaperSpec
from .estimate import default_init, fit_params
from .gp_exact import loglik_exact, predict_exact
from .lowrank import LowRankConfig, lowrank_loglik, lowrank_predict
from .metrics import kl_gaussian, score_predictions
from .simulate import read_csv, scenario_spec, simulate_dataset
from .taper import taper_loglik, taper_nnz_per_row, taper_predict
from .vecchia import build_vecchia, vecchia_loglik, vecchia_predict

CSV_COLUMNS = "method,tier,tier_value,task,metric,value,wall_seconds,rep,seed,threads"

VALID_TASKS = ("loglik_true", "loglik_doubled", "estimate",
               "predict_train", "predict_interp", "predict_extrap")

# Tuning tiers matching the published sweep for N=10,000 / effective range 0.2
PRESETS = {
    "table1": {
        "vecchia": [5, 10, 20, 40, 80],
        "taper": [11, 30, 60, 130, 263],
        "fitc": [47, 254, 500, 950, 1500],
        "fsa": [(10, 5), (24, 8), (120, 28), (300, 100), (450, 150)],
    },
    "table2": {
        "vecchia": [5, 10, 20, 40, 80],
        "taper": [8, 17, 22, 40, 111],
        "fitc": [20, 200, 275, 900, 2000],
        "fsa": [(26, 6), (91, 11), (122, 15), (250, 27), (650, 76)],
    },
}


class ConfigError(ValueError):
    pass


def parse_config(path):
    """Flat ``key = value`` file to a dict; duplicate keys are errors."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = val
    return out


@dataclass
class Scenario:
    source: str = "simulate"             # simulate | csv
    scenario: str = "std"
    n: int = 2000
    csv_path: str | None = None
    linear_mean: bool = False
    base_seed: int = 1
    reps: int = 1
    time_cap: float = 600.0
    threads: int = 1
    exact_cutoff: int = 3000
    output: str = "benchmark.csv"
    tasks: tuple = ("loglik_true",)
    methods: list = field(default_factory=list)  # (name, [tier values])
    fit_overrides: dict = field(default_factory=dict)

    def fitting_spec(self, true_spec):
        """True spec with any fit.* misspecification overrides applied."""
        if not self.fit_overrides:
            return true_spec
        kw = dict(family=true_spec.family, sigma2=true_spec.sigma2,
                  sigma_n2=true_spec.sigma_n2, nu=true_spec.nu,
                  rho=true_spec.rho, rho_x=true_spec.rho_x,
                  rho_y=true_spec.rho_y)
        kw.update(self.fit_overrides)
        return CovarianceSpec(**kw)


def _parse_bool(s):
    return s.strip().lower() in ("1", "true", "yes", "on")


def _parse_list(s, conv=float):
    return [conv(x) for x in s.split(",") if x.strip()]


def scenario_from_config(cfg):
    sc = Scenario()
    try:
        sc.source = cfg.get("data.source", sc.source)
        sc.scenario = cfg.get("data.scenario", sc.scenario)
        sc.n = int(cfg.get("data.n", sc.n))
        sc.csv_path = cfg.get("data.csv")
        sc.linear_mean = _parse_bool(cfg.get("data.linear_mean", "false"))
        sc.base_seed = int(cfg.get("run.base_seed", sc.base_seed))
        sc.reps = int(cfg.get("run.reps", sc.reps))
        sc.time_cap = float(cfg.get("run.time_cap", sc.time_cap))
        sc.threads = int(cfg.get("run.threads", sc.threads))
        sc.exact_cutoff = int(cfg.get("run.exact_cutoff", sc.exact_cutoff))
        sc.output = cfg.get("run.output", sc.output)
        if "tasks" in cfg:
            sc.tasks = tuple(t.strip() for t in cfg["tasks"].split(","))
        for t in sc.tasks:
            if t not in VALID_TASKS:
                raise ConfigError(f"unknown task {t!r}")
        if sc.time_cap <= 0:
            raise ConfigError("time cap must be > 0")

        methods = []
        if "methods.preset" in cfg:
            preset = PRESETS.get(cfg["methods.preset"])
            if preset is None:
                raise ConfigError(f"unknown preset {cfg['methods.preset']!r}")
            methods.append(("exact", [None]))
            for name in ("vecchia", "taper", "fitc", "fsa"):
                methods.append((name, list(preset[name])))
        else:
            if _parse_bool(cfg.get("methods.exact", "false")):
                methods.append(("exact", [None]))
            if "methods.vecchia.m" in cfg:
                methods.append(("vecchia", _parse_list(cfg["methods.vecchia.m"], int)))
            if "methods.taper.nnz_per_row" in cfg:
                methods.append(("taper", _parse_list(cfg["methods.taper.nnz_per_row"], float)))
            if "methods.fitc.m_inducing" in cfg:
                methods.append(("fitc", _parse_list(cfg["methods.fitc.m_inducing"], int)))
            if "methods.fsa.m_inducing" in cfg:
                ms = _parse_list(cfg["methods.fsa.m_inducing"], int)
                nz = _parse_list(cfg.get("methods.fsa.nnz_per_row", ""), float)
                if len(nz) != len(ms):
                    raise ConfigError("methods.fsa.m_inducing and "
                                      "methods.fsa.nnz_per_row must match")
                methods.append(("fsa", list(zip(ms, nz))))
        if not methods:
            raise ConfigError("no methods configured")
        sc.methods = methods

        for key, val in cfg.items():
            if key.startswith("fit."):
                name = key[4:]
                sc.fit_overrides[name] = float(val) if name != "family" else val
    except ConfigError:
        raise
    except (KeyError, ValueError) as e:
        raise ConfigError(str(e)) from e
    return sc


def nnz_to_taper_range(train, nnz_target, max_sample=2000):
    """taper_range whose pattern has about nnz_target nonzeros per row,
    via the empirical quantile of pairwise distances."""
    S = train.locations
    n = len(S)
    rng = np.random.Generator(np.random.Philox(99))
    idx = rng.choice(n, size=min(n, max_sample), replace=False)
    sub = S[idx]
    d = np.hypot(sub[:, 0][:, None] - sub[:, 0][None, :],
                 sub[:, 1][:, None] - sub[:, 1][None, :])
    d = d[np.triu_indices_from(d, k=1)]
    frac = min(max((nnz_target - 1.0) / (n - 1.0), 1e-6), 1.0)
    return float(np.quantile(d, frac))


def _dataset_for_rep(sc, rep):
    seed = sc.base_seed + rep
    if sc.source == "simulate":
        data = simulate_dataset(sc.n, sc.scenario, seed=seed)
        true_spec = scenario_spec(sc.scenario)
    elif sc.source == "csv":
        if not sc.csv_path:
            raise ConfigError("data.csv required for data.source = csv")
        data = read_csv(sc.csv_path)
        true_spec = scenario_spec(sc.scenario)
    else:
        raise ConfigError(f"unknown data.source {sc.source!r}")
    return data, true_spec, seed


@dataclass
class _Lane:
    method: str
    tier: int
    tier_value: object

    def label(self):
        if self.tier_value is None:
            return ""
        if isinstance(self.tier_value, tuple):
            return "/".join(str(v) for v in self.tier_value)
        return str(self.tier_value)


class _LaneRunner:
    """Executes all tasks for one (method, tier) across reps."""

    def __init__(self, sc, lane):
        self.sc = sc
        self.lane = lane
        self.records = []
        self.failed = False
        self.aborted = False

    def emit(self, task, metric, value, wall, rep, seed):
        self.records.append((self.lane.method, self.lane.tier,
                             self.lane.label(), task, metric, value, wall,
                             rep, seed, self.sc.threads))

    def run(self, shared):
        sc = self.sc
        for rep in range(sc.reps):
            if self.aborted:
                for task in sc.tasks:
                    self.emit(task, "skipped", math.nan, 0.0, rep,
                              sc.base_seed + rep)
                continue
            ctx = shared[rep]
            for task in sc.tasks:
                try:
                    elapsed = self._run_task(task, ctx, rep)
                except Exception as e:
                    self.failed = True
                    self.emit(task, "failed", math.nan, 0.0, rep, ctx["seed"])
                    continue
                if elapsed is not None and elapsed > sc.time_cap:
                    self.aborted = True

    # -- task execution ----------------------------------------------------

    def _method_state(self, ctx):
        """Per-(lane, rep) structures built outside the timed region."""
        sc = self.sc
        lane = self.lane
        key = ("state", lane.method, lane.tier)
        if key in ctx:
            return ctx[key]
        train = ctx["train"]
        spec = ctx["fit_spec"]
        state = {}
        if lane.method == "vecchia":
            state["structure"] = build_vecchia(train, spec, lane.tier_value,
                                               seed=ctx["seed"])
        elif lane.method == "fitc":
            state["cfg"] = LowRankConfig(n_inducing=min(lane.tier_value,
                                                        len(train.y)),
                                         seed=ctx["seed"])
        elif lane.method == "fsa":
            m, nnz = lane.tier_value
            rng_range = nnz_to_taper_range(train, nnz)
            state["cfg"] = LowRankConfig(n_inducing=min(m, len(train.y)),
                                         seed=ctx["seed"],
                                         taper=TaperSpec(rng_range))
        elif lane.method == "taper":
            rng_range = nnz_to_taper_range(train, lane.tier_value)
            state["taper"] = TaperSpec(rng_range)
            # symbolic phase excluded from loglik timing
            _, sym = taper_loglik(state["taper"], spec, train)
            state["symbolic"] = sym
        ctx[key] = state
        return state

    def _loglik(self, spec, ctx, state):
        train = ctx["train"]
        m = self.lane.method
        if m == "exact":
            return loglik_exact(spec, train)
        if m == "vecchia":
            return vecchia_loglik(state["structure"], spec, train)
        if m in ("fitc", "fsa"):
            return lowrank_loglik(state["cfg"], spec, train)
        if m == "taper":
            ll, _ = taper_loglik(state["taper"], spec, train,
                                 reuse=state["symbolic"])
            return ll
        raise ValueError(m)

    def _predict(self, spec, ctx, state, locs):
        train = ctx["train"]
        m = self.lane.method
        if m == "exact":
            return predict_exact(spec, train, locs)
        if m == "vecchia":
            return vecchia_predict(state["structure"], spec, train, locs)
        if m in ("fitc", "fsa"):
            return lowrank_predict(state["cfg"], spec, train, locs)
        if m == "taper":
            return taper_predict(state["taper"], spec, train, locs,
                                 reuse=state["symbolic"])
        raise ValueError(m)

    def _run_task(self, task, ctx, rep):
        sc = self.sc
        state = self._method_state(ctx)
        spec = ctx["fit_spec"]
        seed = ctx["seed"]
        if task in ("loglik_true", "loglik_doubled"):
            eval_spec = spec if task == "loglik_true" else \
                spec.replace_params(2.0 * spec.params())
            t0 = time.perf_counter()
            ll = self._loglik(eval_spec, ctx, state)
            elapsed = time.perf_counter() - t0
            self.emit(task, "loglik", ll, elapsed, rep, seed)
            exact_key = "exact_" + task
            if exact_key in ctx:
                self.emit(task, "loglik_diff", abs(ll - ctx[exact_key]),
                          elapsed, rep, seed)
            if self.lane.method == "taper":
                self.emit(task, "nnz_per_row",
                          taper_nnz_per_row(state["taper"], ctx["train"]),
                          elapsed, rep, seed)
            return elapsed
        if task == "estimate":
            method_cfg = self._fit_config(state)
            t0 = time.perf_counter()
            res = fit_params(self.lane.method, method_cfg, ctx["train"],
                             init=default_init(ctx["train"], nu=spec.nu,
                                               family=spec.family))
            elapsed = time.perf_counter() - t0
            for name, val in zip(res.spec_hat.param_names(),
                                 res.spec_hat.params()):
                self.emit(task, "estimate_" + name, val, elapsed, rep, seed)
            self.emit(task, "loglik_opt", res.loglik_at_optimum, elapsed,
                      rep, seed)
            self.emit(task, "iterations", res.iterations, elapsed, rep, seed)
            self.emit(task, "converged", float(res.converged), elapsed, rep,
                      seed)
            return elapsed
        if task.startswith("predict_"):
            split = {"predict_train": "train", "predict_interp": "test_interp",
                     "predict_extrap": "test_extrap"}[task]
            sub = ctx["data"].subset(split)
            if len(sub.y) == 0:
                return None
            t0 = time.perf_counter()
            pred = self._predict(spec, ctx, state, sub.locations)
            elapsed = time.perf_counter() - t0
            # simulated data scores the latent process; real data (no latent
            # column) scores the observable one
            if sub.latent is not None:
                truth = sub.latent
            else:
                truth = sub.y
                pred = pred.to_observable(spec.sigma_n2)
            scores = score_predictions(pred, truth, spec.sigma_n2)
            for k, v in scores.items():
                self.emit(task, k, v, elapsed, rep, seed)
            ek = "exact_" + task
            if ek in ctx and self.lane.method != "exact":
                ex = ctx[ek]
                self.emit(task, "rmse_mean",
                          float(np.sqrt(np.mean((pred.means - ex.means) ** 2))),
                          elapsed, rep, seed)
                self.emit(task, "rmse_var",
                          float(np.sqrt(np.mean((pred.variances - ex.variances) ** 2))),
                          elapsed, rep, seed)
                sq = np.sqrt(np.maximum(pred.variances, 1e-300))
                sp = np.sqrt(np.maximum(ex.variances, 1e-300))
                self.emit(task, "kl_mean",
                          float(np.mean(kl_gaussian(pred.means, sq,
                                                    ex.means, sp))),
                          elapsed, rep, seed)
            return elapsed
        raise ConfigError(f"unknown task {task!r}")

    def _fit_config(self, state):
        m = self.lane.method
        if m == "exact":
            return {}
        if m == "vecchia":
            return {"m": self.lane.tier_value, "seed": 0}
        if m == "fitc":
            return {"n_inducing": state["cfg"].n_inducing,
                    "seed": state["cfg"].seed}
        if m == "fsa":
            return {"n_inducing": state["cfg"].n_inducing,
                    "seed": state["cfg"].seed, "taper": state["cfg"].taper}
        if m == "taper":
            return {"taper": state["taper"]}
        raise ValueError(m)


def run_scenario(sc, out_path=None):
    """Execute a scenario, streaming BenchmarkRecords to CSV.

    Returns the process exit code: 0 success, 2 when per-lane failures were
    recorded.
    """
    out_path = out_path or sc.output
    # shared per-rep context: dataset, exact references
    shared = []
    for rep in range(sc.reps):
        data, true_spec, seed = _dataset_for_rep(sc, rep)
        train = data.train
        fit_spec = sc.fitting_spec(true_spec)
        ctx = {"data": data, "train": train, "seed": seed,
               "true_spec": true_spec, "fit_spec": fit_spec}
        n = len(train.y)
        if n <= sc.exact_cutoff:
            if "loglik_true" in sc.tasks:
                ctx["exact_loglik_true"] = loglik_exact(fit_spec, train)
            if "loglik_doubled" in sc.tasks:
                dbl = fit_spec.replace_params(2.0 * fit_spec.params())
                ctx["exact_loglik_doubled"] = loglik_exact(dbl, train)
            for task, split in (("predict_train", "train"),
                                ("predict_interp", "test_interp"),
                                ("predict_extrap", "test_extrap")):
                if task in sc.tasks:
                    sub = data.subset(split)
                    if len(sub.y):
                        ctx["exact_" + task] = predict_exact(fit_spec, train,
                                                             sub.locations)
        shared.append(ctx)

    lanes = []
    for method, tiers in sc.methods:
        for tier, tv in enumerate(tiers):
            lanes.append(_Lane(method=method, tier=tier, tier_value=tv))

    runners = [_LaneRunner(sc, lane) for lane in lanes]
    any_failed = False
    with open(out_path, "w") as fh:
        fh.write(CSV_COLUMNS + "\n")
        fh.flush()
        if sc.threads > 1:
            with concurrent.futures.ThreadPoolExecutor(sc.threads) as pool:
                futures = [pool.submit(r.run, shared) for r in runners]
                for r, fut in zip(runners, futures):
                    fut.result()
                    _write_records(fh, r.records)
                    any_failed |= r.failed
        else:
            for r in runners:
                r.run(shared)
                _write_records(fh, r.records)
                any_failed |= r.failed
    return 2 if any_failed else 0


def _write_records(fh, records):
    for rec in records:
        method, tier, tv, task, metric, value, wall, rep, seed, threads = rec
        fh.write(f"{method},{tier},{tv},{task},{metric},{value:.17g},"
                 f"{wall:.6g},{rep},{seed},{threads}\n")
        fh.flush()
