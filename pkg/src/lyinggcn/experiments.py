"""Training, model selection, metrics, and significance testing."""

from __future__ import annotations

import csv
import itertools
import math
import multiprocessing as mp
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import Dataset, SplitSet, Trial
from .errors import ConfigurationError, ContractError, EvaluationError
from .layers import GraphContext, ModelConfig, ModelParams, assemble_model, forward
from .numerics import tensor as T
from .numerics.tensor import Tensor

OPTIMIZER_KINDS = ("adam", "adamw")


@dataclass
class TrainSpec:
    optimizer: str = "adam"
    lr: float = 0.01
    weight_decay: float = 0.0
    max_epochs: int = 1000
    patience: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZER_KINDS:
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")
        if self.lr <= 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.lr}")
        if self.patience > self.max_epochs:
            raise ConfigurationError("patience cannot exceed the epoch budget")


@dataclass
class TrialResult:
    config_id: str
    trial_id: int
    best_val_acc: float
    test_acc: float
    epochs_run: int
    seconds: float
    failed: bool = False
    fail_epoch: int | None = None


def adam_step(params, grads, state, lr, betas=(0.9, 0.999), eps=1e-8,
              weight_decay=0.0, decoupled=False):
    """One Adam/AdamW step over parallel lists of arrays; updates in place.

    decoupled=True applies the decay directly to the parameters (AdamW);
    otherwise it is folded into the gradient before the moment updates.
    """
    if state is None:
        state = {"t": 0, "m": [np.zeros_like(p) for p in params],
                 "v": [np.zeros_like(p) for p in params]}
    if len(state["m"]) != len(params):
        raise ContractError(f"state tracks {len(state['m'])} tensors, got {len(params)}")
    b1, b2 = betas
    state["t"] += 1
    t = state["t"]
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state["m"], state["v"], strict=True):
        if p.shape != g.shape or p.shape != m.shape:
            raise ContractError(f"shape mismatch in optimizer state: {p.shape} vs {g.shape}")
        if weight_decay != 0.0 and not decoupled:
            g = g + weight_decay * p
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        if weight_decay != 0.0 and decoupled:
            p -= lr * weight_decay * p
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return state


class Optimizer:
    def __init__(self, params: list[Tensor], spec: TrainSpec):
        self.params = params
        self.spec = spec
        self.state = None

    def step(self):
        grads = [p.grad if p.grad is not None else np.zeros_like(p.values) for p in self.params]
        self.state = adam_step(
            [p.values for p in self.params],
            grads,
            self.state,
            lr=self.spec.lr,
            weight_decay=self.spec.weight_decay,
            decoupled=(self.spec.optimizer == "adamw"),
        )

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


def accuracy(logit_values: np.ndarray, y: np.ndarray, mask: np.ndarray) -> float:
    pred = logit_values[mask].argmax(axis=1)
    return float((pred == y[mask]).mean())


def train_model(
    cfg: ModelConfig,
    spec: TrainSpec,
    ds: Dataset,
    trial: Trial,
    ctx: GraphContext | None = None,
    config_id: str = "cfg",
    trial_id: int = 0,
) -> TrialResult:
    """Minimise masked cross entropy on the train nodes; report the test
    accuracy at the best-validation epoch. Fully determined by (spec.seed, cfg, trial)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    if cfg.kind != "mlp" and ctx is None:
        ctx = GraphContext.from_graph(ds.graph)
    model = assemble_model(cfg, ds.n_features, ds.n_classes, rng)
    opt = Optimizer(model.parameters(), spec)
    X = Tensor(ds.X)
    train_idx, val_idx, test_idx = trial.masks()

    best_val = -1.0
    test_at_best = 0.0
    best_epoch = 0
    epoch = 0
    for epoch in range(1, spec.max_epochs + 1):
        logits, _ = forward(model, X, ctx, training=True, rng=rng)
        loss = T.masked_softmax_cross_entropy(logits, ds.y, train_idx)
        if not np.isfinite(loss.item()):
            return TrialResult(config_id, trial_id, best_val, test_at_best, epoch,
                               time.perf_counter() - t0, failed=True, fail_epoch=epoch)
        opt.zero_grad()
        T.backward(loss)
        opt.step()

        eval_logits, _ = forward(model, X, ctx, training=False)
        val_acc = accuracy(eval_logits.values, ds.y, val_idx)
        if val_acc > best_val:
            best_val = val_acc
            test_at_best = accuracy(eval_logits.values, ds.y, test_idx)
            best_epoch = epoch
        if epoch - best_epoch >= spec.patience:
            break
    return TrialResult(config_id, trial_id, best_val, test_at_best, epoch,
                       time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# grid search

GRID_KEYS = ("depth", "hidden", "activation", "p_input", "p_layer",
             "weight_decay", "alpha", "lam", "lr")

RAW_CSV_HEADER = ["dataset", "model", "config_id", "trial", "val_acc",
                  "test_acc", "epochs", "seconds"]


def raw_csv_row(dataset_name: str, kind: str, res: TrialResult) -> list:
    """Full-precision raw row; failed trials carry nan accuracies."""
    val = float("nan") if res.failed else res.best_val_acc
    test = float("nan") if res.failed else res.test_acc
    return [dataset_name, kind, res.config_id, res.trial_id, repr(val),
            repr(test), res.epochs_run, repr(res.seconds)]


def expand_grid(grid: dict) -> list[dict]:
    """Cartesian product in deterministic key order."""
    if not grid:
        raise ConfigurationError("empty hyperparameter grid")
    for key in grid:
        if key not in GRID_KEYS:
            raise ConfigurationError(f"unknown grid key {key!r}; expected subset of {GRID_KEYS}")
    keys = [k for k in GRID_KEYS if k in grid]
    combos = []
    for values in itertools.product(*(grid[k] for k in keys)):
        combos.append(dict(zip(keys, values)))
    return combos


def config_from_dict(kind: str, combo: dict, base_cfg: ModelConfig | None = None,
                     base_spec: TrainSpec | None = None) -> tuple[ModelConfig, TrainSpec]:
    cfg_kwargs = {"kind": kind}
    for key in ("depth", "hidden", "activation", "p_input", "p_layer", "alpha", "lam"):
        if key in combo:
            cfg_kwargs[key] = combo[key]
        elif base_cfg is not None:
            cfg_kwargs[key] = getattr(base_cfg, key)
    cfg = ModelConfig(**cfg_kwargs)
    spec = base_spec if base_spec is not None else TrainSpec()
    if "weight_decay" in combo:
        spec = replace(spec, weight_decay=combo["weight_decay"])
    if "lr" in combo:
        spec = replace(spec, lr=combo["lr"])
    return cfg, spec


def cell_seed(base_seed: int, config_index: int, trial_index: int) -> int:
    """Stable per-cell seed, independent of execution order."""
    return int(np.random.SeedSequence((base_seed, config_index, trial_index)).generate_state(1)[0])


@dataclass
class GridResult:
    results: list[TrialResult]
    selection: list[dict]  # one row per trial: config_id, val_acc, test_acc
    mean_test_acc: float
    std_test_acc: float
    configs: list[dict]


_POOL_PAYLOAD: dict = {}


def _pool_init(ds, kind, base_spec, configs, base_seed):
    _POOL_PAYLOAD["ds"] = ds
    _POOL_PAYLOAD["ctx"] = GraphContext.from_graph(ds.graph) if kind != "mlp" else None
    _POOL_PAYLOAD["kind"] = kind
    _POOL_PAYLOAD["base_spec"] = base_spec
    _POOL_PAYLOAD["configs"] = configs
    _POOL_PAYLOAD["base_seed"] = base_seed


def _pool_cell(args):
    ci, ti, trial = args
    ds = _POOL_PAYLOAD["ds"]
    cfg, spec = config_from_dict(_POOL_PAYLOAD["kind"], _POOL_PAYLOAD["configs"][ci],
                                 base_spec=_POOL_PAYLOAD["base_spec"])
    spec = replace(spec, seed=cell_seed(_POOL_PAYLOAD["base_seed"], ci, ti))
    return ci, ti, train_model(cfg, spec, ds, trial, ctx=_POOL_PAYLOAD["ctx"],
                               config_id=f"c{ci:04d}", trial_id=ti)


def select_best_per_trial(val_table: np.ndarray) -> np.ndarray:
    """Argmax config per trial from validation accuracies only (n_cfg x n_trials)."""
    return val_table.argmax(axis=0)


def grid_search(
    kind: str,
    grid: dict,
    base_spec: TrainSpec,
    ds: Dataset,
    splits: SplitSet,
    workers: int = 1,
    out_dir: str | Path | None = None,
    dataset_name: str | None = None,
) -> GridResult:
    """Per-split model selection on validation accuracy, test reported at the pick.

    Cells are deterministic in (base_spec.seed, config index, trial index), so
    worker count and completion order cannot change any reported number.
    Completed cells are appended to results_raw.csv; a rerun resumes from it.
    """
    configs = expand_grid(grid)
    n_cfg, n_tr = len(configs), len(splits)
    dataset_name = dataset_name or ds.name
    out_dir = Path(out_dir) if out_dir is not None else None
    raw_path = out_dir / "results_raw.csv" if out_dir else None

    done: dict[tuple[int, int], TrialResult] = {}
    if raw_path and raw_path.exists():
        for row in csv.DictReader(raw_path.open()):
            ci, ti = int(row["config_id"][1:]), int(row["trial"])
            val = float(row["val_acc"])
            done[(ci, ti)] = TrialResult(
                row["config_id"], ti, val, float(row["test_acc"]),
                int(row["epochs"]), float(row["seconds"]),
                failed=bool(np.isnan(val)),  # failed cells carry nan accuracies
            )

    pending = [(ci, ti, splits.trials[ti])
               for ci in range(n_cfg) for ti in range(n_tr) if (ci, ti) not in done]

    writer = None
    if raw_path:
        new_file = not raw_path.exists()
        raw_fh = raw_path.open("a", newline="")
        writer = csv.writer(raw_fh)
        if new_file:
            writer.writerow(RAW_CSV_HEADER)

    def record(ci, ti, res):
        done[(ci, ti)] = res
        if writer:
            writer.writerow(raw_csv_row(dataset_name, kind, res))
            raw_fh.flush()

    if workers > 1 and pending:
        with mp.get_context("spawn").Pool(
            workers, initializer=_pool_init,
            initargs=(ds, kind, base_spec, configs, base_spec.seed),
        ) as pool:
            for ci, ti, res in pool.imap_unordered(_pool_cell, pending, chunksize=1):
                record(ci, ti, res)
    else:
        _pool_init(ds, kind, base_spec, configs, base_spec.seed)
        for args in pending:
            ci, ti, res = _pool_cell(args)
            record(ci, ti, res)
    if writer:
        raw_fh.close()

    # exclude configs whose every trial failed
    val_table = np.full((n_cfg, n_tr), -np.inf)
    test_table = np.zeros((n_cfg, n_tr))
    for (ci, ti), res in done.items():
        if not res.failed:
            val_table[ci, ti] = res.best_val_acc
            test_table[ci, ti] = res.test_acc
    dead = np.all(np.isinf(val_table), axis=1)
    if dead.any():
        import warnings

        warnings.warn(f"{int(dead.sum())} config(s) failed on every trial and were excluded")
    if dead.all():
        raise EvaluationError("every configuration failed on every trial")

    picks = select_best_per_trial(val_table)
    selection = []
    test_accs = []
    for ti in range(n_tr):
        ci = int(picks[ti])
        selection.append({
            "trial": ti,
            "config_id": f"c{ci:04d}",
            "config": configs[ci],
            "val_acc": float(val_table[ci, ti]),
            "test_acc": float(test_table[ci, ti]),
        })
        test_accs.append(float(test_table[ci, ti]))
    test_accs = np.array(test_accs)
    result = GridResult(
        results=[done[k] for k in sorted(done)],
        selection=selection,
        mean_test_acc=float(test_accs.mean()),
        std_test_acc=float(test_accs.std(ddof=1)) if n_tr > 1 else 0.0,
        configs=configs,
    )
    if out_dir:
        _write_selection(out_dir / "selection.csv", selection)
        _write_summary(out_dir / "summary.csv", dataset_name, kind, result, n_tr)
    return result


def _write_selection(path, selection):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "config_id", "val_acc", "test_acc"])
        for row in selection:
            w.writerow([row["trial"], row["config_id"], repr(row["val_acc"]), repr(row["test_acc"])])


def _write_summary(path, dataset_name, kind, result: GridResult, n_trials: int):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "model", "mean_test_acc", "std_test_acc", "trials"])
        w.writerow([dataset_name, kind, f"{result.mean_test_acc:.4f}",
                    f"{result.std_test_acc:.4f}", n_trials])


# ---------------------------------------------------------------------------
# depth sweep

def layer_sweep(
    kind_configs: dict[str, dict],
    base_spec: TrainSpec,
    ds: Dataset,
    splits: SplitSet,
    depths=range(1, 11),
    out_path: str | Path | None = None,
) -> dict:
    """Validation accuracy vs depth with all other hyperparameters pinned per kind."""
    ctx = GraphContext.from_graph(ds.graph)
    rows = []
    table: dict[str, dict[int, float]] = {}
    for kind, combo in kind_configs.items():
        table[kind] = {}
        for d_i, depth in enumerate(depths):
            cfg, spec = config_from_dict(kind, {**combo, "depth": depth}, base_spec=base_spec)
            accs = []
            for ti, trial in enumerate(splits.trials):
                spec_t = replace(spec, seed=cell_seed(base_spec.seed, 10_000 + d_i, ti))
                res = train_model(cfg, spec_t, ds, trial,
                                  ctx=None if kind == "mlp" else ctx,
                                  config_id=f"{kind}-l{depth}", trial_id=ti)
                accs.append(res.best_val_acc)
            mean_acc = float(np.mean(accs))
            table[kind][int(depth)] = mean_acc
            rows.append([kind, int(depth), mean_acc, float(np.std(accs, ddof=1))])
    if out_path:
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "depth", "mean_val_acc", "std_val_acc"])
            for row in rows:
                w.writerow([row[0], row[1], f"{row[2]:.4f}", f"{row[3]:.4f}"])

    report = {"table": table, "rows": rows, "checks": {}}
    if "lying_gcn" in table:
        deep = [(d, a) for d, a in sorted(table["lying_gcn"].items()) if d >= 3]
        if len(deep) >= 3:
            rho = spearman([d for d, _ in deep], [a for _, a in deep])
            report["checks"]["lying_gcn_decreasing_beyond_3"] = bool(rho < 0)
            report["checks"]["lying_gcn_spearman"] = rho
    if "lying_gcnii" in table:
        accs = table["lying_gcnii"]
        best = max(accs.values())
        last = accs[max(accs)]
        report["checks"]["lying_gcnii_depth10_within_5pts"] = bool(best - last <= 0.05)
        report["checks"]["lying_gcnii_gap"] = float(best - last)
    return report


def _ranks(x):
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    i = 0
    sorted_x = x[order]
    while i < len(x):
        j = i
        while j + 1 < len(x) and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    rx, ry = _ranks(x), _ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx * rx).sum() * (ry * ry).sum())
    if denom == 0:
        return 0.0
    return float((rx * ry).sum() / denom)


# ---------------------------------------------------------------------------
# significance

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_iter, eps, fpmin = 300, 3e-16, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise EvaluationError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def welch_t_test(sample_a, sample_b) -> float:
    """Two-sided Welch's t-test p-value."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise EvaluationError("each sample needs at least two observations")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        if a.mean() == b.mean():
            return 1.0
        raise EvaluationError("both samples are constant; the t statistic is undefined")
    na, nb = len(a), len(b)
    se2 = va / na + vb / nb
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2 * se2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    if t == 0.0:
        return 1.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


# ---------------------------------------------------------------------------
# embedding export

def export_embeddings(model: ModelParams, ds: Dataset, layer_index: int, path,
                      ctx: GraphContext | None = None) -> None:
    """CSV of node_id, label, h_1..h_d for the requested layer (0 = input map)."""
    if ctx is None and model.cfg.kind != "mlp":
        ctx = GraphContext.from_graph(ds.graph)
    _, embs = forward(model, Tensor(ds.X), ctx, training=False, collect_embeddings=True)
    if not 0 <= layer_index < len(embs):
        raise ConfigurationError(
            f"layer index {layer_index} out of range; model exposes 0..{len(embs) - 1}"
        )
    H = embs[layer_index].values
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "label"] + [f"h_{i + 1}" for i in range(H.shape[1])])
        for i in range(H.shape[0]):
            w.writerow([i, int(ds.y[i])] + [repr(float(x)) for x in H[i]])
