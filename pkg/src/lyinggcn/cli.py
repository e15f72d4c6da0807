"""Command-line entry point.

Subcommands: generate (synthetic datasets), train (one model over all
splits), grid (model selection), simulate (diffusion trajectories),
spectra (spectral verification of the lying generator).
Exit codes: 0 success, 2 usage/config, 3 numerical failure, 4 property violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dynamics
from .data import (
    Dataset,
    SplitSet,
    generate_multipartite,
    load_canonical,
    make_random_splits,
    save_canonical,
)
from .errors import (
    ConfigurationError,
    EvaluationError,
    NumericalError,
    ParseError,
    PropertyViolation,
    ValidationError,
)
from .experiments import (
    RAW_CSV_HEADER,
    TrainSpec,
    cell_seed,
    config_from_dict,
    grid_search,
    raw_csv_row,
    train_model,
)
from .graph import Graph, chain_graph
from .layers import MODEL_KINDS, GraphContext

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VIOLATION = 0, 2, 3, 4


def _read_json_arg(value: str):
    """Inline JSON if it looks like it, else a file path."""
    text = value.strip()
    if text.startswith("{") or text.startswith("["):
        return json.loads(text)
    return json.loads(Path(value).read_text())


def _write_resolved(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "resolved_config.json").write_text(json.dumps(payload, indent=2, sort_keys=True))


def _load_dataset(path: str) -> tuple[Dataset, SplitSet | None]:
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"dataset file not found: {path}")
    return load_canonical(p)


def _splits_or_random(ds, splits, seed: int, trials: int = 10) -> SplitSet:
    if splits is not None:
        return splits
    return make_random_splits(ds, trials=trials, rng=np.random.default_rng(seed))


# ---------------------------------------------------------------------------
# generate

def cmd_generate(args) -> int:
    k = {"bipartite": 2, "tripartite": 3}[args.kind]
    rng = np.random.default_rng(args.seed)
    ds = generate_multipartite(k, args.nodes, args.avg_degree, args.feat_dim, rng, name=args.kind)
    splits = make_random_splits(ds, trials=args.trials, rng=rng)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_canonical(ds, splits, out)
    resolved = {
        "command": "generate",
        "kind": args.kind,
        "nodes": args.nodes,
        "avg_degree": args.avg_degree,
        "feat_dim": args.feat_dim,
        "seed": args.seed,
        "trials": args.trials,
        "out": str(out),
    }
    Path(str(out) + ".resolved.json").write_text(json.dumps(resolved, indent=2, sort_keys=True))
    print(f"wrote {out} ({ds.n_nodes} nodes, {ds.graph.n_edges} edges, C={ds.n_classes})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train

_CONFIG_KEYS = ("depth", "hidden", "activation", "p_input", "p_layer", "alpha", "lam",
                "optimizer", "lr", "weight_decay", "max_epochs", "patience")


def _resolve_train_config(args) -> dict:
    config = {}
    if args.config:
        config.update(_read_json_arg(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            config[key] = flag
    unknown = set(config) - set(_CONFIG_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return config


def cmd_train(args) -> int:
    ds, file_splits = _load_dataset(args.dataset)
    splits = _splits_or_random(ds, file_splits, args.seed)
    config = _resolve_train_config(args)

    spec = TrainSpec(
        optimizer=config.get("optimizer", "adam"),
        lr=config.get("lr", 0.01),
        weight_decay=config.get("weight_decay", 0.0),
        max_epochs=config.get("max_epochs", 1000),
        patience=config.get("patience", 200),
        seed=args.seed,
    )
    cfg, spec = config_from_dict(args.model, {k: v for k, v in config.items()
                                              if k in ("depth", "hidden", "activation", "p_input",
                                                       "p_layer", "alpha", "lam", "weight_decay", "lr")},
                                 base_spec=spec)

    out_dir = Path(args.out)
    _write_resolved(out_dir, {"command": "train", "dataset": args.dataset, "model": args.model,
                              "seed": args.seed, "config": config})
    ctx = GraphContext.from_graph(ds.graph) if args.model != "mlp" else None
    results = []
    with open(out_dir / "results_raw.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RAW_CSV_HEADER)
        for ti, trial in enumerate(splits.trials):
            res = train_model(cfg, replace(spec, seed=cell_seed(args.seed, 0, ti)),
                              ds, trial, ctx=ctx, config_id="c0000", trial_id=ti)
            results.append(res)
            w.writerow(raw_csv_row(ds.name, args.model, res))

    ok = [r for r in results if not r.failed]
    if not ok:
        print("error: every trial diverged", file=sys.stderr)
        return EXIT_NUMERICAL
    accs = np.array([r.test_acc for r in ok])
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "model", "mean_test_acc", "std_test_acc", "trials"])
        w.writerow([ds.name, args.model, f"{accs.mean():.4f}",
                    f"{accs.std(ddof=1) if len(accs) > 1 else 0.0:.4f}", len(ok)])
    print(f"{ds.name}/{args.model}: mean test acc {accs.mean():.4f} +/- "
          f"{accs.std(ddof=1) if len(accs) > 1 else 0.0:.4f} over {len(ok)} trials")
    if len(ok) < len(results):
        print(f"error: {len(results) - len(ok)} trial(s) diverged", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# grid

def cmd_grid(args) -> int:
    ds, file_splits = _load_dataset(args.dataset)
    splits = _splits_or_random(ds, file_splits, args.seed)
    grid = _read_json_arg(args.grid)
    if not isinstance(grid, dict) or not grid:
        raise ConfigurationError("grid JSON must be a non-empty object of value lists")
    out_dir = Path(args.out)
    _write_resolved(out_dir, {"command": "grid", "dataset": args.dataset, "model": args.model,
                              "grid": grid, "seed": args.seed, "workers": args.workers})
    spec = TrainSpec(optimizer=args.optimizer, lr=args.lr, max_epochs=args.max_epochs,
                     patience=args.patience, seed=args.seed)
    result = grid_search(args.model, grid, spec, ds, splits, workers=args.workers,
                         out_dir=out_dir, dataset_name=ds.name)
    print(f"{ds.name}/{args.model}: mean test acc {result.mean_test_acc:.4f} "
          f"+/- {result.std_test_acc:.4f} over {len(splits)} trials "
          f"({len(result.configs)} configs)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate

def _parse_z_spec(raw: str | None, n: int, graph: Graph) -> np.ndarray:
    if raw is None or raw == "fig1":
        if n != 3:
            raise ConfigurationError("the built-in weight preset needs the 3-node chain")
        return dynamics.fig1_lying_Z()
    spec = _read_json_arg(raw)
    Z = np.zeros((n, n))
    if isinstance(spec, dict) and "all" in spec:
        val = float(spec["all"])
        for u, v in graph.edges:
            Z[u, v] = Z[v, u] = val
    elif isinstance(spec, dict) and "entries" in spec:
        for u, v, z in spec["entries"]:
            Z[int(u), int(v)] = float(z)
    else:
        raise ConfigurationError('weight spec must carry "all" or "entries"')
    if np.abs(Z).max() > 1.0:
        raise ConfigurationError("weights must lie in [-1, 1]")
    return Z


def _load_sim_graph(arg: str) -> Graph:
    if arg == "chain3":
        return chain_graph(3)
    ds, _ = _load_dataset(arg)
    return ds.graph


def cmd_simulate(args) -> int:
    g = _load_sim_graph(args.graph)
    n = g.n_nodes
    h0 = np.asarray(json.loads(args.h0), dtype=np.float64) if args.h0 else (
        dynamics.FIG1_H0.copy() if n == 3 else np.linspace(1.0, -1.0, n)
    )
    if len(h0) != n:
        raise ConfigurationError(f"h0 has {len(h0)} entries for {n} nodes")

    if args.system == "heat":
        sys_ = dynamics.heat_system(g, args.alpha)
    elif args.system == "heat-norm":
        sys_ = dynamics.heat_normalized_system(g, args.alpha)
    elif args.system == "sheaf":
        if args.sheaf_weights:
            weights = [float(w) for w in json.loads(args.sheaf_weights)]
        elif args.graph == "chain3":
            weights = list(dynamics.FIG1_SHEAF_WEIGHTS)
        else:
            weights = [1.0] * g.n_edges
        sys_ = dynamics.sheaf_system(g, [(1.0, w) for w in weights], args.alpha)
    else:
        Z = _parse_z_spec(args.z_spec, n, g)
        sys_ = dynamics.lying_system(g, Z, args.alpha)

    out_dir = Path(args.out)
    _write_resolved(out_dir, {"command": "simulate", "system": args.system, "graph": args.graph,
                              "z_spec": args.z_spec, "sheaf_weights": args.sheaf_weights,
                              "t_max": args.t_max, "points": args.points, "alpha": args.alpha,
                              "h0": h0.tolist()})
    times = np.linspace(0.0, args.t_max, args.points) if args.t_max > 0 else np.array([0.0])
    closed = dynamics.solve_closed_form(sys_, h0, times)
    closed.write_csv(out_dir / "trajectory_closed.csv")
    report = {"system": args.system, "solver": closed.solver}
    if args.t_max > 0:
        rk4 = dynamics.solve_rk4(sys_, h0, dt=args.t_max / max(args.points - 1, 1) / 10.0,
                                 steps=(args.points - 1) * 10)
        sampled = rk4.states[::10]
        dynamics.Trajectory(times, sampled, "rk4").write_csv(out_dir / "trajectory_rk4.csv")
        report["solver_gap"] = float(np.abs(closed.states - sampled).max())
    if args.graph == "chain3":
        fig_report = dynamics.reproduce_figure1(out_dir / "fig1")
        report["fig1"] = fig_report
    (out_dir / "report.json").write_text(json.dumps(report, indent=2))
    print(json.dumps(report, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# spectra

def _random_graph(rng: np.random.Generator, max_n: int) -> Graph:
    n = int(rng.integers(3, max_n + 1))
    p = min(1.0, 2.5 / max(n - 1, 1))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    if not pairs:
        pairs = [(0, 1)]
    return Graph(n, pairs)


def _random_Z(rng: np.random.Generator, g: Graph) -> np.ndarray:
    Z = np.zeros((g.n_nodes, g.n_nodes))
    for u, v in g.edges:
        Z[u, v] = rng.uniform(-1.0, 1.0)
        Z[v, u] = rng.uniform(-1.0, 1.0)
    return Z


def _ones_Z(g: Graph) -> np.ndarray:
    Z = np.zeros((g.n_nodes, g.n_nodes))
    for u, v in g.edges:
        Z[u, v] = Z[v, u] = 1.0
    return Z


def cmd_spectra(args) -> int:
    rng = np.random.default_rng(args.seed)
    fixed_graph = None if args.graph == "random" else _load_sim_graph(args.graph)
    samples = []
    for i in range(args.samples):
        g = fixed_graph if fixed_graph is not None else _random_graph(rng, args.max_n)
        if args.z == "random":
            Z = _random_Z(rng, g)
        elif args.z == "ones":
            Z = _ones_Z(g)
        elif args.z == "fig1":
            Z = _parse_z_spec("fig1", g.n_nodes, g)
        else:
            Z = _parse_z_spec(args.z, g.n_nodes, g)
        E = dynamics.build_lying_E(dynamics.normalize_adjacency(g), Z)
        rep = dynamics.verify_proposition1(E)
        samples.append(rep)
        if args.samples <= 20 or not rep.passed:
            nz = "none" if rep.min_nonzero_re is None else f"{rep.min_nonzero_re:.6g}"
            print(f"sample {i}: n={g.n_nodes} min_re={rep.min_re:.6g} "
                  f"min_nonzero_re={nz} complex_pairs={rep.n_complex_pairs} "
                  f"gershgorin={'ok' if rep.gershgorin_ok else 'FAIL'} "
                  f"{'pass' if rep.passed else 'FAIL'}")
    n_pass = sum(r.passed for r in samples)
    n_complex = sum(r.n_complex_pairs > 0 for r in samples)
    summary = {
        "samples": args.samples,
        "passed": n_pass,
        "with_complex_pair": n_complex,
        "min_re_overall": min(r.min_re for r in samples),
    }
    print(json.dumps(summary, indent=2))
    if args.out:
        out_dir = Path(args.out)
        _write_resolved(out_dir, {"command": "spectra", "graph": args.graph, "z": args.z,
                                  "samples": args.samples, "seed": args.seed,
                                  "max_n": args.max_n})
        (out_dir / "report.json").write_text(json.dumps(summary, indent=2))
    if n_pass != args.samples:
        print("error: spectral property violated; this signals an implementation bug",
              file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyinggcn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic multipartite dataset")
    p.add_argument("--kind", choices=("bipartite", "tripartite"), default="bipartite")
    p.add_argument("--nodes", type=int, default=1600)
    p.add_argument("--avg-degree", type=float, default=5.0)
    p.add_argument("--feat-dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train one configuration over all splits")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--config", help="JSON file or inline JSON with hyperparameters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    for key, typ in (("depth", int), ("hidden", int), ("activation", str),
                     ("p_input", float), ("p_layer", float), ("alpha", float),
                     ("lam", float), ("optimizer", str), ("lr", float),
                     ("weight_decay", float), ("max_epochs", int), ("patience", int)):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=typ, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid", help="grid search with per-split model selection")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--grid", required=True, help="JSON file or inline JSON of value lists")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=int(os.environ.get("LDL_WORKERS", "1")))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--optimizer", choices=("adam", "adamw"), default="adam")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--patience", type=int, default=200)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("simulate", help="integrate a diffusion system")
    p.add_argument("--system", choices=("heat", "heat-norm", "sheaf", "lying"), required=True)
    p.add_argument("--graph", default="chain3", help="'chain3' or a canonical dataset path")
    p.add_argument("--z-spec", dest="z_spec", help="lying weights: 'fig1', JSON, or JSON path")
    p.add_argument("--sheaf-weights", dest="sheaf_weights", help="JSON list of per-edge signs")
    p.add_argument("--t-max", dest="t_max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--h0", help="JSON list of initial values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectra", help="verify the spectral property of lying generators")
    p.add_argument("--graph", default="random", help="'random', 'chain3', or a dataset path")
    p.add_argument("--z", default="random", help="'random', 'ones', 'fig1', JSON, or JSON path")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-n", dest="max_n", type=int, default=30)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectra)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ParseError, ValidationError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, EvaluationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PropertyViolation as exc:
        print(f"property violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
