"""Config-driven batch front end.

Subcommands: generate, cotrain, figures, audit, sweep. One TOML config file
drives everything; outputs are plain CSV so runs diff cleanly. Every command is
deterministic given (config, seeds): re-runs produce byte-identical files.

Seeds listed in the config fan out into independent replicates: for each run
seed the generator seed and the loop/init seed are both overridden, so a seed
names a complete replicate (fresh data draw plus fresh initialization).
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

try:
    import tomllib  # type: ignore[import-not-found]
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .classifier import TrainConfig, save_classifier
from .data import (
    ConfigError,
    Dataset,
    GeneratorConfig,
    apply_shift,
    conditional_dependence_stat,
    generate_dataset,
    save_dataset,
)
from .engine import (
    CoTrainConfig,
    RoundMetrics,
    TRAJECTORY_COLUMNS,
    initial_classifiers,
    one_step_lemma_experiment,
    run_cotraining,
    save_records,
)
from .classifier import evaluate_error
from .theory import (
    AuditGrid,
    BoundInputs,
    GammaInputs,
    gamma,
    generalization_bound,
    monotonicity_audit,
    save_audit,
    simulate_recursion,
)

log = logging.getLogger("cotrainlab")

AUTO_D_EFF_STANDALONE = 10.0


@dataclass(frozen=True)
class BoundSettings:
    """Bound-calculator overrides; d_eff = 0 means derive it from context."""

    c1: float = 1.0
    c2: float = 1.0
    delta: float = 0.05
    d_eff: float = 0.0

    def __post_init__(self) -> None:
        if not self.c1 > 0:
            raise ConfigError(f"c1 must be > 0, got {self.c1}")
        if not self.c2 > 0:
            raise ConfigError(f"c2 must be > 0, got {self.c2}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.d_eff < 0:
            raise ConfigError(f"d_eff must be >= 0 (0 = automatic), got {self.d_eff}")


@dataclass(frozen=True)
class FigureSettings:
    fig1_lambdas: tuple[float, ...] = tuple(round(0.1 * k, 1) for k in range(1, 10))
    fig1_rounds: int = 20
    fig1_c_min: float = 0.02
    fig1_eps0: float = 0.5
    fig2_n_unlabeled: tuple[int, ...] = field(default_factory=lambda: tuple(range(0, 10001, 100)))
    fig2_n_labeled: int = 100
    fig2_empirical_risk: float = 0.1
    fig2_disagreement: float = 0.1
    fig2_indep: float = 0.9
    fig3_frac: float = 0.5
    fig3_grid_points: int = 11

    def __post_init__(self) -> None:
        object.__setattr__(self, "fig1_lambdas", tuple(float(v) for v in self.fig1_lambdas))
        object.__setattr__(self, "fig2_n_unlabeled", tuple(int(v) for v in self.fig2_n_unlabeled))
        if self.fig3_grid_points < 2:
            raise ConfigError(f"fig3_grid_points must be >= 2, got {self.fig3_grid_points}")


@dataclass(frozen=True)
class AuditSettings:
    lemma_handicap: int = 5
    delta0: float = 0.02

    def __post_init__(self) -> None:
        if self.lemma_handicap < 1:
            raise ConfigError(f"lemma_handicap must be >= 1, got {self.lemma_handicap}")
        if not 0.0 < self.delta0 < 0.5:
            raise ConfigError(f"delta0 must lie in (0, 0.5), got {self.delta0}")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[Any, ...]

    def __post_init__(self) -> None:
        if len(self.values) == 0:
            raise ConfigError("sweep values must be non-empty")


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorConfig
    cotrain: CoTrainConfig
    bound: BoundSettings
    figures: FigureSettings
    audit: AuditSettings
    sweep: SweepSpec | None
    seeds: tuple[int, ...]
    output_dir: str | None

    def __post_init__(self) -> None:
        if len(self.seeds) == 0:
            raise ConfigError("seeds must be non-empty")


def _build_section(cls, raw: dict, context: str):
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{context}: unknown key {key!r} (known keys: {sorted(known)})")
    try:
        return cls(**raw)
    except ConfigError as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate the experiment TOML; errors carry file and section context."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML syntax error: {exc}") from exc

    known_top = {"generator", "cotrain", "bound", "figures", "audit", "sweep", "seeds", "output_dir"}
    for key in raw:
        if key not in known_top:
            raise ConfigError(f"{path}: unknown top-level key {key!r}")

    gen = _build_section(GeneratorConfig, raw.get("generator", {}), f"{path}: [generator]")
    cot_raw = dict(raw.get("cotrain", {}))
    train_raw = cot_raw.pop("train", {})
    train_cfg = _build_section(TrainConfig, train_raw, f"{path}: [cotrain.train]")
    cot_raw["train"] = train_cfg
    cot = _build_section(CoTrainConfig, cot_raw, f"{path}: [cotrain]")
    bound = _build_section(BoundSettings, raw.get("bound", {}), f"{path}: [bound]")
    figures_raw = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.get("figures", {}).items()}
    figs = _build_section(FigureSettings, figures_raw, f"{path}: [figures]")
    audit = _build_section(AuditSettings, raw.get("audit", {}), f"{path}: [audit]")

    sweep = None
    if "sweep" in raw:
        sweep_raw = dict(raw["sweep"])
        vals = sweep_raw.get("values")
        if isinstance(vals, list):
            sweep_raw["values"] = tuple(vals)
        sweep = _build_section(SweepSpec, sweep_raw, f"{path}: [sweep]")
        _resolve_sweep_target(sweep.parameter, path)

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
        raise ConfigError(f"{path}: seeds must be a list of integers")
    return ExperimentConfig(
        generator=gen,
        cotrain=cot,
        bound=bound,
        figures=figs,
        audit=audit,
        sweep=sweep,
        seeds=tuple(seeds),
        output_dir=raw.get("output_dir"),
    )


_SWEEP_ROOTS = {"generator": GeneratorConfig, "cotrain": CoTrainConfig, "bound": BoundSettings}


def _resolve_sweep_target(parameter: str, context: str) -> None:
    parts = parameter.split(".")
    if parts[0] not in _SWEEP_ROOTS:
        raise ConfigError(f"{context}: sweep parameter {parameter!r} must start with one of {sorted(_SWEEP_ROOTS)}")
    cls = _SWEEP_ROOTS[parts[0]]
    for name in parts[1:-1]:
        fld = next((f for f in fields(cls) if f.name == name), None)
        if fld is None:
            raise ConfigError(f"{context}: sweep parameter {parameter!r} names unknown field {name!r}")
        cls = fld.type if isinstance(fld.type, type) else {"TrainConfig": TrainConfig}.get(str(fld.type).split(".")[-1])
        if cls is None:
            raise ConfigError(f"{context}: sweep parameter {parameter!r} cannot descend into {name!r}")
    leaf = parts[-1]
    if leaf not in {f.name for f in fields(cls)}:
        raise ConfigError(f"{context}: sweep parameter {parameter!r} names unknown field {leaf!r}")


def _set_param(cfg: ExperimentConfig, parameter: str, value: Any) -> ExperimentConfig:
    parts = parameter.split(".")
    root = getattr(cfg, parts[0])
    if len(parts) == 2:
        new_root = replace(root, **{parts[1]: value})
    elif len(parts) == 3:
        mid = getattr(root, parts[1])
        new_root = replace(root, **{parts[1]: replace(mid, **{parts[2]: value})})
    else:
        raise ConfigError(f"sweep parameter {parameter!r} must have 2 or 3 components")
    return replace(cfg, **{parts[0]: new_root})


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _prepare_dataset(gen: GeneratorConfig) -> Dataset:
    ds = generate_dataset(gen)
    if gen.shift_magnitude > 0:
        ds = apply_shift(ds, gen.shift_magnitude, seed=gen.seed)
    return ds


def cmd_generate(cfg: ExperimentConfig, out: Path, seed_offset: int) -> int:
    gen = replace(cfg.generator, seed=cfg.generator.seed + seed_offset)
    ds = _prepare_dataset(gen)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, str(out / "dataset.csv"), str(out / "oracle.csv"))
    stat = conditional_dependence_stat(ds)
    print(f"labeled={len(ds.labeled)} unlabeled={len(ds.unlabeled)} test={len(ds.test)}")
    print(f"conditional_dependence_stat={stat!r} indep_proxy={1.0 - stat!r}")
    log.info("wrote %s and %s", out / "dataset.csv", out / "oracle.csv")
    return 0


def _effective_d_eff(bound: BoundSettings, gen: GeneratorConfig | None) -> float:
    if bound.d_eff > 0:
        return bound.d_eff
    if gen is not None:
        return float(max(gen.dim_view1, gen.dim_view2) + 1)
    return AUTO_D_EFF_STANDALONE


def _run_one_seed(cfg: ExperimentConfig, seed: int, seed_dir: Path) -> list[RoundMetrics]:
    gen = replace(cfg.generator, seed=seed)
    ds = _prepare_dataset(gen)
    cot = replace(cfg.cotrain, seed=seed, train=replace(cfg.cotrain.train, seed=seed))
    clf1, clf2, trajectory, records = run_cotraining(ds, cot, delta0=cfg.audit.delta0)

    indep = 1.0 - conditional_dependence_stat(ds)
    n_l, n_u = gen.n_labeled, gen.n_unlabeled
    frac = n_u / (n_l + n_u) if n_u > 0 else 0.0
    d_eff = _effective_d_eff(cfg.bound, gen)

    rows = []
    last_d = 0.0
    for m in trajectory:
        d_round = m.disagreement if math.isfinite(m.disagreement) else last_d
        last_d = d_round
        if n_l > d_eff:
            rep = generalization_bound(
                BoundInputs(
                    empirical_risk=m.err_labeled,
                    n_labeled=n_l,
                    n_unlabeled=n_u,
                    d_eff=d_eff,
                    delta=cfg.bound.delta,
                    c1=cfg.bound.c1,
                    c2=cfg.bound.c2,
                    gamma_inputs=GammaInputs(frac, d_round, max(0.0, min(1.0, indep))),
                )
            )
            gamma_val, bound_val = rep.gamma_term, rep.bound
        else:
            gamma_val, bound_val = math.nan, math.nan
        rows.append([getattr(m, c) for c in TRAJECTORY_COLUMNS] + [m.err_labeled, indep, gamma_val, bound_val])

    _write_csv(
        seed_dir / "trajectory.csv",
        list(TRAJECTORY_COLUMNS) + ["err_labeled", "indep", "gamma", "bound"],
        rows,
    )
    save_records(records, str(seed_dir / "records.csv"))
    save_classifier(clf1, str(seed_dir / "checkpoint_view1.csv"))
    save_classifier(clf2, str(seed_dir / "checkpoint_view2.csv"))
    return trajectory


def _summarize(trajectories: dict[int, list[RoundMetrics]], path: Path) -> None:
    """Median/IQR of err_max per round; shorter runs carry their final value forward."""
    max_len = max(len(t) for t in trajectories.values())
    rows = []
    for k in range(max_len):
        vals = [t[min(k, len(t) - 1)].err_max for t in trajectories.values()]
        rows.append(
            [
                k,
                float(np.median(vals)),
                float(np.percentile(vals, 25)),
                float(np.percentile(vals, 75)),
                len(vals),
            ]
        )
    _write_csv(path, ["round", "err_max_median", "err_max_q1", "err_max_q3", "n_seeds"], rows)


def cmd_cotrain(cfg: ExperimentConfig, out: Path, seed_offset: int) -> int:
    trajectories: dict[int, list[RoundMetrics]] = {}
    for seed in cfg.seeds:
        run_seed = seed + seed_offset
        try:
            trajectories[run_seed] = _run_one_seed(cfg, run_seed, out / f"seed_{run_seed}")
        except Exception as exc:
            raise RuntimeError(f"seed {run_seed}: {exc}") from exc
        log.info("seed %d: %d rounds recorded", run_seed, len(trajectories[run_seed]) - 1)
    _summarize(trajectories, out / "summary.csv")
    med0 = float(np.median([t[0].err_max for t in trajectories.values()]))
    medk = float(np.median([t[-1].err_max for t in trajectories.values()]))
    print(f"seeds={len(cfg.seeds)} median_err_max_round0={med0!r} median_err_max_final={medk!r}")
    return 0


def cmd_figures(cfg: ExperimentConfig, out: Path, seed_offset: int) -> int:
    figs = cfg.figures
    rows1 = []
    for lam in figs.fig1_lambdas:
        for k, eps in enumerate(simulate_recursion(lam, figs.fig1_c_min, figs.fig1_eps0, figs.fig1_rounds)):
            rows1.append([lam, k, eps])
    _write_csv(out / "fig1.csv", ["lambda", "round", "eps_max"], rows1)

    d_eff = cfg.bound.d_eff if cfg.bound.d_eff > 0 else AUTO_D_EFF_STANDALONE
    rows2 = []
    for n_u in figs.fig2_n_unlabeled:
        frac = n_u / (figs.fig2_n_labeled + n_u) if n_u > 0 else 0.0
        rep = generalization_bound(
            BoundInputs(
                empirical_risk=figs.fig2_empirical_risk,
                n_labeled=figs.fig2_n_labeled,
                n_unlabeled=n_u,
                d_eff=d_eff,
                delta=cfg.bound.delta,
                c1=cfg.bound.c1,
                c2=cfg.bound.c2,
                gamma_inputs=GammaInputs(frac, figs.fig2_disagreement, figs.fig2_indep),
            )
        )
        rows2.append([n_u, rep.gamma_term, rep.bound, rep.complexity_term, rep.confidence_term])
    _write_csv(out / "fig2.csv", ["n_unlabeled", "gamma", "bound", "complexity_term", "confidence_term"], rows2)

    grid = [i / (figs.fig3_grid_points - 1) for i in range(figs.fig3_grid_points)]
    rows3 = []
    for d in grid:
        for ind in grid:
            rows3.append([d, ind, gamma(GammaInputs(figs.fig3_frac, d, ind))])
    _write_csv(out / "fig3.csv", ["disagreement", "indep", "gamma"], rows3)
    print(f"wrote fig1.csv fig2.csv fig3.csv under {out}")
    return 0


def cmd_audit(cfg: ExperimentConfig, out: Path, seed_offset: int) -> int:
    d_eff = cfg.bound.d_eff if cfg.bound.d_eff > 0 else AUTO_D_EFF_STANDALONE
    grid = AuditGrid(d_eff=d_eff, delta=cfg.bound.delta, c1=cfg.bound.c1, c2=cfg.bound.c2)
    report = monotonicity_audit(grid)
    out.mkdir(parents=True, exist_ok=True)
    save_audit(report, str(out / "audit.csv"))
    for claim, status in report.claim_status.items():
        print(f"audit {claim}: {status}")

    lemma_rows = []
    quality_rows = []
    threshold = 0.5 - cfg.audit.delta0
    for seed in cfg.seeds:
        run_seed = seed + seed_offset
        gen = replace(cfg.generator, seed=run_seed)
        ds = _prepare_dataset(gen)
        cot = replace(cfg.cotrain, seed=run_seed, train=replace(cfg.cotrain.train, seed=run_seed))
        rep = one_step_lemma_experiment(ds, cot, cfg.audit.lemma_handicap)
        lemma_rows.append(
            [run_seed, rep.eps1_before, rep.eps2, rep.eps1_after, rep.improved, rep.n_pseudo, rep.precondition_violated]
        )
        clf1, clf2 = initial_classifiers(ds, cot)
        e1 = evaluate_error(clf1, ds.test, 1)
        e2 = evaluate_error(clf2, ds.test, 2)
        quality_rows.append([run_seed, e1, e2, threshold, bool(e1 < threshold and e2 < threshold)])

    _write_csv(
        out / "lemma_report.csv",
        ["seed", "eps1_before", "eps2", "eps1_after", "improved", "n_pseudo", "precondition_violated"],
        lemma_rows,
    )
    improved_fraction = float(np.mean([r[4] for r in lemma_rows]))
    _write_csv(
        out / "lemma_summary.csv",
        ["n_seeds", "improved_fraction", "mean_eps1_before", "mean_eps1_after"],
        [
            [
                len(lemma_rows),
                improved_fraction,
                float(np.mean([r[1] for r in lemma_rows])),
                float(np.mean([r[3] for r in lemma_rows])),
            ]
        ],
    )
    _write_csv(
        out / "initial_quality.csv",
        ["seed", "err_view1", "err_view2", "threshold", "ok"],
        quality_rows,
    )
    print(f"lemma improved_fraction={improved_fraction!r} over {len(lemma_rows)} seeds")
    if not report.passed:
        log.error("monotonicity audit failed: %d sign violations", report.violations)
        return 1
    return 0


def cmd_sweep(cfg: ExperimentConfig, out: Path, seed_offset: int) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep command requires a [sweep] section in the config")
    for value in cfg.sweep.values:
        sub_cfg = _set_param(cfg, cfg.sweep.parameter, value)
        sub_out = out / f"{cfg.sweep.parameter}={value}"
        log.info("sweep cell %s=%r", cfg.sweep.parameter, value)
        cmd_cotrain(sub_cfg, sub_out, seed_offset)
    print(f"swept {cfg.sweep.parameter} over {len(cfg.sweep.values)} values under {out}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "generate": cmd_generate,
    "cotrain": cmd_cotrain,
    "figures": cmd_figures,
    "audit": cmd_audit,
    "sweep": cmd_sweep,
}


def _setup_logging() -> None:
    level_name = os.environ.get("COTRAIN_LOG", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        level_name = "info"
    logging.basicConfig(level=levels[level_name], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the experiment TOML file")
    common.add_argument("--out", default="./out", help="output directory (default ./out)")
    common.add_argument("--seed-offset", type=int, default=0, help="added to every seed the command uses")

    parser = argparse.ArgumentParser(prog="cotrainlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write dataset.csv + oracle.csv")
    sub.add_parser("cotrain", parents=[common], help="run the loop for every seed; write trajectories and summary")
    sub.add_parser("figures", parents=[common], help="write fig1/fig2/fig3 CSV grids")
    sub.add_parser("audit", parents=[common], help="run monotonicity, one-step and initial-quality audits")
    sub.add_parser("sweep", parents=[common], help="fan the cotrain command out over a parameter axis")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out if args.out != "./out" or cfg.output_dir is None else cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out, args.seed_offset)
    except ConfigError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # propagate runtime failures as a nonzero exit
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
