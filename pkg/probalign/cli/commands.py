import json
import logging
import sys
from pathlib import Path
from typing import List, Sequence

import numpy as np

from ..config import resolve_workers
from ..exceptions import UsageError
from ..models import CostFunction, CostVariant, PetriNet, ProbEventLog
from ..schemas import Algorithm, NoiseConfig, ReportRow, RunConfig
from ..services.alignment_service import align_log, fitness, model_path_cost
from ..services.builder_service import ensure_final_marking
from ..services.evaluation_service import added_sequences, fitness_profile, recovery_experiment
from ..services.experiment_service import ExperimentRunner, clamp_epsilon, relabel
from ..services.log_io_service import (
    read_det_log_json,
    read_ground_truth,
    read_prob_log_path,
    write_det_log_json,
    write_ground_truth,
    write_prob_log_csv,
    write_prob_log_json,
)
from ..services.noise_service import build_suite, inject_log, label_log
from ..services.pnml_service import read_pnml, write_pnml
from ..services.problog_service import argmax_log, lift_log
from ..services.report_service import (
    BENCH_CASE_COLUMNS,
    BENCH_COLUMNS,
    FITNESS_COLUMNS,
    RECOVERY_COLUMNS,
    ReportService,
    case_document,
)

logger = logging.getLogger(__name__)


def parse_grid(spec: str) -> List[float]:
    """`start:stop:step` (stop included) or a comma-separated list."""
    try:
        if ":" in spec:
            start, stop, step = (float(part) for part in spec.split(":"))
            if step <= 0:
                raise UsageError(f"grid step must be > 0, got {step}")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(max(count, 0))]
        return [float(part) for part in spec.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"cannot parse grid {spec!r}")


def _stem(path: Path) -> str:
    name = path.name
    for suffix in (".problog.json", ".problog.csv", ".detlog.json", ".json", ".csv"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return name


def load_model(path: Path) -> PetriNet:
    return ensure_final_marking(read_pnml(Path(path).read_bytes()))


def load_log(path: Path, deterministic: bool = False, renormalize: bool = False) -> ProbEventLog:
    if deterministic:
        traces, _ = read_det_log_json(Path(path).read_bytes())
        return lift_log(traces)
    return read_prob_log_path(Path(path), renormalize=renormalize)


def _run_config(args, **overrides) -> RunConfig:
    values = dict(
        workers=resolve_workers(args.workers),
        out_dir=Path(args.out),
        max_expansions=args.max_expansions,
        timeout=args.timeout,
        timings=args.timings,
        cost=CostVariant.STANDARD,
    )
    values.update(overrides)
    return RunConfig(**values)


def _runner(config: RunConfig, model: PetriNet) -> ExperimentRunner:
    return ExperimentRunner(
        model,
        workers=config.workers,
        max_expansions=config.max_expansions,
        timeout=config.timeout,
        timings=config.timings,
    )


def cmd_align(args) -> int:
    """Optimal alignment of every case of a log against a model."""
    cost = CostVariant(args.cost)
    config = _run_config(
        args, model_path=Path(args.model), log_path=Path(args.log), cost=cost, epsilon=args.epsilon
    )
    model = load_model(config.model_path)
    log = load_log(config.log_path, args.deterministic, args.renormalize)
    traces = argmax_log(log) if args.argmax else log.traces
    cost_function = CostFunction.standard() if cost is CostVariant.STANDARD else CostFunction.weighted(config.epsilon)

    results = align_log(
        model,
        traces,
        cost_function,
        workers=config.workers,
        max_expansions=config.max_expansions,
        timeout=config.timeout,
    )

    path_cost = model_path_cost(model, config.max_expansions) if cost is CostVariant.STANDARD else None
    documents = []
    for result, trace in zip(results, traces):
        fit = None
        if result.ok and path_cost is not None:
            fit = fitness(result.alignment, model, len(trace), path_cost)
        documents.append(case_document(result, config.timings, fit))
        if result.ok:
            print(f"case {result.case_id}  cost={result.alignment.total_cost:.6f}")
            print(result.alignment.render())

    ReportService(str(config.out_dir)).save_alignments(_stem(config.log_path), documents)

    failed = [r for r in results if not r.ok]
    if failed:
        for r in failed:
            print(json.dumps({"case_id": r.case_id, **r.error}, ensure_ascii=False), file=sys.stderr)
        return 1
    return 0


def cmd_gen(args) -> int:
    """Noisy probabilistic log plus ground-truth sidecar from a deterministic log.

    With --model, also profiles the Standard fitness of the original traces and of
    the sequences of added activities.
    """
    config = _run_config(args, log_path=Path(args.log), p_h=args.p_h, seed=args.seed, t_d=args.t_d)
    traces, universe = read_det_log_json(config.log_path.read_bytes())
    model = load_model(Path(args.model)) if args.model else None
    if universe is None:
        universe = sorted({a for t in traces for a in t.activities})
        if model is not None:
            universe = sorted(set(universe) | model.visible_labels)

    log, raw = inject_log(traces, NoiseConfig(p_h=config.p_h, seed=config.seed, activity_universe=universe))
    truths = label_log(log.traces, raw, config.t_d)

    reports = ReportService(str(config.out_dir))
    name = _stem(config.log_path)
    if args.format == "csv":
        for case_id, data in write_prob_log_csv(log):
            reports.save_bytes(f"{name}.problog/{case_id}.problog.csv", data)
    else:
        reports.save_bytes(f"{name}.problog.json", write_prob_log_json(log))
    reports.save_bytes(f"{name}.gt.json", write_ground_truth(truths, config.t_d, config.p_h, config.seed))

    if model is not None:
        profiles = [
            {"sequence": "original", **fitness_profile(model, traces, config.workers, config.max_expansions)},
            {"sequence": "added", **fitness_profile(model, added_sequences(traces, raw), config.workers, config.max_expansions)},
        ]
        reports.save_table(f"{name}.fitness.csv", profiles, FITNESS_COLUMNS)
        for row in profiles:
            print(f"{row['sequence']:<9} fitness={row['mean']:.4f} ± {row['sd']:.4f} over {row['cases']} cases")
    return 0


def cmd_detect(args) -> int:
    """Deviation detection scored against a ground-truth sidecar."""
    truths = read_ground_truth(Path(args.gt).read_bytes())
    if args.t_d is not None:
        truths = relabel(truths, args.t_d)
        t_d = args.t_d
    else:
        t_d = truths[0].t_d if truths else RunConfig.model_fields["t_d"].default
    epsilon = args.epsilon if args.epsilon is not None else clamp_epsilon(t_d)
    config = _run_config(
        args, model_path=Path(args.model), log_path=Path(args.log), cost=CostVariant.WEIGHTED, epsilon=epsilon
    )
    model = load_model(config.model_path)
    log = load_log(config.log_path, renormalize=args.renormalize)
    runner = _runner(config, model)

    algorithms = list(Algorithm) if args.algorithm == "all" else [Algorithm(args.algorithm)]
    rows = []
    for algorithm in algorithms:
        report, runtime = runner.detect(log, truths, algorithm, config.epsilon)
        rows.append(runner.report_row(config.epsilon, t_d, algorithm, report, runtime))
    ReportService(str(config.out_dir)).save_report(args.name, rows)
    _print_rows(rows)
    return 0


def cmd_sweep(args) -> int:
    """ε or T_d sweep over all three algorithms."""
    if (args.epsilon_grid is None) == (args.t_d_grid is None):
        raise UsageError("give exactly one of --epsilon-grid and --t-d-grid")
    truths = read_ground_truth(Path(args.gt).read_bytes())
    config = _run_config(args, model_path=Path(args.model), log_path=Path(args.log), seed=args.seed)
    model = load_model(config.model_path)
    log = load_log(config.log_path, renormalize=args.renormalize)
    runner = _runner(config, model)

    if args.epsilon_grid is not None:
        t_d = args.t_d if args.t_d is not None else (truths[0].t_d if truths else None)
        if args.t_d is not None:
            truths = relabel(truths, args.t_d)
        rows = runner.sweep_epsilon(
            log, truths, parse_grid(args.epsilon_grid), t_d, dev_fraction=args.dev_fraction, seed=config.seed
        )
        name, x = f"{args.name}-epsilon", "epsilon"
    else:
        rows = runner.sweep_t_d(log, truths, parse_grid(args.t_d_grid))
        name, x = f"{args.name}-t_d", "t_d"

    ReportService(str(config.out_dir)).save_report(name, rows, plot_x=x if args.plot else None)
    _print_rows(rows)
    return 0


def cmd_bench(args) -> int:
    """Search effort of standard vs weighted alignment per log."""
    config = _run_config(args, model_path=Path(args.model), cost=CostVariant.WEIGHTED, epsilon=args.epsilon)
    model = load_model(config.model_path)
    logs = {}
    for path in args.logs:
        path = Path(path)
        if not path.exists():
            raise UsageError(f"input file not found: {path}", {"path": str(path)})
        logs[_stem(path)] = load_log(path)
    summary, per_case = _runner(config, model).bench(logs, config.epsilon)

    reports = ReportService(str(config.out_dir))
    reports.save_table(f"{args.name}.bench.csv", summary, BENCH_COLUMNS)
    reports.save_table(f"{args.name}.bench-cases.csv", per_case, BENCH_CASE_COLUMNS)
    for row in summary:
        print(
            f"{row['log']:<20} {row['variant']:<9} cases={row['cases']} failed={row['failed']} "
            f"events={row['events_min']}..{row['events_max']} expanded_avg={row['expanded_avg']:.1f} "
            f"time={row['time_total_s']:.3f}s"
        )
    return 0


def cmd_recover(args) -> int:
    """Trace recovery accuracy of ProbCost vs Argmax across P_h."""
    config = _run_config(
        args, model_path=Path(args.model), log_path=Path(args.log), cost=CostVariant.WEIGHTED,
        epsilon=args.epsilon, seed=args.seed,
    )
    model = load_model(config.model_path)
    traces, universe = read_det_log_json(config.log_path.read_bytes())
    rows = recovery_experiment(
        model,
        traces,
        parse_grid(args.p_h_grid),
        config.epsilon,
        config.seed,
        activity_universe=universe,
        workers=config.workers,
    )
    table = [{"epsilon": config.epsilon, **row} for row in rows]
    ReportService(str(config.out_dir)).save_table(f"{args.name}.recovery.csv", table, RECOVERY_COLUMNS)
    for row in table:
        print(f"P_h={row['p_h']:.2f}  probcost={row['probcost']:.4f}  argmax={row['argmax']:.4f}")
    return 0


def cmd_synth(args) -> int:
    """Seeded model and conforming deterministic log for the experiments."""
    config = _run_config(args, seed=args.seed)
    suite = build_suite(args.activities, args.traces, args.extra_activities, config.seed)
    reports = ReportService(str(config.out_dir))
    reports.save_bytes(f"{args.name}.pnml", write_pnml(suite.model))
    reports.save_bytes(f"{args.name}.detlog.json", write_det_log_json(suite.traces, suite.activity_universe))
    return 0


def _print_rows(rows: Sequence[ReportRow]) -> None:
    for r in rows:
        eps = f"{r.epsilon:.4f}" if r.epsilon is not None else "-"
        t_d = f"{r.t_d:.4f}" if r.t_d is not None else "-"
        print(
            f"eps={eps} t_d={t_d} {r.algorithm:<10} acc={r.accuracy:.4f} f1={r.f1:.4f} "
            f"sens={r.sensitivity:.4f} spec={r.specificity:.4f} g_mean={r.g_mean:.4f}"
        )
