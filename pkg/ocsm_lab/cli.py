"""
Command-line entry point: run, sweep and verify

    python -m ocsm_lab run --config configs/pobga_minimal.json --out results
    python -m ocsm_lab sweep --config configs/pobga_sweep.json --seeds 0,1,2
    python -m ocsm_lab verify --config configs/verify_default.yaml
"""
import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from .algorithms import InvariantViolation, pobga_regret_bound
from .core.config import get_settings
from .core.infeasible_projection import OracleBudgetError
from .decentralized import dpobga_regret_bound
from .experiment_config import ConfigError, ExperimentConfig, dump_config, load_config
from .harness import build_decision_set, run_experiment, seed_statistics, slope_estimate
from .records import RunRecord, write_csv, write_json
from .verification import render_report, run_suites

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_ERROR = 2


def _verdicts(config: ExperimentConfig, record: RunRecord) -> Dict[str, bool]:
    """Checks of one record: lo_steps ≤ T, one exchange per block for dpobga, comparator dominance."""
    verdicts: Dict[str, bool] = {}
    if config.algorithm in ("pobga", "dpobga"):
        verdicts["lo_steps_within_T"] = record.counters.lo_steps <= record.T
    if config.algorithm == "dpobga":
        verdicts["comms_equal_blocks"] = record.counters.comms == record.T // record.K
    if "comparator_dominance" in record.extras:
        verdicts["comparator_dominance"] = bool(record.extras["comparator_dominance"])
    return verdicts


def _regret_bound(config: ExperimentConfig, record: RunRecord, R: float, N: int) -> Optional[float]:
    G = record.extras.get("G")
    if config.params.mode != "theorem" or not G:
        return None
    if config.algorithm == "pobga":
        return pobga_regret_bound(record.T, R, G)
    if config.algorithm == "dpobga":
        return dpobga_regret_bound(record.T, R, G, record.extras.get("L", 0.0), N, record.extras["beta"])
    return None


def _execute(
    config: ExperimentConfig,
    out_dir: Path,
    threads: int,
    progress: bool
) -> Tuple[List[Dict[str, Any]], bool, Dict[int, List[float]]]:
    """
    Run every (horizon, seed) pair, writing one CSV per record.

    Independent runs share a pool of `threads` workers; a single run hands the
    workers to the decentralized learner instead. Results are consumed in job
    order and every file is written from the calling thread.
    """
    R = build_decision_set(config.decision_set).radius
    N = config.network.nodes if config.network else 1
    jobs = [(T, seed) for T in config.horizons for seed in config.seeds]
    summaries: List[Dict[str, Any]] = []
    regrets: Dict[int, List[float]] = {T: [] for T in config.horizons}
    all_ok = True

    node_threads = threads if len(jobs) == 1 else 1
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 and len(jobs) > 1 else None
    if executor is None:
        results = (run_experiment(config, T, seed, node_threads) for T, seed in jobs)
    else:
        results = executor.map(lambda job: run_experiment(config, job[0], job[1], node_threads), jobs)

    try:
        progress_bar = tqdm(zip(jobs, results), total=len(jobs), desc=f"{config.algorithm} runs", disable=not progress)
        for (T, _), records in progress_bar:
            all_ok = _collect(config, records, out_dir, R, N, summaries, regrets[T]) and all_ok
    finally:
        if executor is not None:
            executor.shutdown(cancel_futures=True)
    return summaries, all_ok, regrets


def _collect(
    config: ExperimentConfig,
    records: List[RunRecord],
    out_dir: Path,
    R: float,
    N: int,
    summaries: List[Dict[str, Any]],
    regrets: List[float]
) -> bool:
    """Write the CSVs of one run, append its summaries and its node-averaged regret."""
    all_ok = True
    run_regrets = []
    for record in records:
        if config.output.csv:
            write_csv([record], out_dir / f"{record.run_id}.csv")
        verdicts = _verdicts(config, record)
        summary = record.summary()
        summary["verdicts"] = verdicts
        summary["regret_bound"] = _regret_bound(config, record, R, N)
        summaries.append(summary)
        for name, ok in verdicts.items():
            if not ok:
                all_ok = False
                logger.error(f"❌ {record.run_id}: {name} failed ({record.counters.as_dict()})")
        if record.alpha_regret is not None:
            run_regrets.append(float(record.alpha_regret[-1]))
    if run_regrets:
        regrets.append(sum(run_regrets) / len(run_regrets))
    first = records[0]
    logger.info(
        f"✅ {first.algorithm} T={first.T} seed={first.seed}: lo_steps={first.counters.lo_steps}, "
        f"comms={first.counters.comms}"
    )
    return all_ok


def cmd_run(config: ExperimentConfig, out_dir: Path, threads: int = 1) -> int:
    """
    Run the configured experiment and write CSVs plus a JSON summary.

    Args:
        config: Validated configuration
        out_dir: Output directory
        threads: Worker threads for the decentralized learner

    Returns:
        Exit status (nonzero when a budget verdict fails)
    """
    summaries, all_ok, _ = _execute(config, out_dir, threads, progress=False)
    write_json({"config": dump_config(config), "runs": summaries}, out_dir / config.output.summary)
    if all_ok:
        logger.info(f"✅ All budget verdicts passed for {len(summaries)} records")
        return EXIT_OK
    return EXIT_VIOLATION


def cmd_sweep(config: ExperimentConfig, out_dir: Path, threads: int = 1) -> int:
    """Run every horizon × seed and report seed statistics and the log-log regret slope."""
    summaries, all_ok, regrets = _execute(config, out_dir, threads, progress=True)

    table = []
    for T in config.horizons:
        if regrets[T]:
            stats = seed_statistics(regrets[T])
            table.append({"T": T, **stats, "per_T": stats["mean"] / T})
            logger.info(f"📊 T={T:>6}  mean regret={stats['mean']:.6g}  std={stats['std']:.3g}  regret/T={stats['mean'] / T:.4g}")

    slope = None
    if len(table) >= 3:
        slope = slope_estimate([(row["T"], row["mean"]) for row in table])
        logger.info(f"📊 log-log regret slope: {slope:.4f}")
    elif table:
        logger.warning("⚠️ Fewer than 3 horizons with regret; no slope estimate")

    write_json(
        {"config": dump_config(config), "runs": summaries, "sweep": table, "slope": slope},
        out_dir / config.output.summary,
    )
    return EXIT_OK if all_ok else EXIT_VIOLATION


def cmd_verify(config: ExperimentConfig, out_dir: Path) -> int:
    """Run the selected property suites and write the per-property report."""
    results = run_suites(config.verify, config.seeds[0])
    report = render_report(results)
    print(report, end="")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "verify_report.txt").write_text(report, encoding="utf-8")
    write_json(
        {"seed": config.seeds[0], "properties": [r.as_dict() for r in results]},
        out_dir / "verify_report.json",
    )
    return EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATION


def _parse_seeds(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be a comma-separated list of integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocsm_lab",
        description="Online continuous DR-submodular maximization experiments"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("run", "Run one experiment and write CSV + JSON summary"),
        ("sweep", "Run every horizon and seed, then estimate the regret slope"),
        ("verify", "Run the property suites"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", type=Path, required=True, help="Path to a JSON or YAML config file")
        sub.add_argument("--out", type=Path, default=None, help="Output directory (default: config output.dir or OCSM_LAB_OUT)")
        sub.add_argument("--seeds", type=_parse_seeds, default=None, help="Comma-separated master seeds, overriding the config")
        sub.add_argument("--threads", type=int, default=None, help="Worker threads (default: OCSM_LAB_THREADS or 1)")
        sub.add_argument("--verbose", action="store_true", help="Debug logging and tracebacks")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, settings.log_level, logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        config = load_config(args.config)
        if args.seeds:
            config = config.model_copy(update={"seeds": args.seeds})
        threads = settings.threads if args.threads is None else args.threads
        if threads < 1:
            raise ValueError(f"--threads must be at least 1, got {threads}")
        out_dir = Path(args.out or config.output.dir or settings.output_dir)

        if args.command == "run":
            return cmd_run(config, out_dir, threads)
        if args.command == "sweep":
            return cmd_sweep(config, out_dir, threads)
        return cmd_verify(config, out_dir)
    except (InvariantViolation, OracleBudgetError) as e:
        if args.verbose:
            logger.exception("Invariant check failed")
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_VIOLATION
    except (ConfigError, ValueError) as e:
        if args.verbose:
            logger.exception("Invalid input")
        logger.error(f"❌ {e}")
        return EXIT_ERROR
