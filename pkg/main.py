"""Decision Eval - command-line entry point

Subcommands: fixture, ingest, catalog, eval-forward, eval-inverse, fit, report
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, Any, List

# Environment variables must be loaded before the settings are read
from dotenv import load_dotenv
load_dotenv()

from rich.console import Console
from rich.table import Table

from src.core.config import Settings, settings as default_settings, build_experiment_config, ExperimentKind
from src.core.exceptions import ToolkitException

logger = logging.getLogger(__name__)
console = Console()


def setup_logging(app_settings: Settings, debug: bool = False) -> None:
    log_file = Path(app_settings.app.logging.file)
    log_file.parent.mkdir(parents=True, exist_ok=True)

    level = logging.DEBUG if debug else getattr(logging, app_settings.app.logging.level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(log_file, encoding="utf-8"),
            logging.StreamHandler(sys.stdout),
        ],
    )

    # Third-party clients are noisy at INFO
    logging.getLogger("httpx").setLevel(logging.WARNING)
    logging.getLogger("httpcore").setLevel(logging.WARNING)
    logging.getLogger("openai").setLevel(logging.WARNING)


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    keys = ["agent", "task", "seed", "out", "samples", "temperature", "persona", "style", "dataset", "limit"]
    return {k: getattr(args, k, None) for k in keys}


def cmd_fixture(args, app_settings: Settings) -> None:
    from src.choice.dataset import synthetic_choices13k, filter_experiment_subset

    out = Path(args.out or "data/choices13k_fixture.csv")
    dataset, csv_text = synthetic_choices13k(n_problems=args.size or app_settings.forward.fixture_size, seed=args.seed or 0)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(csv_text, encoding="utf-8")
    console.print(f"Wrote {len(dataset)} problems ({len(filter_experiment_subset(dataset))} after filtering) to {out}")


def cmd_ingest(args, app_settings: Settings) -> None:
    from src.choice.dataset import load_choices13k, filter_experiment_subset, write_dataset_jsonl

    source = args.dataset or app_settings.forward.dataset_path
    if not source:
        raise ToolkitException("No dataset given", "pass --dataset")
    dataset = load_choices13k(source)
    subset = filter_experiment_subset(dataset)
    out = Path(args.out or "data")
    write_dataset_jsonl(dataset, out / "choices_all.jsonl")
    write_dataset_jsonl(subset, out / "choices_filtered.jsonl")
    console.print(f"Loaded {len(dataset)} problems; {len(subset)} in the experiment subset; written to {out}")


def cmd_catalog(args, app_settings: Settings) -> None:
    from src.inverse.catalog import catalog_47, export_catalog

    decisions = catalog_47()
    path = export_catalog(decisions, Path(args.out or "catalog.csv"))

    table = Table(title=f"Observed decisions ({len(decisions)})")
    table.add_column("id", style="bold")
    table.add_column("chosen")
    table.add_column("other options")
    for d in decisions:
        others = [o for k, o in enumerate(d.options) if k != d.chosen]
        table.add_row(d.id, "".join(i.value for i in d.chosen_option), " | ".join("".join(i.value for i in o) for o in others))
    console.print(table)
    console.print(f"Catalog written to {path}")


def cmd_eval_forward(args, app_settings: Settings) -> None:
    from src.harness.forward import run_forward, run_temperature_sweep
    from src.harness.reporting import forward_table, record_label, render_table

    kind = ExperimentKind.ABLATION if args.sweep else ExperimentKind.FORWARD_TASK_1
    config = build_experiment_config(app_settings, kind, overrides_from_args(args))

    if args.sweep:
        rows = run_temperature_sweep(config)
        table = Table(title="Temperature sweep")
        for column in ("temperature", "spearman vs humans", "spearman vs max-EV"):
            table.add_column(column, justify="right")
        for row in rows:
            table.add_row(
                f"{row['temperature']:g}",
                "-" if row["spearman_humans"] is None else f"{row['spearman_humans']:.4f}",
                "-" if row["spearman_max_ev"] is None else f"{row['spearman_max_ev']:.4f}",
            )
        console.print(table)
        return

    record = run_forward(config)
    records = {record_label(record): record}
    render_table(forward_table(records, "humans"), "Agent vs human choices")
    render_table(forward_table(records, "max-ev"), "Agent vs maximum expected value")
    console.print(f"Run record: {Path(config.out_dir) / 'run_record.json'}")


def cmd_eval_inverse(args, app_settings: Settings) -> None:
    from src.harness.inverse import run_inverse

    kind = ExperimentKind.INVERSE_NEGATIVE if args.context == "negative" else ExperimentKind.INVERSE_POSITIVE
    config = build_experiment_config(app_settings, kind, overrides_from_args(args))
    record = run_inverse(config)

    table = Table(title=f"Inverse ranking ({record.derived['context']}, {record.derived['style']})")
    table.add_column("rank", justify="right")
    table.add_column("decision", style="bold")
    table.add_column("mean wins", justify="right")
    ordered = sorted(zip(record.item_ids, record.derived["win_scores"], record.derived["ranks"]), key=lambda t: t[2])
    for decision_id, wins, rank in ordered:
        table.add_row(f"{rank:g}", decision_id, f"{wins:.2f}")
    console.print(table)
    console.print(f"{record.parsed}/{record.issued} completions parsed")


def cmd_fit(args, app_settings: Settings) -> None:
    from src.harness.fit import run_fit
    from src.harness.reporting import fit_table, render_table, write_table

    config = build_experiment_config(app_settings, ExperimentKind.FIT, overrides_from_args(args))
    rows = run_fit(config, record_path=args.record)
    frame = fit_table(rows)
    write_table(frame, Path(config.out_dir) / "fits.csv")
    render_table(frame, "Fitted behavioral models")


def cmd_report(args, app_settings: Settings) -> None:
    from src.harness.records import RunRecord
    from src.harness.reporting import (
        forward_table,
        forward_heatmap,
        inverse_table,
        human_anchor,
        rational_matrix,
        record_label,
        render_table,
        write_table,
        inverse_footnote,
    )
    from src.harness.common import load_dataset
    from src.inverse.models import ScoreKind, PriorSpec, Context
    from src.inverse.scoring import score_catalog, load_human_ranking

    out = Path(args.out or Path(app_settings.app.output_dir) / "report")
    records = [RunRecord.load(Path(p)) for p in args.records]
    forward = {record_label(r): r for r in records if "prop_a" in r.derived}
    inverse = {record_label(r): r for r in records if "win_scores" in r.derived}

    if forward:
        for against, title in (("humans", "Agent vs human choices"), ("max-ev", "Agent vs maximum expected value")):
            frame = forward_table(forward, against)
            write_table(frame, out / f"forward_vs_{against}.csv")
            render_table(frame, title)
        heatmap = forward_heatmap(forward)
        write_table(heatmap, out / "forward_heatmap.csv")
        render_table(heatmap, "Correlations between agents")

    dataset_path = args.dataset or app_settings.forward.dataset_path
    if dataset_path:
        anchor = human_anchor(load_dataset(dataset_path))
        console.print(f"Humans vs max-EV Spearman: {anchor:.4f}")

    if inverse:
        inverse_settings = app_settings.inverse
        contexts = sorted({r.derived["context"] for r in inverse.values()})
        rational: Dict[str, Dict[ScoreKind, Dict[str, float]]] = {}
        for context in contexts:
            prior = PriorSpec(Context(context))
            rational[context] = {
                kind: {
                    s.decision_id: s.value
                    for s in score_catalog(prior, kind, method="grid", grid_points_per_dim=inverse_settings.grid_points)
                }
                for kind in ScoreKind
            }
            matrix = rational_matrix(rational[context])
            write_table(matrix, out / f"rational_{context}.csv")
            render_table(matrix, f"Rational-model rankings ({context})")

        human_ranks = {}
        for context, path in (("positive", args.human_positive), ("negative", args.human_negative)):
            if path:
                human_ranks[context] = load_human_ranking(Path(path))
        frame = inverse_table(inverse, rational, human_ranks)
        write_table(frame, out / "inverse.csv")
        render_table(frame, "Inverse decision rankings", footnote=inverse_footnote())


COMMANDS = {
    "fixture": cmd_fixture,
    "ingest": cmd_ingest,
    "catalog": cmd_catalog,
    "eval-forward": cmd_eval_forward,
    "eval-inverse": cmd_eval_inverse,
    "fit": cmd_fit,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--debug", action="store_true", help="Enable DEBUG logging")
    common.add_argument("--out", help="Output directory (or file for fixture/catalog)")
    common.add_argument("--seed", type=int, help="Seed for shuffling, synthetic agents and fitting")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--agent", help="openai, http, synthetic, or a synthetic kind such as max-ev")
    run.add_argument("--temperature", type=float, help="Sampling temperature")
    run.add_argument("--style", choices=["zero-shot", "chain-of-thought"], help="Prompt style")
    run.add_argument("--samples", type=int, help="Inverse samples (defaults to 43 positive / 42 negative)")
    run.add_argument("--dataset", help="choices13k csv or canonical jsonl")
    run.add_argument("--limit", type=int, help="Only use the first N filtered problems")

    parser = argparse.ArgumentParser(description="Decision-theory evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", parents=[common], help="Write the synthetic choices13k fixture")
    p.add_argument("--size", type=int, help="Number of problems")

    p = sub.add_parser("ingest", parents=[common], help="Load and filter a choices13k file")
    p.add_argument("--dataset", help="choices13k csv")

    sub.add_parser("catalog", parents=[common], help="Dump the observed-decision catalog")

    p = sub.add_parser("eval-forward", parents=[common, run], help="Run a forward task")
    p.add_argument("--task", help="1, 2, 3 or the task name")
    p.add_argument("--persona", help="Noun phrase replacing 'A person'")
    p.add_argument("--sweep", action="store_true", help="Repeat the run over the configured temperatures")

    p = sub.add_parser("eval-inverse", parents=[common, run], help="Run the pairwise inverse task")
    p.add_argument("--context", choices=["positive", "negative"], default="positive")

    p = sub.add_parser("fit", parents=[common, run], help="Fit the behavioral models")
    p.add_argument("--record", help="Forward run directory or record; human proportions when omitted")

    p = sub.add_parser("report", parents=[common], help="Tables from saved run records")
    p.add_argument("records", nargs="+", help="Run directories or record files")
    p.add_argument("--dataset", help="Dataset for the human vs max-EV anchor")
    p.add_argument("--human-positive", help="Human ranking CSV for the positive context")
    p.add_argument("--human-negative", help="Human ranking CSV for the negative context")
    return parser


def main(argv: List[str] = None) -> int:
    args = build_parser().parse_args(argv)
    app_settings = Settings(args.config) if args.config else default_settings

    setup_logging(app_settings, debug=args.debug)
    if args.debug:
        logger.info("DEBUG logging enabled")
    app_settings.ensure_directories()

    try:
        COMMANDS[args.command](args, app_settings)
    except ToolkitException as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 130
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
