"""Command-line surface: validate datasets, run sweeps and pipelines, render reports.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 validation
failure. Progress goes to stderr so report output stays byte-stable; two
runs with identical config and mock backends produce identical report and
prediction files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .corpus import DatasetError, load_dataset, validate_dataset_file
from .dense import EmbeddingProviderConfig
from .evaluation import EvalReport, evaluate_run, parse_report_json, render_report
from .gateway import GatewayConfig, LlmGateway
from .predictor import (
    Prediction,
    PredictionFailure,
    RetrieverChoice,
    run_predictions,
)
from .relations import EXTRACTION_TEMPLATE
from .predictor import SELECTION_TEMPLATE

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VALIDATION = 4

DEFAULT_SWEEP_KS = (10, 15, 20)


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run's outputs (paths excluded from digest)."""

    dataset: str
    retrievers: tuple[str, ...]
    ks: tuple[int, ...]
    mode: str  # "retrieval" or "pipeline"
    gateway: dict | None = None
    embedder: dict | None = None
    parallel: int = 1
    single: bool = False
    triples_in_prompt: bool = False
    relation_scorer: str = "tfidf"
    seed: int = 0
    out: str | None = field(default=None, compare=False)

    def digest(self) -> str:
        payload = {
            "dataset": self.dataset,
            "retrievers": list(self.retrievers),
            "ks": list(self.ks),
            "mode": self.mode,
            "gateway": self.gateway,
            "embedder": self.embedder,
            "parallel": self.parallel,
            "single": self.single,
            "triples_in_prompt": self.triples_in_prompt,
            "relation_scorer": self.relation_scorer,
            "seed": self.seed,
        }
        canonical = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _config_dict(obj) -> dict | None:
    if obj is None:
        return None
    data = {}
    for key, value in vars(obj).items():
        if key == "script":
            data[key] = [vars(entry) for entry in value]
        else:
            data[key] = value
    return data


def _load_backends(
    args: argparse.Namespace, *, need_gateway: bool
) -> tuple[GatewayConfig | None, EmbeddingProviderConfig]:
    gateway_cfg = None
    if args.gateway_config:
        gateway_cfg = GatewayConfig.from_file(args.gateway_config)
    elif need_gateway:
        raise ValueError("this run needs --gateway-config")
    if args.embedder_config:
        embedder = EmbeddingProviderConfig.from_file(args.embedder_config)
    else:
        embedder = EmbeddingProviderConfig(kind="mock")
    return gateway_cfg, embedder


def _row_name(kind: str, k: int, mode: str) -> str:
    return f"{kind}-{k}" if mode == "retrieval" else f"llm-{kind}-{k}"


def _dump_lines(results: Sequence[Prediction | PredictionFailure]) -> list[str]:
    lines = []
    for result in results:
        if isinstance(result, PredictionFailure):
            record = {
                "query_id": result.query_id,
                "predicted": [],
                "retrieved": [],
                "warnings": [f"failed: {result.error}"],
            }
        else:
            record = {
                "query_id": result.query_id,
                "predicted": sorted(result.predicted_ids),
                "retrieved": list(result.retrieved_ids),
                "warnings": list(result.warnings),
            }
        lines.append(json.dumps(record, sort_keys=True))
    return lines


def _execute_run(config: RunConfig, args: argparse.Namespace) -> int:
    started = datetime.now(timezone.utc)
    need_gateway = config.mode == "pipeline" or "relation" in config.retrievers
    gateway_cfg, embedder = _load_backends(args, need_gateway=need_gateway)
    dataset = load_dataset(config.dataset, require_gold=True)
    out_dir = Path(config.out) if config.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    reports: list[tuple[str, EvalReport]] = []
    for kind in config.retrievers:
        for k in config.ks:
            choice = RetrieverChoice(
                kind=kind, k=k, relation_scorer=config.relation_scorer
            )
            gateway = LlmGateway(gateway_cfg) if gateway_cfg else None
            try:
                results = run_predictions(
                    dataset,
                    choice,
                    gateway,
                    embedder,
                    retrieval_only=config.mode == "retrieval",
                    single=config.single,
                    triples_in_prompt=config.triples_in_prompt,
                    parallel=config.parallel,
                )
            finally:
                if gateway:
                    gateway.close()
            name = _row_name(kind, k, config.mode)
            report = evaluate_run(results, dataset)
            reports.append((name, report))
            log.info(
                "%s: %d queries, %d failed", name, report.n_queries, report.n_failed
            )
            if out_dir and config.mode == "pipeline":
                dump_path = out_dir / f"predictions-{name}.jsonl"
                dump_path.write_text(
                    "\n".join(_dump_lines(results)) + "\n", encoding="utf-8"
                )
    table = render_report(reports, "table")
    machine = render_report(reports, "json")
    if out_dir:
        (out_dir / "report.md").write_text(table, encoding="utf-8")
        (out_dir / "report.json").write_text(machine, encoding="utf-8")
        meta = {
            "config": {
                "dataset": config.dataset,
                "retrievers": list(config.retrievers),
                "ks": list(config.ks),
                "mode": config.mode,
                "gateway": config.gateway,
                "embedder": config.embedder,
                "parallel": config.parallel,
                "single": config.single,
                "triples_in_prompt": config.triples_in_prompt,
                "relation_scorer": config.relation_scorer,
                "seed": config.seed,
            },
            "config_digest": config.digest(),
            "templates": {
                "extraction": EXTRACTION_TEMPLATE,
                "selection": SELECTION_TEMPLATE,
            },
            "model_name": gateway_cfg.model_name if gateway_cfg else None,
            "embedder_model": embedder.model_name,
            "n_instances": len(dataset),
            "started_at": started.isoformat(),
            "finished_at": datetime.now(timezone.utc).isoformat(),
        }
        (out_dir / "run_meta.json").write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    print(table if args.format == "table" else machine, end="")
    return EXIT_OK


def _build_run_config(args: argparse.Namespace, mode: str) -> RunConfig:
    requested_mode = getattr(args, "mode", None) or mode
    if requested_mode != mode:
        raise ValueError(
            f"this command runs in {mode!r} mode; use the other command for"
            f" {requested_mode!r}"
        )
    retrievers = tuple(args.retriever or ["tfidf"])
    default_ks = DEFAULT_SWEEP_KS if mode == "retrieval" else (20,)
    ks = tuple(args.k or default_ks)
    gateway_cfg, embedder = None, None
    if args.gateway_config:
        gateway_cfg = GatewayConfig.from_file(args.gateway_config)
    if args.embedder_config:
        embedder = EmbeddingProviderConfig.from_file(args.embedder_config)
    return RunConfig(
        dataset=args.dataset,
        retrievers=retrievers,
        ks=ks,
        mode=mode,
        gateway=_config_dict(gateway_cfg),
        embedder=_config_dict(embedder),
        parallel=args.parallel,
        single=getattr(args, "single", False),
        triples_in_prompt=getattr(args, "triples_in_prompt", False),
        relation_scorer=args.relation_scorer,
        seed=args.seed,
        out=args.out,
    )


def cmd_validate(args: argparse.Namespace) -> int:
    count, issues = validate_dataset_file(
        args.dataset, strict=not args.lenient, require_gold=args.require_gold
    )
    for lineno, issue in issues:
        where = f"line {lineno}: " if lineno else ""
        print(f"{where}{issue.severity}: {issue.message}")
    if any(issue.severity == "error" for _, issue in issues):
        return EXIT_VALIDATION
    print(f"{count} instances OK")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_run_config(args, "retrieval")
    return _execute_run(config, args)


def cmd_predict(args: argparse.Namespace) -> int:
    config = _build_run_config(args, "pipeline")
    if config.gateway is None:
        raise ValueError("the full pipeline needs --gateway-config")
    return _execute_run(config, args)


def cmd_report(args: argparse.Namespace) -> int:
    reports: list[tuple[str, EvalReport]] = []
    for path in args.inputs:
        reports.extend(parse_report_json(Path(path).read_text(encoding="utf-8")))
    print(render_report(reports, args.format), end="")
    return EXIT_OK


def _add_run_arguments(parser: argparse.ArgumentParser, mode: str) -> None:
    parser.add_argument("--dataset", required=True, help="JSONL dataset path")
    parser.add_argument(
        "--retriever",
        action="append",
        choices=["tfidf", "dense", "relation"],
        help="retriever kind; repeat for several (default: tfidf)",
    )
    parser.add_argument(
        "--k",
        action="append",
        type=int,
        help=(
            "top-k cutoff; repeat for several"
            f" (default: {'10,15,20' if mode == 'retrieval' else '20'})"
        ),
    )
    parser.add_argument(
        "--mode",
        choices=["retrieval", "pipeline"],
        help="run mode; must agree with the chosen command",
    )
    parser.add_argument("--gateway-config", help="JSON config for the chat gateway")
    parser.add_argument(
        "--embedder-config",
        help="JSON config for the embedding provider (default: offline mock)",
    )
    parser.add_argument(
        "--relation-scorer",
        choices=["tfidf", "dense"],
        default="tfidf",
        help="scorer applied to the rendered relation query",
    )
    parser.add_argument("--out", help="directory for reports and run metadata")
    parser.add_argument("--parallel", type=int, default=1, metavar="N")
    parser.add_argument(
        "--seed", type=int, default=0, help="reserved; runs are deterministic under mocks"
    )
    parser.add_argument(
        "--format", choices=["table", "json"], default="table", help="stdout format"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citeseek",
        description="Citation discovery: retrieval baselines, relation-guided "
        "retrieval, LLM selection, and a precision/recall/F1 harness.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a dataset file")
    p_validate.add_argument("--dataset", required=True)
    p_validate.add_argument(
        "--lenient",
        action="store_true",
        help="report gold ids missing from the pool as warnings, not errors",
    )
    p_validate.add_argument(
        "--require-gold", action="store_true", help="demand a non-empty gold set"
    )
    p_validate.set_defaults(func=cmd_validate)

    p_sweep = sub.add_parser(
        "sweep", help="retrieval-only evaluation over a (retriever, k) grid"
    )
    _add_run_arguments(p_sweep, "retrieval")
    p_sweep.set_defaults(func=cmd_sweep)

    p_predict = sub.add_parser(
        "predict", help="full retrieve-then-select pipeline with prediction dumps"
    )
    _add_run_arguments(p_predict, "pipeline")
    p_predict.add_argument(
        "--single", action="store_true", help="ask the model for exactly one id"
    )
    p_predict.add_argument(
        "--triples-in-prompt",
        action="store_true",
        help="include extracted relations in the selection prompt",
    )
    p_predict.set_defaults(func=cmd_predict)

    p_report = sub.add_parser("report", help="render machine-readable reports")
    p_report.add_argument("--in", dest="inputs", action="append", required=True)
    p_report.add_argument("--format", choices=["table", "json"], default="table")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())
