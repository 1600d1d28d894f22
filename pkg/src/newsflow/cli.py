"""Command line interface.

Subcommands cover the operational surface: simulate a corpus, ingest an
event file into a service directory, force a retrain, query predictions,
evaluate model quality on a held-out split, emit analysis reports, and
serve the HTTP API.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import EngineConfig, load_config
from .events import read_events, write_events
from .ingest import SeriesStore, replay_events
from .predict import (
    ModelUnavailableError,
    TooEarlyError,
    evaluate_models,
    train_horizon_models,
)
from .reports import REPORT_GROUPS, REPORT_KINDS, generate_report
from .service import EngineService
from .simgen import CorpusSpec, corpus_event_stream
from .timeutil import parse_iso8601

log = logging.getLogger(__name__)


def _add_data_dir(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data-dir", required=True, help="service data directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newsflow",
        description="streaming article life-cycle analytics and early prediction",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a calibrated synthetic event stream")
    p.add_argument("--out", required=True, help="output events file (JSON lines)")
    p.add_argument("--articles", type=int, default=606)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument(
        "--publication-days",
        type=float,
        default=7.0,
        help="publication times spread over this many days",
    )
    p.add_argument(
        "--collection-days",
        type=float,
        default=None,
        help="truncate the stream this many days after the start",
    )
    p.add_argument("--start", default=None, help="collection start (ISO-8601)")

    p = sub.add_parser("ingest", help="replay an event file into a service directory")
    _add_data_dir(p)
    p.add_argument("--events", required=True, help="event file to replay")
    p.add_argument(
        "--speed",
        type=float,
        default=0.0,
        help="0 replays as fast as possible; s > 0 divides event gaps by s",
    )
    p.add_argument(
        "--no-snapshot", action="store_true", help="skip the checkpoint at the end"
    )

    p = sub.add_parser("train", help="rebuild prediction models immediately")
    _add_data_dir(p)

    p = sub.add_parser("predict", help="predict an article's visit total")
    _add_data_dir(p)
    p.add_argument("--article", required=True)

    p = sub.add_parser("evaluate", help="held-out model quality per group and horizon")
    _add_data_dir(p)
    p.add_argument(
        "--holdout-every",
        type=int,
        default=5,
        help="hold out every k-th matured article (by sorted id)",
    )

    p = sub.add_parser("report", help="write an analysis report CSV")
    p.add_argument("--events", help="event file (alternative to --data-dir)")
    p.add_argument("--data-dir", help="service data directory")
    p.add_argument("--kind", required=True, choices=REPORT_KINDS)
    p.add_argument("--group", default="all", choices=REPORT_GROUPS)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("serve", help="run the HTTP API for a service directory")
    _add_data_dir(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def _print(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True, default=str)
    sys.stdout.write("\n")


def cmd_simulate(args) -> int:
    kwargs = dict(
        n_articles=args.articles,
        seed=args.seed,
        publication_days=args.publication_days,
        collection_days=args.collection_days,
    )
    if args.start is not None:
        kwargs["start_ts"] = parse_iso8601(args.start)
    spec = CorpusSpec(**kwargs)
    with open(args.out, "w", encoding="utf-8") as fh:
        n = write_events(fh, corpus_event_stream(spec))
    _print({"events": n, "articles": spec.n_articles, "out": args.out})
    return 0


def cmd_ingest(args) -> int:
    service = EngineService(args.data_dir)
    try:
        with open(args.events, encoding="utf-8") as fh:
            n = service.replay(read_events(fh), speed=args.speed)
        if not args.no_snapshot:
            service.snapshot()
        _print({"events": n, **service.status()})
    finally:
        service.close()
    return 0


def cmd_train(args) -> int:
    service = EngineService(args.data_dir)
    try:
        store = service.store
        now = store.clock
        scheduler = service.scheduler
        scheduler._collect_matured(store, now, store.monitored_articles(now))
        corpus = [store.articles[a] for a in sorted(scheduler.matured_ids)]
        scheduler.registry = train_horizon_models(
            corpus, service.config, previous=scheduler.registry, now_ts=now
        )
        service.snapshot()
        _print(scheduler.registry.summary())
    finally:
        service.close()
    return 0


def cmd_predict(args) -> int:
    service = EngineService(args.data_dir)
    try:
        prediction = service.predict_now(args.article)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TooEarlyError, ModelUnavailableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        service.close()
    _print(prediction.to_dict())
    return 0


def cmd_evaluate(args) -> int:
    service = EngineService(args.data_dir)
    try:
        store = service.store
        config = service.config
        now = store.clock
        target = config.training_target_minutes
        matured = [
            store.articles[a]
            for a in sorted(store.articles)
            if store.articles[a].origin_minute is not None
            and (now - store.articles[a].first_visit_ts) // 60 >= target
        ]
        every = max(args.holdout_every, 2)
        train_set = [s for i, s in enumerate(matured) if i % every != 0]
        held_out = [s for i, s in enumerate(matured) if i % every == 0]
        if len(train_set) < config.min_training_articles or len(held_out) < 2:
            print("error: not enough matured articles to evaluate", file=sys.stderr)
            return 1
        registry = train_horizon_models(train_set, config, now_ts=now)
        scores = evaluate_models(registry, held_out, config)
        _print(
            {
                "train_articles": len(train_set),
                "held_out_articles": len(held_out),
                "r_squared": {
                    group: {str(h): r2 for h, r2 in per.items()}
                    for group, per in scores.items()
                },
            }
        )
    finally:
        service.close()
    return 0


def cmd_report(args) -> int:
    if bool(args.events) == bool(args.data_dir):
        print("error: pass exactly one of --events or --data-dir", file=sys.stderr)
        return 2
    if args.events:
        store = SeriesStore(EngineConfig())
        with open(args.events, encoding="utf-8") as fh:
            summary = replay_events(store, read_events(fh))
        log.info("replayed %d events from %s", summary.events, args.events)
    else:
        config_path = Path(args.data_dir) / "config.json"
        config = load_config(config_path) if config_path.exists() else EngineConfig()
        service = EngineService(args.data_dir, config)
        store = service.store
        service.close()
    headline = generate_report(store, args.kind, args.group, args.out)
    _print({"kind": args.kind, "group": args.group, "out": args.out, **headline})
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    service = EngineService(args.data_dir)
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    service.close()
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
