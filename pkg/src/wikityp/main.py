"""
Wikityp - Main Entry Point

Kommandozeile für die Pipeline-Stufen. Logs gehen nach stderr,
Daten nur in Dateien.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence

import structlog

from wikityp.config import Settings, get_settings, load_pipeline_config
from wikityp.errors import RetriableError, WikitypError
from wikityp.knowledge.schemas import Typology
from wikityp.pipeline.commands import (
    EXIT_FATAL,
    PipelineContext,
    cmd_candidates,
    cmd_embed,
    cmd_expand,
    cmd_feasibility,
    cmd_ingest,
    cmd_predict,
    cmd_run,
    cmd_sweep,
    cmd_train,
)

logger = structlog.get_logger(__name__)

TASK_COMMANDS: dict[str, Callable[[PipelineContext, Typology | None], int]] = {
    "candidates": cmd_candidates,
    "expand": cmd_expand,
    "train": cmd_train,
    "sweep": cmd_sweep,
}

PLAIN_COMMANDS: dict[str, Callable[[PipelineContext], int]] = {
    "ingest": cmd_ingest,
    "embed": cmd_embed,
    "predict": cmd_predict,
    "feasibility": cmd_feasibility,
    "run": cmd_run,
}

HELP = {
    "ingest": "Wikipedia-Seiten holen, Sätze und Infobox extrahieren",
    "embed": "Sätze einbetten und den Embedding-Cache füllen",
    "candidates": "Kandidaten-Keylines pro Typologie schreiben",
    "expand": "Greedy Keyline-Erweiterung per Kreuzvalidierung",
    "train": "One-vs-All Modelle trainieren",
    "sweep": "Alle 21 Merkmals-Teilmengen bewerten",
    "predict": "Städte der City-Liste bewerten",
    "feasibility": "Via-Verhältnisse und Via-Modell",
    "run": "Alle Stufen nacheinander",
}


def configure_logging(settings: Settings) -> None:
    """structlog auf stdlib-Logging nach stderr."""
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=settings.logging.level,
        force=True,
    )
    use_console = settings.logging.format == "console" and settings.is_development
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.dev.ConsoleRenderer() if use_console else structlog.processors.JSONRenderer(),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    """Argument-Parser mit einem Unterbefehl pro Stufe."""
    parser = argparse.ArgumentParser(
        prog="wikityp",
        description="Stadttypologie-Vorhersage aus Wikipedia-Seiten",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.version}")
    subcommands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in HELP.items():
        sub = subcommands.add_parser(name, help=help_text)
        sub.add_argument(
            "--config",
            default=str(settings.config_path),
            help=f"Pipeline-Config (default: {settings.config_path})",
        )
        sub.add_argument("--seed", type=int, default=None, help="überschreibt split.seed")
        if name in TASK_COMMANDS:
            sub.add_argument(
                "--task",
                choices=[t.value for t in Typology],
                default=None,
                help="nur diese Typologie (default: alle vier)",
            )
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Führt einen Befehl aus und liefert den Exit-Code."""
    settings = get_settings()
    args = build_parser(settings).parse_args(argv)
    configure_logging(settings)

    try:
        config = load_pipeline_config(args.config).with_seed(args.seed)
        ctx = PipelineContext(config)
        logger.info("command_started", command=args.command, config=args.config)
        if args.command in TASK_COMMANDS:
            task = Typology(args.task) if args.task else None
            status = TASK_COMMANDS[args.command](ctx, task)
        else:
            status = PLAIN_COMMANDS[args.command](ctx)
    except WikitypError as e:
        logger.error(
            "command_failed",
            command=args.command,
            error=str(e),
            error_type=type(e).__name__,
            retriable=isinstance(e, RetriableError),
        )
        return EXIT_FATAL

    logger.info("command_finished", command=args.command, status=status)
    return status


def main() -> None:
    """CLI Entry Point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
