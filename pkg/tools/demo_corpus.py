#!/usr/bin/env python3
"""
Wikityp Demo Workspace

Erzeugt einen Offline-Workspace mit synthetischen Städten: Page-Cache,
Datensatz, Via-Liste, Fixture-Vokabular und wikityp.yaml. Die Seiten
enthalten eingepflanzte Signalzeilen pro Typologie.

Usage:
    python tools/demo_corpus.py demo
    python tools/demo_corpus.py demo --cities 120 --extra 40 --seed 3
    wikityp run --config demo/wikityp.yaml
"""

import argparse
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from wikityp.corpus.synthetic import write_workspace  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description="Wikityp Demo Workspace")
    parser.add_argument("target", type=Path, help="Zielverzeichnis")
    parser.add_argument("--cities", type=int, default=80, help="Gelabelte Städte")
    parser.add_argument("--extra", type=int, default=20,
                        help="Zusätzliche ungelabelte Städte für predict")
    parser.add_argument("--seed", type=int, default=0, help="Seed des Generators")
    parser.add_argument("--split-seed", type=int, default=7, help="split.seed in der Config")
    args = parser.parse_args()

    config_path = write_workspace(
        args.target,
        n_cities=args.cities,
        seed=args.seed,
        split_seed=args.split_seed,
        extra_cities=args.extra,
    )
    print(f"[DEMO] Workspace geschrieben: {args.target}")
    print(f"[DEMO] Starten mit: wikityp run --config {config_path}")


if __name__ == "__main__":
    main()
