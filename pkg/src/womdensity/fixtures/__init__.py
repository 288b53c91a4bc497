"""Bundled synthetic fixture: 104 items over 5 weeks, generated from
the benchmark coefficients by scripts/generate_fixture.py.

The CSVs ship as package data so the CLI and tests can run against a
known corpus without network access.  ``manifest.json`` records the
generating seed, coefficients, and row counts.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..dataset import Dataset, parse_dataset

_FILES = ("ratings.csv", "items.csv", "sales.csv", "critics.csv",
          "profiles.csv", "manifest.json")


def fixture_dir() -> Path:
    """Directory holding the fixture CSVs on the local filesystem."""
    root = resources.files(__package__)
    path = Path(str(root))
    for name in _FILES:
        if not (path / name).is_file():
            raise FileNotFoundError(
                f"fixture file {name} missing; run scripts/generate_fixture.py"
            )
    return path


def load_manifest() -> dict:
    return json.loads((fixture_dir() / "manifest.json").read_text("utf-8"))


def load_fixture() -> Dataset:
    """Parse the bundled CSVs into a validated dataset."""
    directory = fixture_dir()
    manifest = load_manifest()
    return parse_dataset(
        directory / "ratings.csv",
        directory / "items.csv",
        directory / "sales.csv",
        directory / "critics.csv",
        directory / "profiles.csv",
        ticket_price=manifest["ticket_price"],
    )
