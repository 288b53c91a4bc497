#!/usr/bin/env python3
"""Regenerate the bundled fixture CSVs from the frozen configuration.

Run from the repository root:

    python3 scripts/generate_fixture.py

The generator is deterministic, so rerunning without changing the
frozen seed or configuration reproduces the files byte for byte.
"""

import json
import sys
from dataclasses import asdict
from pathlib import Path

from womdensity import dataset as ds
from womdensity import simulator as sim

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "womdensity" / "fixtures"


def main() -> int:
    model = sim.fixture_true_model()
    config = sim.fixture_config()
    data = sim.simulate_dataset(model, config)
    paths = ds.write_dataset(data, OUT_DIR)

    manifest = {
        "seed": config.seed,
        "ticket_price": model.ticket_price,
        "noise_sd": model.noise_sd,
        "beta": model.beta,
        "n_items": config.n_items,
        "weeks": config.weeks,
        "counts": {
            "ratings": len(data.ratings),
            "critics": len(data.critics),
            "items": len(data.items),
            "sales": len(data.sales),
            "profiles": len(data.profiles or []),
        },
        "config": {
            key: (list(value) if isinstance(value, tuple) else value)
            for key, value in asdict(config).items()
            if key not in ("release_start",)
        },
        "release_start": config.release_start.isoformat(),
    }
    manifest_path = OUT_DIR / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n",
                             encoding="utf-8")

    for name, path in sorted({**paths, "manifest": manifest_path}.items()):
        size = path.stat().st_size
        print(f"{name:10s} {size:>10,d} bytes  {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
