"""Regenerate the example bundle shipped under src/relief_layout/data/example."""
from pathlib import Path

from relief_layout.synth import write_example_bundle

if __name__ == "__main__":
    target = Path(__file__).resolve().parents[1] / "src" / "relief_layout" / "data" / "example"
    print(write_example_bundle(target))
