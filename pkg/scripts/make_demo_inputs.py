#!/usr/bin/env python3
"""Write a small, self-contained demo input set for the CLI.

Creates condition-domain inputs under <out>/condition and measurement
inputs under <out>/measurement, reusing the corpus builders that drive
the test suite.

Usage: python scripts/make_demo_inputs.py [out_dir]
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from fixtures import write_condition_fixture, write_measurement_fixture  # noqa: E402


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_inputs")
    condition = write_condition_fixture(out / "condition")
    measurement = write_measurement_fixture(out / "measurement")
    print(f"wrote condition inputs under {out / 'condition'}")
    print(f"wrote measurement inputs under {out / 'measurement'}")
    print()
    print("try:")
    print(
        "  termbridge map"
        f" --concepts {condition['concepts']}"
        f" --ancestors {condition['ancestors']}"
        f" --ontology {condition['ontology']}"
        f" --umls-mrconso {condition['mrconso']}"
        f" --umls-mrsty {condition['mrsty']}"
        f" --code-map {condition['code_map']}"
        f" --routing {condition['routing']}"
        f" --curation {condition['curation']}"
        f" --domain CONDITION --out {out / 'condition_run'}"
    )
    print(
        "  termbridge map"
        f" --concepts {measurement['concepts']}"
        f" --ontology {measurement['ontology']}"
        f" --code-map {measurement['code_map']}"
        f" --measurement-scales {measurement['scales']}"
        f" --measurement-targets {measurement['targets']}"
        f" --domain MEASUREMENT --out {out / 'measurement_run'}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
