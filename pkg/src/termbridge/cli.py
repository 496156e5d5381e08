"""Command-line surface.

Subcommands: ``map`` (build mapping records), ``coverage`` (cross-site
generalizability), ``phers`` (phenotype-score utility), ``export-sssom``
(interchange flattening).  A JSON config file may supply any flag value;
explicit flags override the file.

Exit codes: 0 success, 1 configuration error, 2 parse error,
3 data-integrity error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import Domain
from .errors import ConfigError, DataError, ParseError
from .pipeline import RunConfig, export_sssom, run_coverage, run_map, run_phers

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARSE = 2
EXIT_DATA = 3


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are configuration errors (exit 1), not argparse's 2.
    def error(self, message):
        raise ConfigError("USAGE", message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="termbridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying flag values (flags override)")
    common.add_argument("--out", required=False, help="output directory")

    p_map = sub.add_parser("map", parents=[common], help="run the mapping pipeline")
    p_map.add_argument("--concepts", help="concept table (TSV)")
    p_map.add_argument("--ancestors", help="concept ancestor pairs (TSV)")
    p_map.add_argument(
        "--ontology", action="append", default=None, help="ontology dump (JSONL); repeatable"
    )
    p_map.add_argument("--class-ancestors", help="class ancestor pairs (TSV)")
    p_map.add_argument("--umls-mrconso", help="MRCONSO.RRF")
    p_map.add_argument("--umls-mrsty", help="MRSTY.RRF")
    p_map.add_argument("--code-map", help="prefix normalization dictionary (CSV)")
    p_map.add_argument("--stopwords", help="stopword list, one per line")
    p_map.add_argument("--routing", help="semantic-type routing policy (TSV)")
    p_map.add_argument("--curation", help="manual curation rows (TSV)")
    p_map.add_argument("--measurement-scales", help="measurement scale table (TSV)")
    p_map.add_argument("--measurement-targets", help="measurement result/auxiliary targets (TSV)")
    p_map.add_argument("--domain", choices=[d.value for d in Domain])
    p_map.add_argument("--tau", type=float, help="cosine score floor (default 0.25)")
    p_map.add_argument("--rho", type=float, help="kept fraction of survivors (default 0.75)")
    p_map.add_argument("--jobs", type=int, help="worker count (default: available parallelism)")

    p_cov = sub.add_parser("coverage", parents=[common], help="cross-site coverage evaluation")
    p_cov.add_argument("--mappings", help="mappings.tsv from the map command")
    p_cov.add_argument("--prevalence", help="per-site concept frequencies (TSV)")
    p_cov.add_argument("--newer-cdm", help="concept ids recovered in a newer CDM, one per line")
    p_cov.add_argument("--excluded", help="purposefully excluded concept ids, one per line")
    p_cov.add_argument("--alpha", type=float, help="family-wise alpha (default 0.05)")

    p_phe = sub.add_parser("phers", parents=[common], help="phenotype risk scores + rank test")
    p_phe.add_argument("--weights", help="phenotype weight table (TSV)")
    p_phe.add_argument("--patients", help="patient phenotype rows (TSV)")
    p_phe.add_argument("--cohort", help="patient group assignments (TSV)")

    p_sss = sub.add_parser("export-sssom", parents=[common], help="flatten mappings to interchange TSV")
    p_sss.add_argument("--mappings", help="mappings.tsv from the map command")
    p_sss.add_argument("--concepts", help="concept table used for the run")
    p_sss.add_argument("--sssom-out", help="output file path (default <out>/mappings_sssom.tsv)")

    return parser


_CONFIG_KEYS = {
    "out",
    "concepts",
    "ancestors",
    "ontology",
    "class_ancestors",
    "umls_mrconso",
    "umls_mrsty",
    "code_map",
    "stopwords",
    "routing",
    "curation",
    "measurement_scales",
    "measurement_targets",
    "domain",
    "tau",
    "rho",
    "jobs",
    "mappings",
    "prevalence",
    "newer_cdm",
    "excluded",
    "alpha",
    "weights",
    "patients",
    "cohort",
    "sssom_out",
}


def _merge_config(args: argparse.Namespace) -> dict:
    """File values fill in flags left unset; flags always win."""
    merged = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_values = json.load(fh)
        except OSError as exc:
            raise ConfigError("NO_SUCH_FILE", f"--config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("BAD_CONFIG", f"--config: {exc}") from None
        if not isinstance(file_values, dict):
            raise ConfigError("BAD_CONFIG", "--config must contain a JSON object")
        for key, value in file_values.items():
            key = key.replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ConfigError("BAD_CONFIG", f"unknown config key {key!r}")
            merged[key] = value
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _run_config(values: dict) -> RunConfig:
    if not values.get("out"):
        raise ConfigError("MISSING_INPUT", "--out is required")
    domain = Domain(values["domain"]) if values.get("domain") else Domain.CONDITION
    ontology = values.get("ontology") or ()
    if isinstance(ontology, str):
        ontology = (ontology,)
    return RunConfig(
        out_dir=values["out"],
        concepts=values.get("concepts"),
        ancestors=values.get("ancestors"),
        ontology_dumps=tuple(ontology),
        class_ancestors=values.get("class_ancestors"),
        umls_mrconso=values.get("umls_mrconso"),
        umls_mrsty=values.get("umls_mrsty"),
        code_map=values.get("code_map"),
        stopwords=values.get("stopwords"),
        routing=values.get("routing"),
        curation=values.get("curation"),
        measurement_scales=values.get("measurement_scales"),
        measurement_targets=values.get("measurement_targets"),
        domain=domain,
        tau=float(values.get("tau", 0.25)),
        rho=float(values.get("rho", 0.75)),
        jobs=int(values.get("jobs", 0)),
        mappings=values.get("mappings"),
        prevalence=values.get("prevalence"),
        newer_cdm=values.get("newer_cdm"),
        excluded=values.get("excluded"),
        alpha=float(values.get("alpha", 0.05)),
        weights=values.get("weights"),
        patients=values.get("patients"),
        cohort=values.get("cohort"),
    )


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        values = _merge_config(args)
        cfg = _run_config(values)
        if args.command == "map":
            out = run_map(cfg)
            print(f"wrote {out / 'mappings.tsv'} and {out / 'summary.json'}")
        elif args.command == "coverage":
            out = run_coverage(cfg)
            print(f"wrote {out / 'coverage.json'}, {out / 'pairwise.tsv'}, {out / 'buckets.tsv'}")
        elif args.command == "phers":
            out = run_phers(cfg)
            print(f"wrote {out / 'phers.tsv'} and {out / 'test.json'}")
        elif args.command == "export-sssom":
            target = values.get("sssom_out") or str(Path(cfg.out_dir) / "mappings_sssom.tsv")
            out = export_sssom(cfg.mappings, cfg.concepts, target)
            print(f"wrote {out}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"error[{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"error[{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_PARSE
    except DataError as exc:
        print(f"error[{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error[IO]: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
