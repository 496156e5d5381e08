"""End-to-end batch runs behind the CLI: mapping, coverage, phenotype scores.

The whole pipeline is seed-free and deterministic: worker scheduling never
affects output because results are globally re-sorted before writing, and
all serialization is stable (sorted keys, fixed float formatting).  Two
runs on identical inputs produce byte-identical files at any worker count.
"""

from __future__ import annotations

import json
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .align import (
    CuiBridge,
    align_concept,
    align_via_ancestors,
    build_indexes,
    enrich_concepts,
)
from .core import (
    Domain,
    EvidenceKind,
    MappingCategory,
    MappingRecord,
    OUTCOME_ORDER,
    REASON_DISPLAY,
    UnmappedReason,
    curie_ontology,
    render_category,
    validate_record,
)
from .errors import ConfigError, DataError, ParseError
from .evaluate import bucket_errors, group_stats, partition_coverage, phers
from .ingest import (
    load_concepts,
    load_curation,
    load_ontology_dump,
    load_prevalence,
    load_umls,
)
from .lexical import (
    Lemmatize,
    NormalizationDictionary,
    TokenizerConfig,
    default_code_dictionary,
    default_stopwords,
    load_stopwords,
)
from .similarity import (
    IDF_VARIANT,
    SimilarityConfig,
    best_per_concept,
    build_corpus,
    filter_pairs,
    fit,
    score_concept_pairs,
)
from .stats import bonferroni_pairwise, chi_square_yates
from .synthesize import (
    RouteDecision,
    RoutingPolicy,
    expand_measurements,
    load_measurement_scales,
    load_measurement_targets,
    load_routing_policy,
    record_from_curation,
    render_evidence,
    route,
    synthesize,
)

MAPPINGS_HEADER = [
    "concept_id",
    "domain",
    "ontology",
    "category",
    "level",
    "logic",
    "targets",
    "target_labels",
    "score",
    "evidence",
    "unmapped_reason",
    "outcome",
]

SSSOM_HEADER = [
    "subject_id",
    "subject_label",
    "object_id",
    "object_label",
    "mapping_justification",
    "mapping_set_id",
    "comment",
]

_EVIDENCE_GROUPS = {
    EvidenceKind.XREF_MATCH: "Database Cross-References",
    EvidenceKind.CUI_MATCH: "Database Cross-References",
    EvidenceKind.SYNONYM_MATCH: "Synonyms",
    EvidenceKind.LABEL_MATCH: "Labels",
    EvidenceKind.DEFINITION_MATCH: "Definitions",
    EvidenceKind.COSINE_SCORE: "Cosine Similarity",
    EvidenceKind.MANUAL_SOURCE: "Biocuration",
}

_JUSTIFICATION = {
    "AUTO": "semapv:LexicalMatching",
    "COSINE": "semapv:SemanticSimilarityThresholdMatching",
    "MANUAL": "semapv:ManualMappingCuration",
}


@dataclass
class RunConfig:
    out_dir: str
    concepts: str | None = None
    ancestors: str | None = None
    ontology_dumps: tuple[str, ...] = ()
    class_ancestors: str | None = None
    umls_mrconso: str | None = None
    umls_mrsty: str | None = None
    code_map: str | None = None
    stopwords: str | None = None
    routing: str | None = None
    curation: str | None = None
    measurement_scales: str | None = None
    measurement_targets: str | None = None
    domain: Domain = Domain.CONDITION
    tau: float = 0.25
    rho: float = 0.75
    jobs: int = 0  # 0 -> available parallelism
    mappings: str | None = None
    prevalence: str | None = None
    newer_cdm: str | None = None
    excluded: str | None = None
    alpha: float = 0.05
    weights: str | None = None
    patients: str | None = None
    cohort: str | None = None

    def effective_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


def _require_paths(pairs):
    for flag, path in pairs:
        if path is None:
            raise ConfigError("MISSING_INPUT", f"--{flag} is required")
        if not Path(path).exists():
            raise ConfigError("NO_SUCH_FILE", f"--{flag}: {path} does not exist")


def _optional_paths(pairs):
    for flag, path in pairs:
        if path is not None and not Path(path).exists():
            raise ConfigError("NO_SUCH_FILE", f"--{flag}: {path} does not exist")


def _parallel_map(fn, items, jobs):
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _fmt_score(score) -> str:
    return "" if score is None else f"{score:.12g}"


def _mapping_row(record: MappingRecord, target_labels) -> str:
    labels = "|".join(target_labels.get(t, "").replace("|", "/") for t in record.targets)
    return "\t".join(
        [
            str(record.concept_id),
            record.domain.value,
            record.ontology,
            render_category(record.category, record.level),
            record.level.value,
            record.logic,
            "|".join(record.targets),
            labels,
            _fmt_score(record.score),
            render_evidence(record),
            REASON_DISPLAY[record.unmapped_reason] if record.unmapped_reason else "",
            record.outcome.value if record.outcome else "",
        ]
    )


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: Path, payload) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _summarize(records, concepts) -> dict:
    """Per-ontology, per-wave counts of categories, evidence, and reasons."""
    categories: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(int)))
    evidence: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(int)))
    unmapped: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(int)))
    for record in records:
        wave = (
            "used_in_practice"
            if concepts[record.concept_id].used_in_practice
            else "not_used_in_practice"
        )
        if record.category is MappingCategory.UNMAPPED:
            unmapped[record.ontology][wave][REASON_DISPLAY[record.unmapped_reason]] += 1
            continue
        display = render_category(record.category, record.level)
        categories[record.ontology][wave][display] += 1
        for atom in record.evidence:
            group = _EVIDENCE_GROUPS.get(atom.kind)
            if group:
                evidence[record.ontology][wave][group] += 1

    def materialize(tree):
        return {
            ontology: {
                wave: dict(sorted(counts.items())) for wave, counts in sorted(waves.items())
            }
            for ontology, waves in sorted(tree.items())
        }

    totals = {}
    for ontology in sorted(set(categories) | set(unmapped)):
        totals[ontology] = {}
        for wave in ("used_in_practice", "not_used_in_practice"):
            totals[ontology][wave] = {
                "mapped": sum(categories.get(ontology, {}).get(wave, {}).values()),
                "unmapped": sum(unmapped.get(ontology, {}).get(wave, {}).values()),
                "evidence": sum(evidence.get(ontology, {}).get(wave, {}).values()),
            }
    return {
        "mapping_categories": materialize(categories),
        "mapping_evidence": materialize(evidence),
        "unmapped": materialize(unmapped),
        "totals": totals,
    }


def run_map(cfg: RunConfig) -> Path:
    """Full mapping pass; writes mappings.tsv and summary.json to out_dir."""
    _require_paths([("concepts", cfg.concepts)])
    if not cfg.ontology_dumps:
        raise ConfigError("MISSING_INPUT", "at least one --ontology dump is required")
    _optional_paths(
        [
            ("ancestors", cfg.ancestors),
            ("class-ancestors", cfg.class_ancestors),
            ("umls-mrconso", cfg.umls_mrconso),
            ("umls-mrsty", cfg.umls_mrsty),
            ("code-map", cfg.code_map),
            ("stopwords", cfg.stopwords),
            ("routing", cfg.routing),
            ("curation", cfg.curation),
            ("measurement-scales", cfg.measurement_scales),
            ("measurement-targets", cfg.measurement_targets),
        ]
        + [("ontology", p) for p in cfg.ontology_dumps]
    )
    if (cfg.umls_mrconso is None) != (cfg.umls_mrsty is None):
        raise ConfigError("MISSING_INPUT", "MRCONSO and MRSTY must be supplied together")
    try:
        SimilarityConfig(score_floor=cfg.tau, keep_fraction=cfg.rho)
    except ValueError as exc:
        raise ConfigError("BAD_THRESHOLD", str(exc)) from None

    dictionary = (
        NormalizationDictionary.from_csv(cfg.code_map) if cfg.code_map else default_code_dictionary()
    )
    stopwords = load_stopwords(cfg.stopwords) if cfg.stopwords else default_stopwords()

    concept_load = load_concepts(cfg.concepts, cfg.domain, cfg.ancestors, dictionary)
    concepts = concept_load.concepts

    classes = {}
    for dump in cfg.ontology_dumps:
        loaded = load_ontology_dump(dump, dictionary, cfg.class_ancestors)
        for curie, cls in loaded.items():
            if curie in classes:
                raise ParseError("DUPLICATE_CURIE", f"class {curie} in two dumps", dump)
            classes[curie] = cls
    ontologies = sorted({cls.ontology for cls in classes.values()})

    if cfg.umls_mrconso:
        tables = load_umls(cfg.umls_mrconso, cfg.umls_mrsty)
        bridge = CuiBridge(tables.atoms_by_code, dictionary)
        concepts = enrich_concepts(concepts, bridge, tables.sty_by_cui)

    policy = (
        load_routing_policy(cfg.routing, ontologies)
        if cfg.routing
        else RoutingPolicy.allow_all(ontologies)
    )
    curation_by_concept: dict[int, list] = defaultdict(list)
    unknown_curation_targets: tuple[str, ...] = ()
    if cfg.curation:
        curation_load = load_curation(cfg.curation, ontologies, set(classes))
        unknown_curation_targets = curation_load.unknown_targets
        for row in curation_load.rows:
            curation_by_concept[row.concept_id].append(row)

    scales = {}
    assignments: dict[int, list] = {}
    aux: dict[int, list] = {}
    if cfg.domain is Domain.MEASUREMENT:
        if cfg.measurement_scales:
            scales = load_measurement_scales(cfg.measurement_scales)
        if cfg.measurement_targets:
            assignments, aux = load_measurement_targets(cfg.measurement_targets)

    out_dir = Path(cfg.out_dir)
    records: list[MappingRecord] = []
    target_labels = {curie: cls.label for curie, cls in classes.items()}

    if concepts:
        indexes = build_indexes(classes.values())
        decisions = {cid: route(c, policy) for cid, c in concepts.items()}

        tok_cfg = TokenizerConfig(stopwords=stopwords, lemmatize=Lemmatize.SUFFIX_RULES)
        docs = build_corpus(concepts.values(), classes.values(), tok_cfg)
        model = fit(docs)
        pairs = score_concept_pairs(
            model,
            concepts.values(),
            classes.values(),
            routing={cid: d.allowed for cid, d in decisions.items()},
        )
        # The keep-fraction cut is scoped per (domain, ontology) run.
        sim_cfg = SimilarityConfig(score_floor=cfg.tau, keep_fraction=cfg.rho)
        kept = []
        for ontology in ontologies:
            group = [p for p in pairs if curie_ontology(p.curie) == ontology]
            kept.extend(filter_pairs(group, sim_cfg))
        best = best_per_concept(kept)
        best_by_concept: dict[int, dict[str, object]] = defaultdict(dict)
        for (cid, ontology), pair in best.items():
            best_by_concept[cid][ontology] = pair

        def process(concept_id: int) -> list[MappingRecord]:
            concept = concepts[concept_id]
            decision = decisions[concept_id]
            curation_rows = curation_by_concept.get(concept_id, [])
            if cfg.domain is Domain.MEASUREMENT:
                return _map_measurement(
                    concept,
                    decision,
                    indexes,
                    concepts,
                    best_by_concept.get(concept_id, {}),
                    curation_rows,
                    scales.get(concept_id),
                    assignments.get(concept_id, []),
                    aux.get(concept_id, []),
                    ontologies,
                )
            exact_c = align_concept(concept, indexes, decision.allowed)
            hit_onts = {curie_ontology(c.curie) for c in exact_c}
            remaining = decision.allowed - hit_onts
            exact_a = (
                align_via_ancestors(concept, concepts, indexes, remaining) if remaining else []
            )
            return synthesize(
                concept,
                exact_c,
                exact_a,
                best_by_concept.get(concept_id, {}),
                curation_rows,
                decision,
                ontologies,
            )

        chunks = _parallel_map(process, sorted(concepts), cfg.effective_jobs())
        for chunk in chunks:
            records.extend(chunk)

    records.sort(
        key=lambda r: (
            r.concept_id,
            r.ontology,
            OUTCOME_ORDER[r.outcome] if r.outcome else -1,
            r.targets,
        )
    )
    for record in records:
        violation = validate_record(record)
        if violation is not None:
            raise DataError(
                "INVALID_RECORD",
                f"concept {record.concept_id}/{record.ontology}: "
                f"{violation.rule} at {violation.field_path}",
            )

    lines = ["\t".join(MAPPINGS_HEADER)]
    lines += [_mapping_row(r, target_labels) for r in records]
    _write_text(out_dir / "mappings.tsv", "\n".join(lines) + "\n")

    summary = {
        "domain": cfg.domain.value,
        "ontologies": ontologies,
        "similarity": {
            "score_floor": cfg.tau,
            "keep_fraction": cfg.rho,
            "filter_scope": "per_ontology",
            "idf_variant": IDF_VARIANT,
        },
        "ingest_warnings": {
            "dangling_ancestors": concept_load.dangling_ancestors,
            "unknown_curation_targets": list(unknown_curation_targets),
        },
    }
    summary.update(_summarize(records, concepts))
    _write_json(out_dir / "summary.json", summary)
    return out_dir


def _map_measurement(
    concept,
    decision: RouteDecision,
    indexes,
    concepts,
    cosine_best,
    curation_rows,
    scale_row,
    concept_assignments,
    concept_aux,
    ontologies,
) -> list[MappingRecord]:
    """Measurement merge: curation wins, then result/auxiliary expansion,
    then the standard exact/cosine precedence for ontologies neither covers.

    A curation row with the unspecified-sample reason flags the whole
    concept: every configured ontology goes unmapped with that reason.
    """
    unspecified = any(
        row.unmapped_reason is UnmappedReason.UNSPECIFIED_SAMPLE for row in curation_rows
    )
    expansion, _spec = expand_measurements(
        concept,
        scale_row,
        concept_assignments,
        concept_aux,
        ontologies,
        unspecified_sample=unspecified,
    )
    expansion_by_ont: dict[str, list[MappingRecord]] = defaultdict(list)
    for record in expansion:
        expansion_by_ont[record.ontology].append(record)

    configured = sorted(o.upper() for o in ontologies)
    fallback_onts = [o for o in configured if o not in expansion_by_ont]
    synthesized_by_ont: dict[str, MappingRecord] = {}
    if fallback_onts:
        allowed = decision.allowed & frozenset(fallback_onts)
        exact_c = align_concept(concept, indexes, allowed)
        remaining = allowed - {curie_ontology(c.curie) for c in exact_c}
        exact_a = align_via_ancestors(concept, concepts, indexes, remaining) if remaining else []
        synthesized = synthesize(
            concept,
            exact_c,
            exact_a,
            {o: p for o, p in cosine_best.items() if o in fallback_onts},
            [
                row
                for row in curation_rows
                if row.ontology in fallback_onts
                and row.unmapped_reason is not UnmappedReason.UNSPECIFIED_SAMPLE
            ],
            decision,
            fallback_onts,
        )
        synthesized_by_ont = {r.ontology: r for r in synthesized}

    records: list[MappingRecord] = []
    for ontology in configured:
        curated = next(
            (row for row in curation_rows if row.ontology == ontology and row.targets), None
        )
        if ontology in expansion_by_ont:
            if curated is not None:
                records.append(record_from_curation(concept, curated))
            else:
                records.extend(expansion_by_ont[ontology])
        else:
            records.append(synthesized_by_ont[ontology])
    # Result rows may target an ontology outside the configured set; they
    # are explicit curated data and still belong in the output.
    for ontology in sorted(expansion_by_ont):
        if ontology not in configured:
            records.extend(expansion_by_ont[ontology])
    return records


def _read_mappings(path):
    """Rows of mappings.tsv as dicts keyed by header name."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != MAPPINGS_HEADER:
            raise ParseError("MISSING_COLUMN", "unexpected mappings.tsv header", str(path), 1)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != len(MAPPINGS_HEADER):
                raise ParseError("MALFORMED_ROW", "bad column count", str(path), lineno)
            rows.append(dict(zip(MAPPINGS_HEADER, fields)))
    return rows


def _load_id_list(path) -> set[int]:
    ids = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                ids.add(int(line))
            except ValueError:
                raise ParseError("MALFORMED_ROW", f"bad concept id {line!r}", str(path), lineno) from None
    return ids


def run_coverage(cfg: RunConfig) -> Path:
    """Coverage partition, omnibus + pairwise tests, and error buckets."""
    _require_paths([("mappings", cfg.mappings), ("prevalence", cfg.prevalence)])
    _optional_paths([("newer-cdm", cfg.newer_cdm), ("excluded", cfg.excluded)])

    rows = _read_mappings(cfg.mappings)
    mapped_ids = {int(r["concept_id"]) for r in rows if r["category"] != "Unmapped"}
    prevalence = load_prevalence(cfg.prevalence)
    report = partition_coverage(mapped_ids, prevalence.rows)

    site_tables = [
        (s.site_id, s.covered, s.concepts - s.covered) for s in report.per_site
    ]
    omnibus = None
    if len(site_tables) >= 2:
        table = [[covered, uncovered] for _, covered, uncovered in site_tables]
        omnibus = chi_square_yates(table)
    pairwise = bonferroni_pairwise(site_tables, cfg.alpha)

    newer = _load_id_list(cfg.newer_cdm) if cfg.newer_cdm else set()
    excluded = _load_id_list(cfg.excluded) if cfg.excluded else set()
    buckets = bucket_errors(report.site_only, newer, excluded, prevalence.rows)

    out_dir = Path(cfg.out_dir)

    def bucket_payload(stats):
        return {
            "count": len(stats.concept_ids),
            "fraction_pct": 100.0 * stats.fraction,
            "mean_site_count": stats.mean_site_count,
            "mean_avg_frequency": stats.mean_avg_frequency,
            "min_avg_frequency": stats.min_avg_frequency,
            "max_avg_frequency": stats.max_avg_frequency,
        }

    payload = {
        "counts": {
            "overlap": len(report.overlap),
            "mapping_only": len(report.mapping_only),
            "site_only": len(report.site_only),
            "site_concepts": len(report.overlap) + len(report.site_only),
        },
        "unweighted_coverage_pct": report.unweighted_coverage_pct,
        "weighted_coverage_pct": report.weighted_coverage_pct,
        "floored_rows": prevalence.floored,
        "per_site": [
            {
                "site_id": s.site_id,
                "concepts": s.concepts,
                "covered": s.covered,
                "coverage_pct": s.coverage_pct,
            }
            for s in report.per_site
        ],
        "omnibus": (
            None
            if omnibus is None
            else {"chi2": omnibus.statistic, "df": omnibus.df, "p_value": omnibus.p_value}
        ),
        "pairwise_fraction_significant": pairwise.fraction_significant,
        "error_buckets": {
            "recovered_newer_cdm": bucket_payload(buckets.recovered_newer_cdm),
            "purposefully_excluded": bucket_payload(buckets.purposefully_excluded),
            "truly_missing": bucket_payload(buckets.truly_missing),
        },
    }
    _write_json(out_dir / "coverage.json", payload)

    lines = ["site_a\tsite_b\tchi2\tdf\tp_value\tadjusted_alpha\tsignificant"]
    for test in pairwise.tests:
        lines.append(
            "\t".join(
                [
                    test.site_a,
                    test.site_b,
                    f"{test.result.statistic:.12g}",
                    str(test.result.df),
                    f"{test.result.p_value:.12g}",
                    f"{pairwise.adjusted_alpha:.12g}",
                    "1" if test.significant else "0",
                ]
            )
        )
    _write_text(out_dir / "pairwise.tsv", "\n".join(lines) + "\n")

    lines = ["concept_id\tbucket"]
    for name, stats in (
        ("RECOVERED_NEWER_CDM", buckets.recovered_newer_cdm),
        ("PURPOSEFULLY_EXCLUDED", buckets.purposefully_excluded),
        ("TRULY_MISSING", buckets.truly_missing),
    ):
        for concept_id in stats.concept_ids:
            lines.append(f"{concept_id}\t{name}")
    _write_text(out_dir / "buckets.tsv", "\n".join(lines) + "\n")
    return out_dir


def _read_two_column(path, header, value_parser):
    out = []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first.split("\t") != header:
            raise ParseError("MISSING_COLUMN", f"expected header {header}", str(path), 1)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError("MALFORMED_ROW", "expected 2 columns", str(path), lineno)
            try:
                out.append((fields[0], value_parser(fields[1])))
            except ValueError as exc:
                raise ParseError("MALFORMED_ROW", str(exc), str(path), lineno) from None
    return out


def run_phers(cfg: RunConfig) -> Path:
    """Standardized phenotype risk scores plus the one-sided rank-sum test."""
    from .stats import wilcoxon_rank_sum_one_sided

    _require_paths(
        [("weights", cfg.weights), ("patients", cfg.patients), ("cohort", cfg.cohort)]
    )
    weights = dict(_read_two_column(cfg.weights, ["hpo_curie", "weight"], float))
    phenotype_rows = _read_two_column(cfg.patients, ["patient_id", "hpo_curie"], str)
    cohort_rows = _read_two_column(cfg.cohort, ["patient_id", "group"], str)

    groups = {}
    for patient_id, group in cohort_rows:
        group = group.strip().upper()
        if group not in {"CASE", "CONTROL"}:
            raise ParseError("MALFORMED_ROW", f"bad group {group!r}", str(cfg.cohort))
        groups[patient_id] = group
    phenotypes: dict[str, set[str]] = {pid: set() for pid in groups}
    for patient_id, curie in phenotype_rows:
        if patient_id in phenotypes:
            phenotypes[patient_id].add(curie)

    result = phers(phenotypes, weights)
    by_group = {"CASE": [], "CONTROL": []}
    for score in result.scores:
        by_group[groups[score.patient_id]].append(score.standardized)
    test = wilcoxon_rank_sum_one_sided(by_group["CASE"], by_group["CONTROL"])

    out_dir = Path(cfg.out_dir)
    lines = ["patient_id\traw\tstandardized\tgroup"]
    for score in result.scores:
        lines.append(
            f"{score.patient_id}\t{score.raw:.12g}\t{score.standardized:.12g}\t{groups[score.patient_id]}"
        )
    _write_text(out_dir / "phers.tsv", "\n".join(lines) + "\n")

    def stats_payload(values):
        s = group_stats(values)
        return {
            "count": s.count,
            "mean": s.mean,
            "median": s.median,
            "sd": s.sd,
            "min": s.min,
            "max": s.max,
        }

    payload = {
        "statistic": test.statistic,
        "p_value": test.p_value,
        "exact": test.exact,
        "raw_mean": result.raw_mean,
        "raw_sd": result.raw_sd,
        "standardization": "sample_sd",
        "cases": stats_payload(by_group["CASE"]),
        "controls": stats_payload(by_group["CONTROL"]),
    }
    _write_json(out_dir / "test.json", payload)
    return out_dir


def export_sssom(mappings_path, concepts_path, out_path) -> Path:
    """Flatten mapping rows into an interchange TSV, one row per target.

    One-to-many records share a mapping_set_id so consumers can rebuild
    the grouping; unmapped records contribute no rows.
    """
    _require_paths([("mappings", mappings_path), ("concepts", concepts_path)])
    concepts = load_concepts(concepts_path).concepts
    rows = _read_mappings(mappings_path)

    lines = ["\t".join(SSSOM_HEADER)]
    for row in rows:
        targets = [t for t in row["targets"].split("|") if t]
        if not targets:
            continue
        labels = row["target_labels"].split("|")
        concept = concepts.get(int(row["concept_id"]))
        subject_id = str(concept.code) if concept else row["concept_id"]
        subject_label = concept.label if concept else ""
        approach = row["category"].split()[0].upper()
        justification = _JUSTIFICATION.get(
            "AUTO" if approach == "AUTOMATIC" else "COSINE" if approach == "COSINE" else "MANUAL"
        )
        set_id = f"{row['concept_id']}:{row['ontology']}"
        if row["outcome"]:
            set_id += f":{row['outcome']}"
        for i, target in enumerate(targets):
            lines.append(
                "\t".join(
                    [
                        subject_id,
                        subject_label,
                        target,
                        labels[i] if i < len(labels) else "",
                        justification,
                        set_id,
                        row["evidence"],
                    ]
                )
            )
    out = Path(out_path)
    _write_text(out, "\n".join(lines) + "\n")
    return out
