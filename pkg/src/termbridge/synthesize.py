"""Fusion of alignment candidates, cosine scores, curation, and routing
into final MappingRecords.

Per-ontology precedence is total and deterministic:

  1. curation row (manual categories; manual always wins)
  2. concept-level exact candidates (automatic, concept level)
  3. ancestor-level exact candidates (automatic, ancestor level)
  4. best filtered cosine pair (cosine category, with score)
  5. unmapped, with the routing exclusion reason when present, else
     NOT YET MAPPED for concepts not used in practice, else none-found

Multi-target logic defaults to AND; OR and NOT only arise from curation
rows and from negated measurement result rows.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .core import (
    ClinicalConcept,
    Domain,
    EvidenceAtom,
    EvidenceKind,
    MappingCategory,
    MappingLevel,
    MappingRecord,
    MeasurementOutcome,
    MeasurementResultSpec,
    MeasurementScale,
    OUTCOME_ORDER,
    REASON_EVIDENCE,
    RESULT_TYPE_OUTCOMES,
    ResultAssignment,
    ResultType,
    UnmappedReason,
    canonical_evidence,
    curie_ontology,
)
from .errors import DataError, ParseError
from .ingest import CurationRow, _parse_reason, _read_rows
from .lexical import TokenizerConfig, normalize_string, tokenize


@dataclass(frozen=True)
class RoutingPolicy:
    """Semantic-type driven ontology routing.

    ``allow`` maps a semantic type to the ontologies its concepts may
    target; ``exclude`` maps a semantic type to an unmapped reason.
    Exclusion wins over allow rules.  Concepts whose semantic types carry
    no allow rule fall back to the full configured ontology set.
    """

    allow: dict[str, frozenset[str]]
    exclude: dict[str, UnmappedReason]
    default_ontologies: frozenset[str]

    @classmethod
    def allow_all(cls, ontologies) -> "RoutingPolicy":
        return cls(allow={}, exclude={}, default_ontologies=frozenset(o.upper() for o in ontologies))


@dataclass(frozen=True)
class RouteDecision:
    allowed: frozenset[str]
    exclusion: UnmappedReason | None = None


def route(concept: ClinicalConcept, policy: RoutingPolicy) -> RouteDecision:
    """Decide which ontologies a concept may target.

    Multiple semantic types union their allowed sets; an exclusion rule on
    any type short-circuits to an empty allowed set with that reason.
    """
    for sty in sorted(concept.semantic_types):
        reason = policy.exclude.get(sty)
        if reason is not None:
            return RouteDecision(allowed=frozenset(), exclusion=reason)
    allowed: set[str] = set()
    ruled = False
    for sty in concept.semantic_types:
        ontologies = policy.allow.get(sty)
        if ontologies is not None:
            allowed |= ontologies
            ruled = True
    if not ruled:
        return RouteDecision(allowed=policy.default_ontologies)
    return RouteDecision(allowed=frozenset(allowed) & policy.default_ontologies)


ROUTING_HEADER = ["semantic_type", "action", "value"]


def load_routing_policy(path, configured_ontologies) -> RoutingPolicy:
    """Parse routing_policy.tsv (`semantic_type  action  value`).

    ALLOW values are pipe-delimited ontology keys, EXCLUDE values an
    unmapped reason.  A semantic type may carry at most one exclusion.
    """
    allow: dict[str, frozenset[str]] = {}
    exclude: dict[str, UnmappedReason] = {}
    for lineno, fields in _read_rows(path, ROUTING_HEADER):
        if len(fields) != 3:
            raise ParseError("MALFORMED_ROW", "expected 3 columns", str(path), lineno)
        sty, action, value = fields[0], fields[1].strip().upper(), fields[2]
        if action == "ALLOW":
            ontologies = frozenset(o.strip().upper() for o in value.split("|") if o.strip())
            if not ontologies:
                raise ParseError("MALFORMED_ROW", "ALLOW needs an ontology list", str(path), lineno)
            allow[sty] = allow.get(sty, frozenset()) | ontologies
        elif action == "EXCLUDE":
            try:
                reason = _parse_reason(value)
            except ValueError:
                raise ParseError("UNKNOWN_REASON", f"reason {value!r}", str(path), lineno) from None
            if sty in exclude and exclude[sty] is not reason:
                raise ParseError(
                    "CONFLICTING_RULE", f"two exclusion reasons for {sty!r}", str(path), lineno
                )
            exclude[sty] = reason
        else:
            raise ParseError("MALFORMED_ROW", f"unknown action {action!r}", str(path), lineno)
    return RoutingPolicy(
        allow=allow,
        exclude=exclude,
        default_ontologies=frozenset(o.upper() for o in configured_ontologies),
    )


def _and_logic(n: int) -> str:
    return "AND(" + ",".join(str(i) for i in range(n)) + ")" if n >= 2 else ""


def _unmapped(concept, ontology, reason, extra_evidence=()) -> MappingRecord:
    atoms = [EvidenceAtom(EvidenceKind.EXCLUSION_REASON, REASON_EVIDENCE[reason])]
    atoms.extend(extra_evidence)
    return MappingRecord(
        concept_id=concept.concept_id,
        domain=concept.domain,
        ontology=ontology,
        category=MappingCategory.UNMAPPED,
        level=MappingLevel.NONE,
        logic="",
        targets=(),
        score=None,
        evidence=canonical_evidence(atoms),
        unmapped_reason=reason,
    )


def _fallback_reason(concept: ClinicalConcept, decision: RouteDecision) -> UnmappedReason:
    if decision.exclusion is not None:
        return decision.exclusion
    if not concept.used_in_practice:
        return UnmappedReason.NOT_YET_MAPPED
    return UnmappedReason.NONE_FOUND

def record_from_curation(concept, row: CurationRow) -> MappingRecord:
    if row.unmapped_reason is not None:
        extra = (
            [EvidenceAtom(EvidenceKind.MANUAL_SOURCE, row.evidence)] if row.evidence.strip() else []
        )
        return _unmapped(concept, row.ontology, row.unmapped_reason, extra)
    category = (
        MappingCategory.MANUAL_ONE_TO_ONE_CONCEPT
        if len(row.targets) == 1
        else MappingCategory.MANUAL_ONE_TO_MANY_CONCEPT
    )
    payload = row.evidence.strip() or "manual curation"
    return MappingRecord(
        concept_id=concept.concept_id,
        domain=concept.domain,
        ontology=row.ontology,
        category=category,
        level=MappingLevel.CONCEPT,
        logic=row.logic,
        targets=row.targets,
        score=None,
        evidence=(EvidenceAtom(EvidenceKind.MANUAL_SOURCE, payload),),
    )


def _record_from_candidates(concept, ontology, candidates, level) -> MappingRecord:
    by_curie: dict[str, set] = defaultdict(set)
    for cand in candidates:
        by_curie[cand.curie].update(cand.evidence)
    targets = tuple(sorted(by_curie))
    atoms = canonical_evidence(a for group in by_curie.values() for a in group)
    if level is MappingLevel.CONCEPT:
        category = (
            MappingCategory.AUTO_ONE_TO_ONE_CONCEPT
            if len(targets) == 1
            else MappingCategory.AUTO_ONE_TO_MANY_CONCEPT
        )
    else:
        category = (
            MappingCategory.AUTO_ONE_TO_ONE_ANCESTOR
            if len(targets) == 1
            else MappingCategory.AUTO_ONE_TO_MANY_ANCESTOR
        )
    return MappingRecord(
        concept_id=concept.concept_id,
        domain=concept.domain,
        ontology=ontology,
        category=category,
        level=level,
        logic=_and_logic(len(targets)),
        targets=targets,
        score=None,
        evidence=atoms,
    )


def synthesize(
    concept: ClinicalConcept,
    exact_concept,
    exact_ancestor,
    cosine_best,
    curation_rows,
    decision: RouteDecision,
    ontologies,
) -> list[MappingRecord]:
    """One MappingRecord per configured ontology for one concept.

    ``cosine_best`` maps ontology key -> ScoredPair; candidate lists come
    from the exact aligner; ``curation_rows`` are this concept's rows.
    """
    curation_by_ontology: dict[str, CurationRow] = {}
    for row in curation_rows:
        if row.ontology in curation_by_ontology:
            raise DataError(
                "CONFLICTING_CURATION",
                f"two curation rows for concept {concept.concept_id} / {row.ontology}",
            )
        curation_by_ontology[row.ontology] = row

    concept_by_ontology = defaultdict(list)
    for cand in exact_concept:
        concept_by_ontology[curie_ontology(cand.curie)].append(cand)
    ancestor_by_ontology = defaultdict(list)
    for cand in exact_ancestor:
        ancestor_by_ontology[curie_ontology(cand.curie)].append(cand)

    records = []
    for ontology in sorted(o.upper() for o in ontologies):
        curated = curation_by_ontology.get(ontology)
        if curated is not None:
            records.append(record_from_curation(concept, curated))
            continue
        if concept_by_ontology.get(ontology):
            records.append(
                _record_from_candidates(
                    concept, ontology, concept_by_ontology[ontology], MappingLevel.CONCEPT
                )
            )
            continue
        if ancestor_by_ontology.get(ontology):
            records.append(
                _record_from_candidates(
                    concept, ontology, ancestor_by_ontology[ontology], MappingLevel.ANCESTOR
                )
            )
            continue
        pair = cosine_best.get(ontology)
        if pair is not None:
            records.append(
                MappingRecord(
                    concept_id=concept.concept_id,
                    domain=concept.domain,
                    ontology=ontology,
                    category=MappingCategory.COSINE_ONE_TO_ONE_CONCEPT,
                    level=MappingLevel.CONCEPT,
                    logic="",
                    targets=(pair.curie,),
                    score=pair.score,
                    evidence=(EvidenceAtom(EvidenceKind.COSINE_SCORE, f"{pair.score:.4f}"),),
                )
            )
            continue
        records.append(_unmapped(concept, ontology, _fallback_reason(concept, decision)))
    return records


# --- measurement result expansion -----------------------------------------

SCALE_HEADER = ["concept_id", "scale", "reference_range_kind"]
TARGET_HEADER = ["concept_id", "outcome", "curie", "negated"]

_RANGE_KINDS = {"NUMERIC", "POS_NEG", "NONE"}


@dataclass(frozen=True)
class ScaleRow:
    concept_id: int
    scale: MeasurementScale
    reference_range_kind: str  # NUMERIC | POS_NEG | NONE

    def __post_init__(self):
        if self.reference_range_kind not in _RANGE_KINDS:
            raise ValueError(f"bad reference_range_kind {self.reference_range_kind!r}")


@dataclass(frozen=True)
class AuxTarget:
    ontology: str
    curie: str


def load_measurement_scales(path) -> dict[int, ScaleRow]:
    rows = {}
    for lineno, fields in _read_rows(path, SCALE_HEADER):
        if len(fields) != 3:
            raise ParseError("MALFORMED_ROW", "expected 3 columns", str(path), lineno)
        try:
            row = ScaleRow(
                concept_id=int(fields[0]),
                scale=MeasurementScale(fields[1].strip().upper()),
                reference_range_kind=fields[2].strip().upper(),
            )
        except ValueError as exc:
            raise ParseError("MALFORMED_ROW", str(exc), str(path), lineno) from None
        if row.concept_id in rows:
            raise ParseError("DUPLICATE_ID", f"concept {row.concept_id} repeated", str(path), lineno)
        rows[row.concept_id] = row
    return rows


def load_measurement_targets(path):
    """Result assignments and auxiliary targets from one file.

    A row whose second column is a result outcome is an assignment; a row
    whose second column is an ontology key is an auxiliary target (its
    negated column must be empty or 0).
    """
    outcomes = {o.value for o in MeasurementOutcome}
    assignments: dict[int, list[ResultAssignment]] = defaultdict(list)
    aux: dict[int, list[AuxTarget]] = defaultdict(list)
    for lineno, fields in _read_rows(path, TARGET_HEADER):
        if len(fields) != 4:
            raise ParseError("MALFORMED_ROW", "expected 4 columns", str(path), lineno)
        concept_raw, kind_raw, curie, negated_raw = (f.strip() for f in fields)
        try:
            concept_id = int(concept_raw)
        except ValueError:
            raise ParseError("MALFORMED_ROW", f"bad concept_id {concept_raw!r}", str(path), lineno) from None
        key = kind_raw.upper()
        if key in outcomes:
            if negated_raw not in {"0", "1"}:
                raise ParseError("MALFORMED_ROW", f"negated must be 0/1, got {negated_raw!r}", str(path), lineno)
            assignments[concept_id].append(
                ResultAssignment(
                    outcome=MeasurementOutcome(key), curie=curie, negated=negated_raw == "1"
                )
            )
        else:
            if negated_raw not in {"", "0"}:
                raise ParseError(
                    "MALFORMED_ROW", "auxiliary rows cannot be negated", str(path), lineno
                )
            aux[concept_id].append(AuxTarget(ontology=key, curie=curie))
    return dict(assignments), dict(aux)


def derive_result_type(concept: ClinicalConcept, scale_row: ScaleRow | None) -> ResultType:
    """Result typing, in order: explicit reference-range data, then ordinal
    scale or presence/screen synonyms, then quantitative scale, else unknown."""
    if scale_row is not None:
        if scale_row.reference_range_kind == "NUMERIC":
            return ResultType.NORMAL_LOW_HIGH
        if scale_row.reference_range_kind == "POS_NEG":
            return ResultType.POSITIVE_NEGATIVE
    scale = scale_row.scale if scale_row is not None else MeasurementScale.UNKNOWN
    if scale is MeasurementScale.ORDINAL or _has_presence_screen_synonym(concept):
        return ResultType.POSITIVE_NEGATIVE
    if scale is MeasurementScale.QUANTITATIVE:
        return ResultType.NORMAL_LOW_HIGH
    return ResultType.UNKNOWN_RESULT_TYPE


_PRESENCE_TOKENS = {"presence", "screen"}


def _has_presence_screen_synonym(concept: ClinicalConcept) -> bool:
    cfg = TokenizerConfig()
    for text in concept.synonyms:
        if _PRESENCE_TOKENS & set(tokenize(normalize_string(text), cfg)):
            return True
    return False


def _derive_counterpart(assignments: list[ResultAssignment]) -> list[ResultAssignment]:
    """Fill the missing half of a positive/negative pair from the other."""
    present = {a.outcome for a in assignments}
    out = list(assignments)
    pos = next((a for a in assignments if a.outcome is MeasurementOutcome.POSITIVE), None)
    neg = next((a for a in assignments if a.outcome is MeasurementOutcome.NEGATIVE), None)
    if pos is not None and MeasurementOutcome.NEGATIVE not in present:
        out.append(ResultAssignment(MeasurementOutcome.NEGATIVE, pos.curie, True))
    if neg is not None and MeasurementOutcome.POSITIVE not in present:
        out.append(ResultAssignment(MeasurementOutcome.POSITIVE, neg.curie, False))
    return out


def expand_measurements(
    concept: ClinicalConcept,
    scale_row: ScaleRow | None,
    assignments,
    aux_targets,
    ontologies,
    unspecified_sample: bool = False,
) -> tuple[list[MappingRecord], MeasurementResultSpec | None]:
    """Per-result mapping rows plus the measurement's result spec.

    Result rows target the assignment's ontology (one row per outcome,
    NORMAL/NEGATIVE rows logically negated).  Auxiliary targets attach
    once per concept.  Unspecified-sample and unknown-result-type are
    concept-level exclusions covering every configured ontology; any
    ontology this expansion leaves untouched falls back to the standard
    per-ontology precedence in the caller.
    """
    if concept.domain is not Domain.MEASUREMENT:
        raise DataError("NOT_A_MEASUREMENT", f"concept {concept.concept_id} is {concept.domain.value}")
    ontologies = sorted(o.upper() for o in ontologies)

    if unspecified_sample:
        records = [
            _unmapped(concept, ontology, UnmappedReason.UNSPECIFIED_SAMPLE)
            for ontology in ontologies
        ]
        return records, None

    result_type = derive_result_type(concept, scale_row)
    scale = scale_row.scale if scale_row is not None else MeasurementScale.UNKNOWN

    if result_type is ResultType.UNKNOWN_RESULT_TYPE:
        spec = MeasurementResultSpec(concept.concept_id, scale, result_type, ())
        records = [
            _unmapped(concept, ontology, UnmappedReason.NOT_MAPPED_TEST_TYPE)
            for ontology in ontologies
        ]
        return records, spec

    wanted = RESULT_TYPE_OUTCOMES[result_type]
    rows = [a for a in assignments if a.outcome in wanted]
    if len(rows) != len(assignments):
        stray = [a.outcome.value for a in assignments if a.outcome not in wanted]
        raise DataError(
            "OUTCOME_MISMATCH",
            f"concept {concept.concept_id}: outcomes {stray} not valid for {result_type.value}",
        )
    if result_type is ResultType.POSITIVE_NEGATIVE:
        rows = _derive_counterpart(rows)
    if not rows:
        raise DataError(
            "MISSING_TARGET_FOR_RESULT",
            f"concept {concept.concept_id} typed {result_type.value} has no result targets",
        )
    rows.sort(key=lambda a: OUTCOME_ORDER[a.outcome])
    try:
        spec = MeasurementResultSpec(concept.concept_id, scale, result_type, tuple(rows))
    except ValueError as exc:
        raise DataError("INVALID_RESULT_SPEC", str(exc)) from None

    records = []
    for a in rows:
        ontology = curie_ontology(a.curie)
        records.append(
            MappingRecord(
                concept_id=concept.concept_id,
                domain=concept.domain,
                ontology=ontology,
                category=MappingCategory.MANUAL_ONE_TO_ONE_CONCEPT,
                level=MappingLevel.CONCEPT,
                logic="NOT(0)" if a.negated else "",
                targets=(a.curie,),
                score=None,
                evidence=(
                    EvidenceAtom(EvidenceKind.MANUAL_SOURCE, f"result {a.outcome.value} assignment"),
                ),
                outcome=a.outcome,
            )
        )

    aux_by_ontology: dict[str, list[str]] = defaultdict(list)
    for target in aux_targets:
        aux_by_ontology[target.ontology.upper()].append(target.curie)
    for ontology in sorted(aux_by_ontology):
        curies = tuple(sorted(set(aux_by_ontology[ontology])))
        records.append(
            MappingRecord(
                concept_id=concept.concept_id,
                domain=concept.domain,
                ontology=ontology,
                category=(
                    MappingCategory.MANUAL_ONE_TO_ONE_CONCEPT
                    if len(curies) == 1
                    else MappingCategory.MANUAL_ONE_TO_MANY_CONCEPT
                ),
                level=MappingLevel.CONCEPT,
                logic=_and_logic(len(curies)),
                targets=curies,
                score=None,
                evidence=(EvidenceAtom(EvidenceKind.MANUAL_SOURCE, "measurement annotation"),),
            )
        )
    return records, spec


# --- evidence serialization ------------------------------------------------


def render_evidence(record: MappingRecord) -> str:
    """Pipe-joined `KIND:payload` atoms in canonical order."""
    atoms = canonical_evidence(record.evidence)
    for atom in atoms:
        if "|" in atom.payload:
            raise DataError("EVIDENCE_DELIMITER", f"payload contains '|': {atom.payload!r}")
    return "|".join(f"{a.kind.value}:{a.payload}" for a in atoms)


def parse_evidence(text: str) -> tuple[EvidenceAtom, ...]:
    """Inverse of render_evidence (parse(render(e)) == canonical e)."""
    if not text:
        return ()
    atoms = []
    for part in text.split("|"):
        kind_raw, _, payload = part.partition(":")
        try:
            kind = EvidenceKind(kind_raw)
        except ValueError:
            raise DataError("BAD_EVIDENCE", f"unknown evidence kind {kind_raw!r}") from None
        atoms.append(EvidenceAtom(kind, payload))
    return tuple(atoms)
