"""Bag-of-words TF-IDF vector space model and cosine scoring.

One matrix row per input string (concept and class labels/synonyms from
both sides).  Weighting is pinned to tf(t,d) = raw count and
idf(t) = ln((1 + N) / (1 + df(t))) + 1 with L2-normalized rows; the
variant is recorded in the model metadata for reproducibility.

Scoring walks a sparse row-by-row product, so only string pairs sharing
at least one token are ever evaluated; orthogonal pairs score zero and
are never candidates.  Embeddings are built for every concept whether or
not exact alignment already succeeded: the scorer never consults
alignment results.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse

from .core import curie_ontology
from .errors import DataError
from .lexical import TokenizerConfig, normalize_string, tokenize

IDF_VARIANT = "ln((1+N)/(1+df))+1, tf=count, l2"


class Side(Enum):
    CLINICAL = "CLINICAL"
    ONTOLOGY = "ONTOLOGY"


class StringRole(Enum):
    LABEL = "LABEL"
    SYNONYM = "SYNONYM"


@dataclass(frozen=True)
class RowMeta:
    """Provenance of one document row: who owns the string and its role."""

    owner: int | str
    side: Side
    role: StringRole
    text: str


@dataclass(frozen=True)
class SimilarityConfig:
    score_floor: float = 0.25
    keep_fraction: float = 0.75

    def __post_init__(self):
        if not (0.0 <= self.score_floor <= 1.0):
            raise ValueError(f"score_floor out of range: {self.score_floor}")
        if not (0.0 < self.keep_fraction <= 1.0):
            raise ValueError(f"keep_fraction out of range: {self.keep_fraction}")


@dataclass(frozen=True)
class ScoredPair:
    concept_id: int
    curie: str
    score: float
    concept_string: str
    class_string: str


@dataclass
class SimilarityModel:
    vocabulary: dict[str, int]
    matrix: sparse.csr_matrix
    rows: tuple[RowMeta, ...]
    idf_variant: str = IDF_VARIANT


def build_corpus(concepts, classes, cfg: TokenizerConfig):
    """Tokenized documents for every label and synonym string on both sides.

    Order is deterministic: concepts sorted by id then label-first,
    classes sorted by CURIE likewise.
    """
    docs = []
    for concept in sorted(concepts, key=lambda c: c.concept_id):
        strings = [(StringRole.LABEL, concept.label)]
        strings += [(StringRole.SYNONYM, s) for s in concept.synonyms]
        for role, text in strings:
            norm = normalize_string(text)
            docs.append(
                (RowMeta(concept.concept_id, Side.CLINICAL, role, norm), tuple(tokenize(norm, cfg)))
            )
    for cls in sorted(classes, key=lambda k: k.curie):
        if cls.deprecated:
            continue
        strings = [(StringRole.LABEL, cls.label)]
        strings += [(StringRole.SYNONYM, s.text) for s in cls.synonyms]
        for role, text in strings:
            norm = normalize_string(text)
            docs.append((RowMeta(cls.curie, Side.ONTOLOGY, role, norm), tuple(tokenize(norm, cfg))))
    return docs


def fit(docs) -> SimilarityModel:
    """Learn the TF-IDF model over tokenized documents.

    Rows for strings that produced no tokens stay as zero vectors; every
    other row has unit Euclidean norm.
    """
    if not docs:
        raise DataError("EMPTY_CORPUS", "no documents to fit")
    n_docs = len(docs)
    df: Counter = Counter()
    for _, tokens in docs:
        df.update(set(tokens))
    vocabulary = {token: i for i, token in enumerate(sorted(df))}
    idf = np.empty(len(vocabulary))
    for token, col in vocabulary.items():
        idf[col] = math.log((1.0 + n_docs) / (1.0 + df[token])) + 1.0

    indptr = [0]
    indices = []
    data = []
    for _, tokens in docs:
        cells = sorted((vocabulary[t], count) for t, count in Counter(tokens).items())
        vals = np.array([count * idf[col] for col, count in cells], dtype=np.float64)
        norm = math.sqrt(float(np.dot(vals, vals))) if len(vals) else 0.0
        if norm > 0:
            vals = vals / norm
        indices.extend(col for col, _ in cells)
        data.extend(vals.tolist())
        indptr.append(len(indices))

    matrix = sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(n_docs, len(vocabulary)),
    )
    return SimilarityModel(
        vocabulary=vocabulary, matrix=matrix, rows=tuple(meta for meta, _ in docs)
    )


def score_pair_strings(model: SimilarityModel, row_a: int, row_b: int) -> float:
    """Cosine of two model rows (exact dot product of normalized rows)."""
    a = model.matrix.getrow(row_a)
    b = model.matrix.getrow(row_b)
    return float(a.multiply(b).sum())


def score_concept_pairs(
    model: SimilarityModel,
    concepts,
    classes,
    routing=None,
    chunk_rows: int = 4096,
) -> list[ScoredPair]:
    """Best cosine per (concept, class) pair over all their string rows.

    ``routing`` maps concept_id -> allowed ontology keys; pairs outside it
    are skipped.  Only pairs sharing at least one token appear (all other
    scores are exactly zero).  Output is sorted by (concept_id, curie).
    """
    concept_ids = {c.concept_id for c in concepts}
    curies = {k.curie for k in classes if not k.deprecated}

    clin_rows = []
    onto_rows = []
    for i, meta in enumerate(model.rows):
        if meta.side is Side.CLINICAL and meta.owner in concept_ids:
            clin_rows.append(i)
        elif meta.side is Side.ONTOLOGY and meta.owner in curies:
            onto_rows.append(i)
    if not clin_rows or not onto_rows:
        return []

    onto_matrix = model.matrix[onto_rows].T.tocsc()
    onto_owner = [model.rows[i].owner for i in onto_rows]

    best: dict[tuple[int, str], tuple[float, int, int]] = {}
    for start in range(0, len(clin_rows), chunk_rows):
        chunk = clin_rows[start : start + chunk_rows]
        product = (model.matrix[chunk] @ onto_matrix).tocsr()
        product.sort_indices()
        coo = product.tocoo()
        for local_row, col, score in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
            if score == 0.0:
                continue
            row_i = chunk[local_row]
            row_j = onto_rows[col]
            concept_id = model.rows[row_i].owner
            curie = onto_owner[col]
            if routing is not None:
                allowed = routing.get(concept_id)
                if allowed is None or curie_ontology(curie) not in allowed:
                    continue
            key = (concept_id, curie)
            cur = best.get(key)
            if cur is None or score > cur[0]:
                best[key] = (score, row_i, row_j)

    pairs = []
    for (concept_id, curie), (score, row_i, row_j) in best.items():
        pairs.append(
            ScoredPair(
                concept_id=concept_id,
                curie=curie,
                score=min(score, 1.0),
                concept_string=model.rows[row_i].text,
                class_string=model.rows[row_j].text,
            )
        )
    pairs.sort(key=lambda p: (p.concept_id, p.curie))
    return pairs


def filter_pairs(pairs, cfg: SimilarityConfig) -> list[ScoredPair]:
    """Drop below-floor scores, then keep the top fraction of survivors.

    Survivors are sorted by score descending (ties: concept_id, curie
    ascending) and the first ceil(keep_fraction * k) are kept.
    """
    survivors = [p for p in pairs if p.score >= cfg.score_floor]
    survivors.sort(key=lambda p: (-p.score, p.concept_id, p.curie))
    keep = math.ceil(cfg.keep_fraction * len(survivors))
    return survivors[:keep]


def best_per_concept(pairs) -> dict[tuple[int, str], ScoredPair]:
    """Argmax score per (concept, ontology); score ties take the smallest CURIE."""
    best: dict[tuple[int, str], ScoredPair] = {}
    for pair in pairs:
        key = (pair.concept_id, curie_ontology(pair.curie))
        cur = best.get(key)
        if cur is None or pair.score > cur.score or (
            pair.score == cur.score and pair.curie < cur.curie
        ):
            best[key] = pair
    return best


def dump_model(model: SimilarityModel, path) -> None:
    """Sorted text dump (vocabulary, rows, non-zeros) for diff-based review."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# idf_variant\t{model.idf_variant}\n")
        fh.write(f"# documents\t{model.matrix.shape[0]}\tvocabulary\t{model.matrix.shape[1]}\n")
        for token in sorted(model.vocabulary):
            fh.write(f"V\t{token}\t{model.vocabulary[token]}\n")
        csr = model.matrix.tocsr()
        for i, meta in enumerate(model.rows):
            row = csr.getrow(i)
            cells = " ".join(
                f"{col}:{val:.12g}" for col, val in zip(row.indices.tolist(), row.data.tolist())
            )
            fh.write(f"R\t{i}\t{meta.side.value}\t{meta.owner}\t{meta.role.value}\t{cells}\n")
