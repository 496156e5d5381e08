"""Batch terminology alignment: clinical vocabulary concepts mapped to
ontology classes via exact lexical/code alignment, identifier bridging,
and TF-IDF cosine scoring, with categorized, evidence-bearing records
and cross-site coverage / phenotype-score evaluation."""

__version__ = "0.1.0"
