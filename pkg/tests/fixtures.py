"""Fixture file builders shared across the test suite.

``write_condition_fixture`` builds the nine-concept condition corpus used
by the golden-category tests (one concept per mapping category plus two
purposeful exclusions); ``write_measurement_fixture`` builds the two
worked measurement examples plus a narrative-scale concept.  Both write
every input file format the CLI consumes, so they double as round-trip
material for parser tests.
"""

from __future__ import annotations

from pathlib import Path

CODE_MAP_CSV = """raw_prefix,canonical_prefix
snomedct_us,SNOMED
snomed-ct,SNOMED
sctid,SNOMED
umls,UMLS
lnc,LOINC
"""

STOPWORDS = "the\nof\nin\nand\non\nby\n"


def _mrconso_line(cui: str, sab: str, code: str, text: str) -> str:
    fields = [""] * 18
    fields[0] = cui
    fields[1] = "ENG"
    fields[11] = sab
    fields[12] = "PT"
    fields[13] = code
    fields[14] = text
    return "|".join(fields) + "|"


def _mrsty_line(cui: str, sty: str) -> str:
    return f"{cui}|T000|A1.2|{sty}|AT000|256|"


def _ontology_line(curie, ontology, label, synonyms=(), xrefs=(), definition=None, deprecated=False):
    import json

    return json.dumps(
        {
            "curie": curie,
            "ontology": ontology,
            "label": label,
            "definition": definition,
            "synonyms": [{"text": t, "kind": k} for t, k in synonyms],
            "xrefs": list(xrefs),
            "deprecated": deprecated,
        }
    )


def write_condition_fixture(root: Path) -> dict[str, str]:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)

    concepts = [
        # concept_id vocabulary code label synonyms domain used record_count
        ("22945", "SNOMED", "70305005", "Horizontal overbite", "Overjet", "CONDITION", "1", "12"),
        ("22722", "SNOMED", "5055000", "Accessory salivary gland", "", "CONDITION", "1", "6"),
        ("90001", "SNOMED", "10890000", "Disorder of salivary gland", "", "CONDITION", "0", "0"),
        (
            "78854",
            "SNOMED",
            "9147009",
            "Osteopoikilosis",
            "Osteopoikilosis|Duschke-Ollendorff syndrome",
            "CONDITION",
            "1",
            "7",
        ),
        (
            "74185",
            "SNOMED",
            "209271004",
            "Open fracture of cuboid bone of foot",
            "",
            "CONDITION",
            "1",
            "3",
        ),
        ("90002", "SNOMED", "125605004", "Fracture of bone", "", "CONDITION", "0", "0"),
        ("90003", "SNOMED", "118932009", "Disorder of foot", "", "CONDITION", "0", "0"),
        ("4070954", "SNOMED", "37693003", "Mesiodens", "", "CONDITION", "1", "4"),
        ("439140", "SNOMED", "127062003", "Neonatal polycythemia", "", "CONDITION", "1", "9"),
        ("4147326", "SNOMED", "162397003", "Sore throat symptom", "", "CONDITION", "1", "22"),
        ("432498", "SNOMED", "284196006", "Burn of axilla", "", "CONDITION", "1", "5"),
        ("4056963", "SNOMED", "371883000", "Patient on self-medication", "", "CONDITION", "1", "2"),
    ]
    header = "concept_id\tvocabulary\tconcept_code\tlabel\tsynonyms\tdomain\tused_in_practice\trecord_count"
    (root / "concepts.tsv").write_text(
        header + "\n" + "\n".join("\t".join(row) for row in concepts) + "\n"
    )

    (root / "concept_ancestors.tsv").write_text(
        "concept_id\tancestor_concept_id\n"
        "22722\t90001\n"
        "74185\t90002\n"
        "74185\t90003\n"
    )

    classes = [
        _ontology_line(
            "HP:0011095",
            "HP",
            "Overjet",
            xrefs=["SNOMEDCT_US:70305005", "UMLS:C0596028"],
        ),
        _ontology_line(
            "HP:0010286",
            "HP",
            "Abnormal salivary gland morphology",
            xrefs=["SNOMEDCT_US:10890000", "UMLS:C0036093"],
        ),
        _ontology_line(
            "HP:0033050",
            "HP",
            "Throat pain",
            synonyms=[("Sore throat", "EXACT")],
        ),
        _ontology_line("HP:0003623", "HP", "Neonatal onset"),
        _ontology_line("HP:0001901", "HP", "Polycythemia"),
        _ontology_line(
            "MONDO:0001414",
            "MONDO",
            "Osteopoikilosis",
            synonyms=[("osteopoikilosis", "EXACT")],
            xrefs=["SNOMEDCT_US:9147009"],
        ),
        _ontology_line(
            "MONDO:0008157",
            "MONDO",
            "Buschke-Ollendorff syndrome",
            synonyms=[("Duschke-Ollendorff syndrome", "EXACT")],
        ),
        _ontology_line("MONDO:0008533", "MONDO", "Supernumerary teeth"),
        _ontology_line(
            "MONDO:0005315",
            "MONDO",
            "Bone fracture",
            synonyms=[("Fracture of bone", "EXACT")],
            xrefs=["SNOMEDCT_US:125605004"],
        ),
        _ontology_line(
            "MONDO:0044989",
            "MONDO",
            "Foot disease",
            synonyms=[("Disorder of foot", "EXACT")],
            xrefs=["SNOMEDCT_US:118932009"],
        ),
        # Deprecated class sharing a label; must never surface as a target.
        _ontology_line("MONDO:0099999", "MONDO", "Osteopoikilosis", deprecated=True),
    ]
    (root / "ontology.jsonl").write_text("\n".join(classes) + "\n")

    mrconso = [
        _mrconso_line("C0596028", "SNOMEDCT_US", "70305005", "Overjet"),
        _mrconso_line("C0036093", "SNOMEDCT_US", "10890000", "Disorder of salivary gland"),
        _mrconso_line("C0029442", "SNOMEDCT_US", "9147009", "Osteopoikilosis"),
        _mrconso_line("C0242429", "SNOMEDCT_US", "162397003", "Sore throat symptom"),
        _mrconso_line("C9000002", "SNOMEDCT_US", "284196006", "Burn of axilla"),
        _mrconso_line("C9000001", "SNOMEDCT_US", "371883000", "Patient on self-medication"),
    ]
    (root / "MRCONSO.RRF").write_text("\n".join(mrconso) + "\n")

    mrsty = [
        _mrsty_line("C0596028", "Finding"),
        _mrsty_line("C0029442", "Disease or Syndrome"),
        _mrsty_line("C0242429", "Sign or Symptom"),
        _mrsty_line("C9000002", "Injury or Poisoning"),
        _mrsty_line("C9000001", "Activity"),
    ]
    (root / "MRSTY.RRF").write_text("\n".join(mrsty) + "\n")

    (root / "routing_policy.tsv").write_text(
        "semantic_type\taction\tvalue\n"
        "Finding\tALLOW\tHP\n"
        "Sign or Symptom\tALLOW\tHP\n"
        "Disease or Syndrome\tALLOW\tMONDO\n"
        "Injury or Poisoning\tEXCLUDE\tINJURY\n"
        "Activity\tEXCLUDE\tFINDING\n"
    )

    (root / "curation.tsv").write_text(
        "concept_id\tontology\tlogic\ttargets\tevidence\tunmapped_reason\n"
        "4070954\tMONDO\t\tMONDO:0008533\tPMID:21998774\t\n"
        "439140\tHP\tAND(0,1)\tHP:0003623|HP:0001901\texpert curation\t\n"
    )

    (root / "source_code_vocab_map.csv").write_text(CODE_MAP_CSV)
    (root / "stopwords.txt").write_text(STOPWORDS)

    return {
        "concepts": str(root / "concepts.tsv"),
        "ancestors": str(root / "concept_ancestors.tsv"),
        "ontology": str(root / "ontology.jsonl"),
        "mrconso": str(root / "MRCONSO.RRF"),
        "mrsty": str(root / "MRSTY.RRF"),
        "routing": str(root / "routing_policy.tsv"),
        "curation": str(root / "curation.tsv"),
        "code_map": str(root / "source_code_vocab_map.csv"),
        "stopwords": str(root / "stopwords.txt"),
    }


def write_measurement_fixture(root: Path) -> dict[str, str]:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)

    header = "concept_id\tvocabulary\tconcept_code\tlabel\tsynonyms\tdomain\tused_in_practice\trecord_count"
    concepts = [
        (
            "3000001",
            "LOINC",
            "12460-2",
            "Corticotropin [Mass/volume] in Plasma --4th specimen post XXX challenge",
            "",
            "MEASUREMENT",
            "1",
            "40",
        ),
        (
            "3000002",
            "LOINC",
            "19343-3",
            "Amphetamine [Presence] in Urine by Screen Method",
            "Amphetamine screen",
            "MEASUREMENT",
            "1",
            "15",
        ),
        ("3000003", "LOINC", "99999-9", "Interpretive narrative note", "", "MEASUREMENT", "1", "5"),
    ]
    (root / "concepts.tsv").write_text(
        header + "\n" + "\n".join("\t".join(row) for row in concepts) + "\n"
    )

    classes = [
        _ontology_line("HP:0003154", "HP", "Increased circulating ACTH level"),
        _ontology_line("HP:0002920", "HP", "Decreased circulating ACTH level"),
        _ontology_line("HP:0011043", "HP", "Abnormality of circulating adrenocorticotropin level"),
        _ontology_line("HP:0500112", "HP", "Positive urine amphetamine test"),
        _ontology_line("UBERON:0001969", "UBERON", "Blood plasma"),
        _ontology_line("UBERON:0001088", "UBERON", "Urine"),
        _ontology_line("CHEBI:2679", "CHEBI", "Amphetamine"),
    ]
    (root / "ontology.jsonl").write_text("\n".join(classes) + "\n")

    (root / "measurement_scales.tsv").write_text(
        "concept_id\tscale\treference_range_kind\n"
        "3000001\tQUANTITATIVE\tNUMERIC\n"
        "3000002\tORDINAL\tNONE\n"
        "3000003\tNARRATIVE\tNONE\n"
    )

    (root / "measurement_targets.tsv").write_text(
        "concept_id\toutcome\tcurie\tnegated\n"
        "3000001\tHIGH\tHP:0003154\t0\n"
        "3000001\tLOW\tHP:0002920\t0\n"
        "3000001\tNORMAL\tHP:0011043\t1\n"
        "3000002\tPOSITIVE\tHP:0500112\t0\n"
        "3000001\tUBERON\tUBERON:0001969\t0\n"
        "3000002\tUBERON\tUBERON:0001088\t0\n"
        "3000002\tCHEBI\tCHEBI:2679\t0\n"
    )

    (root / "source_code_vocab_map.csv").write_text(CODE_MAP_CSV)

    return {
        "concepts": str(root / "concepts.tsv"),
        "ontology": str(root / "ontology.jsonl"),
        "scales": str(root / "measurement_scales.tsv"),
        "targets": str(root / "measurement_targets.tsv"),
        "code_map": str(root / "source_code_vocab_map.csv"),
    }
