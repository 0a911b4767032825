"""Regenerates data/ontology/demo_graph.jsonl."""
import json
import sys

CONCEPTS = [
    # id, name, synonyms, semantic type, edges (to, relation)
    ("C0001", "Pneumonia", ["pneumonia"], "disease", [("C0002", "associated_finding"), ("C0030", "is_a")]),
    ("C0002", "Lung consolidation", ["lung consolidation", "consolidation"], "finding", [("C0003", "finding_site")]),
    ("C0003", "Lung", ["lung", "lungs"], "body_part", []),
    ("C0004", "Diabetes mellitus", ["diabetes", "diabetes mellitus", "dm", "type ii diabetes"], "disease",
     [("C0005", "is_a"), ("C0039", "associated_finding")]),
    ("C0005", "Endocrine system disorder", ["endocrine system disorder", "endocrine disorder"], "disease", []),
    ("C0006", "Hypertension", ["hypertension", "htn", "high blood pressure"], "disease", [("C0031", "is_a")]),
    ("C0007", "Asthma", ["asthma"], "disease", [("C0030", "is_a")]),
    ("C0008", "Anemia", ["anemia"], "disease", [("C0032", "is_a")]),
    ("C0009", "Sepsis", ["sepsis"], "disease", [("C0033", "is_a")]),
    ("C0010", "Cirrhosis", ["cirrhosis"], "disease", [("C0034", "is_a")]),
    ("C0011", "Hepatitis", ["hepatitis"], "disease", [("C0034", "is_a"), ("C0033", "is_a")]),
    ("C0012", "Gout", ["gout"], "disease", [("C0035", "is_a")]),
    ("C0013", "Migraine", ["migraine"], "disease", [("C0036", "is_a")]),
    ("C0014", "Epilepsy", ["epilepsy", "seizure disorder"], "disease", [("C0036", "is_a")]),
    ("C0015", "Psoriasis", ["psoriasis"], "disease", [("C0037", "is_a")]),
    ("C0016", "Arthritis", ["arthritis"], "disease", [("C0035", "is_a")]),
    ("C0017", "Bronchitis", ["bronchitis"], "disease", [("C0030", "is_a")]),
    ("C0018", "Cellulitis", ["cellulitis"], "disease", [("C0037", "is_a"), ("C0033", "is_a")]),
    ("C0019", "Pancreatitis", ["pancreatitis"], "disease", [("C0038", "is_a")]),
    ("C0020", "Nephritis", ["nephritis"], "disease", [("C0040", "is_a")]),
    ("C0021", "Gastritis", ["gastritis"], "disease", [("C0038", "is_a")]),
    ("C0022", "Dementia", ["dementia"], "disease", [("C0041", "is_a")]),
    ("C0023", "Depression", ["depression"], "disease", [("C0041", "is_a")]),
    ("C0024", "Obesity", ["obesity"], "disease", [("C0039", "is_a")]),
    ("C0025", "Hypothyroidism", ["hypothyroidism"], "disease", [("C0005", "is_a")]),
    ("C0026", "Angina", ["angina", "chest pain"], "finding", [("C0031", "is_a"), ("C0042", "finding_site")]),
    ("C0027", "Tuberculosis", ["tuberculosis", "tb"], "disease", [("C0030", "is_a"), ("C0033", "is_a")]),
    ("C0028", "Heart failure", ["heart failure", "congestive heart failure", "chf"], "disease",
     [("C0031", "is_a"), ("C0042", "finding_site")]),
    ("C0029", "Kidney", ["kidney", "kidneys"], "body_part", [("C0040", "finding_site")]),
    ("C0030", "Respiratory disorder", ["respiratory disorder", "lung disorder"], "disease", [("C0003", "finding_site")]),
    ("C0031", "Cardiovascular disorder", ["cardiovascular disorder", "heart disease"], "disease", []),
    ("C0032", "Blood disorder", ["blood disorder"], "disease", []),
    ("C0033", "Infectious disease", ["infection", "infectious disease"], "disease", []),
    ("C0034", "Liver disorder", ["liver disease", "liver disorder"], "disease", [("C0043", "finding_site")]),
    ("C0035", "Joint disorder", ["joint disorder"], "disease", []),
    ("C0036", "Neurological disorder", ["neurological disorder"], "disease", [("C0044", "finding_site")]),
    ("C0037", "Skin disorder", ["skin disorder", "rash"], "disease", []),
    ("C0038", "Gastrointestinal disorder", ["gastrointestinal disorder"], "disease", []),
    ("C0039", "Metabolic disorder", ["metabolic disorder"], "disease", []),
    ("C0040", "Kidney disorder", ["kidney disease", "renal disease"], "disease", []),
    ("C0041", "Mental disorder", ["mental disorder"], "disease", [("C0044", "finding_site")]),
    ("C0042", "Heart", ["heart"], "body_part", []),
    ("C0043", "Liver", ["liver"], "body_part", []),
    ("C0044", "Brain", ["brain"], "body_part", []),
    ("C0045", "Insulin", ["insulin"], "substance", [("C0004", "treats")]),
]


def main(path):
    with open(path, "w", encoding="utf-8") as out:
        for cid, name, synonyms, stype, edges in CONCEPTS:
            record = {"id": cid, "name": name, "synonyms": synonyms, "semantic_type": stype,
                      "edges": [{"to": t, "relation": r} for t, r in edges]}
            out.write(json.dumps(record) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/ontology/demo_graph.jsonl")
