#!/usr/bin/env python3
"""Regenerate the bundled substitute corpus and POS lexicon.

Produces src/topicbench/data/substitute_corpus.jsonl: 474 abstracts across
four topics, of which exactly 258 carry agreeing annotator labels
(65 characterization, 65 modeling, 64 processing, 64 synthesis); the other
216 are planted disagreements. Texts are synthetic keyword-composed
abstracts with per-topic vocabularies, shared domain terms, and a few
always-adjacent word pairs so phrase detection has something to find.

Deterministic: a fixed seed reproduces the files byte for byte.
"""

import json
import sys
from pathlib import Path

import numpy as np

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "topicbench" / "data"

SEED = 20240817

# Per-topic content vocabulary (nouns + verbs). Earlier entries are drawn
# more often (geometric weights), giving a Zipf-ish frequency profile.
TOPIC_WORDS = {
    "characterization": [
        ("density", "noun"), ("sensitivity", "noun"), ("crystal", "noun"),
        ("measurement", "noun"), ("spectroscopy", "noun"), ("stability", "noun"),
        ("diffraction", "noun"), ("morphology", "noun"), ("calorimetry", "noun"),
        ("hardness", "noun"), ("porosity", "noun"), ("impact", "noun"),
        ("friction", "noun"), ("spectrum", "noun"), ("microscopy", "noun"),
        ("measured", "verb"), ("characterized", "verb"), ("observed", "verb"),
        ("exhibited", "verb"), ("determined", "verb"), ("recorded", "verb"),
        ("decomposition", "noun"), ("ignition", "noun"), ("threshold", "noun"),
    ],
    "modeling": [
        ("simulation", "noun"), ("model", "noun"), ("dynamics", "noun"),
        ("potential", "noun"), ("computation", "noun"), ("prediction", "noun"),
        ("equation", "noun"), ("parameter", "noun"), ("algorithm", "noun"),
        ("lattice", "noun"), ("trajectory", "noun"), ("gradient", "noun"),
        ("functional", "noun"), ("hamiltonian", "noun"), ("ensemble", "noun"),
        ("simulated", "verb"), ("predicted", "verb"), ("computed", "verb"),
        ("converged", "verb"), ("optimized", "verb"), ("integrated", "verb"),
        ("bond", "noun"), ("orbital", "noun"), ("approximation", "noun"),
    ],
    "processing": [
        ("formulation", "noun"), ("binder", "noun"), ("extrusion", "noun"),
        ("casting", "noun"), ("coating", "noun"), ("milling", "noun"),
        ("granulation", "noun"), ("curing", "noun"), ("slurry", "noun"),
        ("mixing", "noun"), ("pressing", "noun"), ("drying", "noun"),
        ("particle", "noun"), ("grain", "noun"), ("additive", "noun"),
        ("processed", "verb"), ("blended", "verb"), ("extruded", "verb"),
        ("coated", "verb"), ("milled", "verb"), ("consolidated", "verb"),
        ("viscosity", "noun"), ("plasticizer", "noun"), ("batch", "noun"),
    ],
    "synthesis": [
        ("synthesis", "noun"), ("reaction", "noun"), ("nitration", "noun"),
        ("precursor", "noun"), ("yield", "noun"), ("route", "noun"),
        ("reagent", "noun"), ("catalyst", "noun"), ("intermediate", "noun"),
        ("purification", "noun"), ("solvent", "noun"), ("reflux", "noun"),
        ("substitution", "noun"), ("cyclization", "noun"), ("salt", "noun"),
        ("synthesized", "verb"), ("reacted", "verb"), ("isolated", "verb"),
        ("purified", "verb"), ("nitrated", "verb"), ("afforded", "verb"),
        ("anion", "noun"), ("cation", "noun"), ("derivative", "noun"),
    ],
}

# Shared domain vocabulary; appears in all topics.
SHARED_WORDS = [
    ("energetic", "adj"), ("explosive", "noun"), ("propellant", "noun"),
    ("material", "noun"), ("compound", "noun"), ("sample", "noun"),
    ("performance", "noun"), ("temperature", "noun"), ("pressure", "noun"),
    ("detonation", "noun"), ("molecule", "noun"), ("structure", "noun"),
    ("energy", "noun"), ("study", "noun"), ("result", "noun"),
    ("analysis", "noun"), ("property", "noun"), ("behavior", "noun"),
]

# Chemical names deliberately absent from the lexicon (unknown tokens are
# kept by the POS filter).
CHEMICALS = ["rdx", "hmx", "tatb", "petn", "cl20", "fox7", "tnt", "nto"]

# Long-tail pseudo-chemical terms, also absent from the lexicon. Mostly
# singletons; they give the corpus a realistic distinct-token count.
RARE_PREFIXES = ["di", "tri", "tetra", "penta", "hexa", "azido", "nitro",
                 "amino", "cyclo", "poly", "iso", "bis"]
RARE_STEMS = ["nitro", "azo", "furazan", "tetrazine", "triazole", "oxadiazole",
              "glycidyl", "nitramine", "picryl", "styphn", "azide", "perchlor",
              "borane", "oxetane", "acetylene"]
RARE_SUFFIXES = ["ate", "ide", "ole", "ane", "yl"]
RARE_TERMS = [p + s + x for p in RARE_PREFIXES for s in RARE_STEMS for x in RARE_SUFFIXES]

# Glue words carried in the lexicon with non-noun/non-verb tags so the POS
# filter removes them. Words shorter than two characters are dropped by the
# length rule regardless.
GLUE_WORDS = [
    ("the", "det"), ("this", "det"), ("these", "det"), ("each", "det"),
    ("with", "prep"), ("from", "prep"), ("under", "prep"), ("for", "prep"),
    ("into", "prep"), ("during", "prep"), ("between", "prep"), ("toward", "prep"),
    ("and", "conj"), ("while", "conj"), ("was", "aux"), ("were", "aux"),
    ("novel", "adj"), ("high", "adj"), ("low", "adj"), ("improved", "adj"),
    ("rapid", "adj"), ("strongly", "adv"), ("systematically", "adv"),
    ("significantly", "adv"), ("further", "adv"), ("relative", "adj"),
    # title connectives; must be tagged or the unknown-token rule keeps them
    ("of", "prep"), ("by", "prep"), ("via", "prep"), ("to", "prep"),
    ("in", "prep"), ("on", "prep"), ("at", "prep"), ("as", "prep"),
]

# Always-adjacent pairs planted per topic; their member words occur nowhere
# else, so phrase scoring sees a clean signal.
TOPIC_PAIRS = {
    "characterization": ("melting", "point"),
    "modeling": ("force", "field"),
    "processing": ("twin", "screw"),
    "synthesis": ("ring", "opening"),
}
PAIR_TAGS = {
    "melting": "noun", "point": "noun", "force": "noun", "field": "noun",
    "twin": "noun", "screw": "noun", "ring": "noun", "opening": "noun",
}

TITLES = {
    "characterization": "{w0} and {w1} of {chem} {shared}",
    "modeling": "{w0} of {chem} {shared} by {w1}",
    "processing": "{w0} and {w1} for {chem} {shared}",
    "synthesis": "{w0} of {chem} via {w1}",
}


def geometric_choice(rng, items, p=0.13):
    """Pick an item with geometrically decaying weights over list order."""
    weights = np.array([(1 - p) ** i for i in range(len(items))])
    weights /= weights.sum()
    return items[rng.choice(len(items), p=weights)]


def make_sentence(rng, topic, mix_topic=None):
    """Compose one keyword sentence; mix_topic injects a second topic's words."""
    pool = TOPIC_WORDS[topic]
    words = []
    n_content = int(rng.integers(4, 7))
    for i in range(n_content):
        src = pool
        if mix_topic is not None and rng.random() < 0.45:
            src = TOPIC_WORDS[mix_topic]
        elif mix_topic is None and rng.random() < 0.15:
            src = TOPIC_WORDS[["characterization", "modeling", "processing",
                               "synthesis"][int(rng.integers(0, 4))]]
        if rng.random() < 0.28:
            words.append(geometric_choice(rng, SHARED_WORDS)[0])
        else:
            words.append(geometric_choice(rng, src)[0])
    if rng.random() < 0.30:
        words.insert(int(rng.integers(0, len(words) + 1)), CHEMICALS[int(rng.integers(0, len(CHEMICALS)))])
    if rng.random() < 0.55:
        words.insert(int(rng.integers(0, len(words) + 1)),
                     RARE_TERMS[int(rng.integers(0, len(RARE_TERMS)))])
    if rng.random() < 0.07:
        a, b = TOPIC_PAIRS[topic]
        pos = int(rng.integers(0, len(words) + 1))
        words[pos:pos] = [a, b]
    # weave in glue
    out = [GLUE_WORDS[int(rng.integers(0, 4))][0].capitalize()]
    for w in words:
        if rng.random() < 0.55:
            out.append(GLUE_WORDS[int(rng.integers(0, len(GLUE_WORDS)))][0])
        out.append(w)
    return " ".join(out) + "."


def make_doc(rng, topic, mix_topic=None):
    w0 = geometric_choice(rng, TOPIC_WORDS[topic])[0]
    w1 = geometric_choice(rng, TOPIC_WORDS[mix_topic or topic])[0]
    chem = CHEMICALS[int(rng.integers(0, len(CHEMICALS)))]
    shared = geometric_choice(rng, SHARED_WORDS)[0]
    title = TITLES[topic].format(w0=w0, w1=w1, chem=chem, shared=shared)
    n_sentences = int(rng.integers(4, 7))
    abstract = " ".join(make_sentence(rng, topic, mix_topic) for _ in range(n_sentences))
    return title.capitalize(), abstract


def main():
    rng = np.random.default_rng(SEED)
    topics = list(TOPIC_WORDS)
    consensus_counts = {"characterization": 65, "modeling": 65, "processing": 64, "synthesis": 64}

    records = []
    for topic, n in consensus_counts.items():
        for _ in range(n):
            title, abstract = make_doc(rng, topic)
            records.append({"title": title, "abstract": abstract, "label_a": topic, "label_b": topic})
    # 216 planted disagreements: text mixes two topics, annotators split
    for i in range(216):
        a = topics[i % 4]
        b = topics[(i + 1 + i // 4) % 4]
        if a == b:
            b = topics[(i + 2) % 4]
        title, abstract = make_doc(rng, a, mix_topic=b)
        records.append({"title": title, "abstract": abstract, "label_a": a, "label_b": b})

    order = rng.permutation(len(records))
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    corpus_path = OUT_DIR / "substitute_corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as fh:
        for new_id, old_idx in enumerate(order, start=1):
            rec = dict(records[old_idx])
            rec = {"id": f"em-{new_id:04d}", **rec}
            fh.write(json.dumps(rec, sort_keys=False) + "\n")

    lexicon_path = OUT_DIR / "pos_lexicon.tsv"
    entries = {}
    for pool in TOPIC_WORDS.values():
        entries.update(pool)
    entries.update(SHARED_WORDS)
    entries.update(GLUE_WORDS)
    entries.update(PAIR_TAGS)
    with lexicon_path.open("w", encoding="utf-8") as fh:
        fh.write("# token<TAB>tag; tokens absent from this file pass the POS filter\n")
        for token in sorted(entries):
            fh.write(f"{token}\t{entries[token]}\n")

    n_agree = sum(1 for r in records if r["label_a"] == r["label_b"])
    print(f"wrote {corpus_path} ({len(records)} records, {n_agree} consensus)")
    print(f"wrote {lexicon_path} ({len(entries)} entries)")


if __name__ == "__main__":
    sys.exit(main())
