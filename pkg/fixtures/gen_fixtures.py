#!/usr/bin/env python3
"""Regenerate the derived demo fixtures: web_fixtures.json and head.json.

The web fixture file is keyed by a hash of the query text, so it is
written by code instead of by hand. The demo head is a linear head
fitted by least squares so that, on the scorer inputs produced by the
demo search + compression scripts, it reproduces the documented scores
exactly. Everything else under fixtures/mock_demo is hand-written.

Run from the repository root:  python3 fixtures/gen_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from diva.agent import Question, run_agentic_search
from diva.compress import compress, render_scorer_input, render_scorer_input_parts
from diva.config import load_config
from diva.pipelines import read_bench
from diva.retrieval import load_corpus_jsonl
from diva.retrieval.web import query_key
from diva.scorer import ScorerHead, extract_features, predict_score, save_head

DEMO = Path(__file__).resolve().parent / "mock_demo"

# Replayed web search results, keyed by the exact query strings the
# demo search script emits.
WEB_HITS: dict[str, list[dict[str, str]]] = {
    "composer of La costanza trionfante degli amori e degli odi": [
        {
            "title": "La costanza trionfante degl'amori e de gl'odii - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/La_costanza_trionfante",
            "snippet": "La costanza trionfante degl'amori e de gl'odii is an opera by Antonio Vivaldi with an Italian libretto by Antonio Marchi, first performed in Venice in 1716.",
        },
        {
            "title": "Antonio Vivaldi - Operas",
            "url": "https://example.org/vivaldi-operas",
            "snippet": "Vivaldi's early operas include Ottone in villa (1713) and La costanza trionfante (1716).",
        },
    ],
    "birthplace of Antonio Vivaldi": [
        {
            "title": "Antonio Vivaldi - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/Antonio_Vivaldi",
            "snippet": "Antonio Lucio Vivaldi was an Italian composer born on 4 March 1678 in Venice, then the capital of the Venetian Republic.",
        },
        {
            "title": "Antonio Vivaldi | Biography",
            "url": "https://example.org/vivaldi-biography",
            "snippet": "Born in Venice, Italy, Vivaldi was ordained as a priest and became one of the most influential Baroque composers.",
        },
    ],
    "famous bridge in Venice": [
        {
            "title": "Rialto Bridge - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/Rialto_Bridge",
            "snippet": "The Rialto Bridge (Ponte di Rialto) is the oldest of the four bridges spanning the Grand Canal in Venice and remains the most famous bridge in the city.",
        },
        {
            "title": "The bridges of Venice",
            "url": "https://example.org/venice-bridges",
            "snippet": "Venice counts more than 400 bridges; the best known are the Rialto Bridge, the Bridge of Sighs, and the Accademia Bridge.",
        },
    ],
    "roman god of the underworld orcus pluto": [
        {
            "title": "Dis Pater - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/Dis_Pater",
            "snippet": "Dis Pater was a Roman god of the underworld, also called Orcus or Pluto, later conflated with the Greek Hades.",
        },
        {
            "title": "Orcus - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/Orcus",
            "snippet": "Orcus was a god of the underworld in Roman mythology, a punisher of broken oaths, often identified with Pluto and Dis Pater.",
        },
    ],
    "Alice Delamar father nationality": [
        {
            "title": "Alice DeLamar - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/Alice_DeLamar",
            "snippet": "Alice DeLamar was the daughter of Joseph Raphael De Lamar, a Dutch-born American mining magnate and financier.",
        },
        {
            "title": "Joseph Raphael De Lamar - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/Joseph_Raphael_De_Lamar",
            "snippet": "Joseph Raphael De Lamar emigrated from the Netherlands to the United States, where he made a fortune in mining and finance.",
        },
    ],
    "who was King of England in 1950": [
        {
            "title": "George VI - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/George_VI",
            "snippet": "George VI was King of the United Kingdom from 11 December 1936 until his death on 6 February 1952, so he was the reigning king in 1950.",
        }
    ],
    "actor who played George VI in The King's Speech": [
        {
            "title": "The King's Speech - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/The_King%27s_Speech",
            "snippet": "Colin Firth plays King George VI in The King's Speech; the performance earned him the Academy Award for Best Actor.",
        },
        {
            "title": "Colin Firth - Wikipedia",
            "url": "https://en.wikipedia.org/wiki/Colin_Firth",
            "snippet": "Colin Firth won the Oscar for his portrayal of King George VI in the 2010 film The King's Speech.",
        },
    ],
}

# Scores the fitted head must reproduce on each item's answers, in
# presentation order (Answer1, Answer2, Answer3).
TARGET_SCORES: dict[str, list[float]] = {
    "venice": [0.4448, 0.3479, 0.2119],
    "orcus": [0.4580, 0.2188, 0.5409],
    "delamar": [0.6103, 0.1847, -0.2541],
    "kings_speech": [0.7312, 0.4105, 0.0873],
    "everest": [-0.1200, 0.8411, 0.3166],
}


def write_web_fixtures() -> None:
    fixtures = {
        query_key(query): {"query": query, "hits": hits} for query, hits in WEB_HITS.items()
    }
    path = DEMO / "web_fixtures.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fixtures, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path} ({len(fixtures)} queries)")


def fit_head() -> None:
    cfg = load_config(DEMO / "config.ini")
    corpus = load_corpus_jsonl(cfg.resolve(cfg.corpus_path))
    web_client = cfg.web_client()
    featurizer = cfg.featurizer()
    items = read_bench(DEMO / "bench.jsonl")

    rows = []
    targets = []
    for item in items:
        question = Question(id=item.id, text=item.question)
        traj = run_agentic_search(
            question, list(item.answers), cfg.make_backend("search"), corpus, cfg.agent,
            web_client=web_client,
        )
        assert traj.termination == "sentinel", (item.id, traj.termination, traj.error)
        compress_backend = cfg.make_backend("compress")
        for answer, target in zip(item.answers, TARGET_SCORES[item.id]):
            ct = compress(traj, question, answer, compress_backend)
            text = render_scorer_input(question, answer, ct, cfg.train.max_len)
            rows.append(extract_features(text, featurizer).values)
            targets.append(target)

    matrix = np.stack(rows)
    y = np.asarray(targets, dtype=np.float64)
    w, residuals, rank, _ = np.linalg.lstsq(matrix, y, rcond=None)
    if rank < len(rows):
        sys.exit(f"scorer inputs are not linearly independent (rank {rank} < {len(rows)})")
    fitted = matrix @ w
    err = float(np.max(np.abs(fitted - y)))
    if err > 1e-9:
        sys.exit(f"least-squares fit did not interpolate the targets (max error {err})")

    head = ScorerHead(
        architecture="linear",
        d=featurizer.dim,
        seed=cfg.seed,
        params={"w": w, "b": np.zeros(())},
    )
    save_head(head, DEMO / "head.json")
    print(f"wrote {DEMO / 'head.json'} (max fit error {err:.2e})")


def write_scorer_input_cases() -> None:
    """Freeze the scorer-input layout so other implementations can match it.

    Any service that scores (question, answer, facts, reasoning) must feed
    its model exactly these rendered strings; the cases cover the plain
    layout, zero evidence, and both tail-truncation behaviors.
    """
    inputs = [
        {
            "name": "canonical",
            "question": "Which planet is known as the Red Planet?",
            "answer": "Mars",
            "facts": ["Mars appears red", "Iron oxide covers its surface"],
            "reasoning": "The evidence supports the answer.",
            "max_len": 1024,
        },
        {
            "name": "zero evidence",
            "question": "Which planet is known as the Red Planet?",
            "answer": "Mars",
            "facts": [],
            "reasoning": "",
            "max_len": 1024,
        },
        {
            "name": "single fact",
            "question": "q?",
            "answer": "a",
            "facts": ["one fact only"],
            "reasoning": "short",
            "max_len": 1024,
        },
        {
            "name": "tail truncated to budget",
            "question": "q?",
            "answer": "a",
            "facts": ["alpha beta gamma delta epsilon zeta eta theta"],
            "reasoning": "iota kappa lambda mu nu xi omicron pi",
            "max_len": 10,
        },
        {
            "name": "head exactly fills the budget",
            "question": "one two three?",
            "answer": "four",
            "facts": ["never rendered"],
            "reasoning": "never rendered either",
            "max_len": 6,
        },
        {
            "name": "unicode survives",
            "question": "Où est né Vivaldi ?",
            "answer": "À Venise",
            "facts": ["Vivaldi est né à Venise en 1678"],
            "reasoning": "La source l'établit sans ambiguïté.",
            "max_len": 1024,
        },
    ]
    cases = []
    for case in inputs:
        rendered = render_scorer_input_parts(
            case["question"], case["answer"], case["facts"], case["reasoning"], case["max_len"]
        )
        cases.append({**case, "rendered": rendered})
    out = Path(__file__).resolve().parent / "shared" / "scorer_input_cases.json"
    with open(out, "w", encoding="utf-8") as fh:
        json.dump({"cases": cases}, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    print(f"wrote {out} ({len(cases)} cases)")


def main() -> None:
    write_web_fixtures()
    fit_head()
    write_scorer_input_cases()


if __name__ == "__main__":
    main()
