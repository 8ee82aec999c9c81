"""Synthetic news, a toy LDA model and a keyword-driven fake LLM.

These let the classification stage run end to end on simulated jumps:
headlines for a labelled jump carry words from its category, and
unattributable jumps only get filler headlines.
"""
from __future__ import annotations

import json
import re

import numpy as np

from .lda import LdaModel, ngram_counts
from .taxonomy import CATEGORY_IDS

KEYWORDS = {
    1: ["fed", "rate cut", "rate hike", "fomc", "treasury", "congress", "stimulus", "powell"],
    2: ["payrolls", "cpi", "gdp", "jobless claims", "retail sales", "inflation", "consensus", "ism"],
    3: ["missile", "troops", "sanctions", "attack", "ceasefire", "military", "talks", "terror"],
    4: ["earnings", "guidance", "profit warning", "revenue", "outlook", "bellwether", "quarterly", "eps"],
    5: ["oil", "yen", "china", "europe", "ecb", "tariffs", "crude", "emerging markets"],
    6: ["lawsuit", "merger", "strike", "recall", "storm", "outage", "ruling", "probe"],
}
FILLER = ["shares", "market", "stocks", "trading", "index", "update", "session", "week",
          "report", "investors", "analysts", "futures"]


def _headline(rng, words) -> str:
    k = rng.integers(2, 4)
    picks = list(rng.choice(words, size=k, replace=True))
    picks += list(rng.choice(FILLER, size=2, replace=False))
    rng.shuffle(picks)
    return " ".join(picks)


def synthetic_news(labels, seed: int = 0) -> list[list[tuple[int, str]]]:
    """Per jump, a list of (news id, headline).

    A jump labelled k in 1..6 gets one or two topical headlines among filler;
    label 0 gets filler only.
    """
    rng = np.random.default_rng(seed)
    out = []
    nid = 0
    for lab in np.asarray(labels, dtype=int):
        items = []
        n_fill = int(rng.integers(1, 4))
        n_top = int(rng.integers(1, 3)) if lab in CATEGORY_IDS else 0
        kinds = ["t"] * n_top + ["f"] * n_fill
        rng.shuffle(kinds)
        for kind in kinds:
            words = KEYWORDS[int(lab)] if kind == "t" else FILLER
            items.append((nid, _headline(rng, words)))
            nid += 1
        out.append(items)
    return out


def toy_lda_model(smoothing: float = 1e-3) -> LdaModel:
    """Eight LDA topics over the synthetic vocabulary.

    Topics 0-5 concentrate on categories 1-6; topic 6 mixes macro and policy
    terms and maps to Macro; topic 7 is filler and maps to None of the Above.
    """
    vocab = sorted({w for ws in KEYWORDS.values() for w in ws} | set(FILLER))
    pos = {w: i for i, w in enumerate(vocab)}
    V = len(vocab)
    phi = np.full((8, V), smoothing)
    for c, ws in KEYWORDS.items():
        for w in ws:
            phi[c - 1, pos[w]] += 1.0
    for w in KEYWORDS[2][:4] + KEYWORDS[1][:2]:
        phi[6, pos[w]] += 1.0
    for w in FILLER:
        phi[7, pos[w]] += 1.0
        phi[:7, pos[w]] += 0.2
    phi /= phi.sum(axis=1, keepdims=True)
    prior = np.array([0.12, 0.14, 0.12, 0.12, 0.14, 0.1, 0.06, 0.2])
    category = np.array([1, 2, 3, 4, 5, 6, 2, 6])
    return LdaModel(vocab, phi, prior / prior.sum(), category)


def _keyword_hits(text: str) -> np.ndarray:
    counts = ngram_counts(text)
    return np.array([sum(counts.get(w, 0) for w in KEYWORDS[c]) for c in CATEGORY_IDS])


_LINE = re.compile(r"^(\d+): (.*)$", re.M)


def keyword_responder(prompt: str) -> str:
    """Replies to prompts 1 and 3 by spotting category keywords."""
    if prompt.startswith("From "):
        hits = [(int(i), h) for i, h in _LINE.findall(prompt) if _keyword_hits(h).sum() > 0]
        expl = "; ".join(h for _, h in hits) if hits else "no related headline"
        return json.dumps({"News_id": [i for i, _ in hits], "Explanation": expl})
    if "Topic_Category" in prompt:
        body = prompt.split("Here is the explanation followed by the relevant news:", 1)[-1]
        score = _keyword_hits(body)
        cat = int(np.argmax(score)) + 1 if score.sum() > 0 else 6
        return json.dumps({"Topic_Category": cat, "Explanation": "keyword match"})
    return json.dumps({"Topic_Name": "n/a", "Topic Definition": "", "Text_ID": []})
