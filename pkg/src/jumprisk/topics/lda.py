"""Posterior topic assignment under a pretrained LDA model.

Documents are reduced to n-gram counts; the posterior over LDA topics is

    log p_k = log pi_k + sum_w c_w log phi_kw

normalised with log-sum-exp. Words outside the vocabulary are ignored.
LDA topics are then pooled into the six categories.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from .taxonomy import CATEGORY_IDS, NONE_OF_THE_ABOVE

_TOKEN = re.compile(r"[a-z0-9]+(?:'[a-z]+)?")


@dataclass
class TopicVerdict:
    category: int
    explanation: str = ""
    posterior: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.category not in CATEGORY_IDS:
            raise ValueError(f"category {self.category} outside 1..6")
        if self.posterior is not None and abs(float(np.sum(self.posterior)) - 1.0) > 1e-9:
            raise ValueError("posterior does not sum to one")


@dataclass
class LdaModel:
    vocab: tuple
    phi: np.ndarray          # (n_topics, n_words), rows sum to one
    prior: np.ndarray        # (n_topics,)
    category: np.ndarray     # (n_topics,) values in 1..6

    def __post_init__(self):
        self.vocab = tuple(str(w) for w in self.vocab)
        self.phi = np.asarray(self.phi, dtype=float)
        self.prior = np.asarray(self.prior, dtype=float)
        self.category = np.asarray(self.category, dtype=np.int64)
        k, v = self.phi.shape
        if v != len(self.vocab) or len(set(self.vocab)) != v:
            raise ValueError("vocabulary must be unique and match phi's columns")
        if self.prior.shape != (k,) or self.category.shape != (k,):
            raise ValueError("prior and category mapping need one entry per topic")
        if np.any(self.phi < 0) or np.any(np.abs(self.phi.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("each phi row must be a probability vector")
        if np.any(self.prior < 0) or abs(self.prior.sum() - 1.0) > 1e-9:
            raise ValueError("prior must be a probability vector")
        if not np.all(np.isin(self.category, CATEGORY_IDS)):
            raise ValueError("every LDA topic must map to a category in 1..6")
        self._index = {w: i for i, w in enumerate(self.vocab)}

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    def index(self, word: str) -> Optional[int]:
        return self._index.get(word)

    @classmethod
    def load(cls, directory) -> "LdaModel":
        """Read ``vocab.csv`` (word), ``phi.csv`` (topic,word,prob) and
        ``topics.csv`` (topic,prior,category) from one directory."""
        d = Path(directory)
        vocab = pd.read_csv(d / "vocab.csv", dtype={"word": str}, keep_default_na=False)["word"].tolist()
        phi_long = pd.read_csv(d / "phi.csv", dtype={"word": str}, keep_default_na=False)
        topics = pd.read_csv(d / "topics.csv").sort_values("topic")
        pos = {w: i for i, w in enumerate(vocab)}
        tid = {t: i for i, t in enumerate(topics["topic"])}
        phi = np.zeros((len(tid), len(vocab)))
        unknown = set(phi_long["word"]) - set(pos)
        if unknown:
            raise ValueError(f"phi.csv references words missing from vocab.csv: {sorted(unknown)[:5]}")
        phi[phi_long["topic"].map(tid).to_numpy(), phi_long["word"].map(pos).to_numpy()] = phi_long["prob"]
        return cls(vocab, phi, topics["prior"].to_numpy(), topics["category"].to_numpy())

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        pd.DataFrame({"word": self.vocab}).to_csv(d / "vocab.csv", index=False)
        k, w = np.nonzero(self.phi)
        pd.DataFrame({"topic": k, "word": np.array(self.vocab, dtype=object)[w],
                      "prob": self.phi[k, w]}).to_csv(d / "phi.csv", index=False, float_format="%.17g")
        pd.DataFrame({"topic": np.arange(self.n_topics), "prior": self.prior,
                      "category": self.category}).to_csv(d / "topics.csv", index=False,
                                                         float_format="%.17g")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens (an apostrophe suffix stays attached)."""
    return _TOKEN.findall(text.lower())


def ngram_counts(text: str, vocab: Optional[Sequence[str]] = None) -> Counter:
    """Unigram and bigram counts; bigrams are the two tokens joined by a space.

    With ``vocab`` only in-vocabulary n-grams are kept.
    """
    toks = tokenize(text)
    grams = toks + [f"{a} {b}" for a, b in zip(toks[:-1], toks[1:])]
    c = Counter(grams)
    if vocab is not None:
        keep = set(vocab)
        c = Counter({g: n for g, n in c.items() if g in keep})
    return c


def log_likelihoods(counts: Mapping[str, float], model: LdaModel) -> np.ndarray:
    """Unnormalised log posterior per LDA topic."""
    idx, c = [], []
    for word, n in counts.items():
        if n < 0:
            raise ValueError(f"negative count for {word!r}")
        i = model.index(word)
        if i is not None and n > 0:
            idx.append(i)
            c.append(float(n))
    with np.errstate(divide="ignore"):
        lp = np.log(model.prior)
        if idx:
            logphi = np.log(model.phi[:, idx])
            # 0 * log 0 never arises: zero counts were dropped above
            lp = lp + logphi @ np.array(c)
    return lp


def lda_posterior(counts: Mapping[str, float], model: LdaModel) -> np.ndarray:
    """Posterior over LDA topics; raises if every topic has zero likelihood."""
    lp = log_likelihoods(counts, model)
    if not np.isfinite(lp).any():
        raise ValueError("document has zero likelihood under every topic")
    post = np.exp(lp - logsumexp(lp))
    return post / post.sum()


def category_posterior(post: np.ndarray, model: LdaModel) -> np.ndarray:
    """Sum of member-topic posteriors for categories 1..6."""
    out = np.zeros(len(CATEGORY_IDS))
    np.add.at(out, model.category - 1, post)
    return out


def classify_lda(counts: Mapping[str, float], model: LdaModel) -> TopicVerdict:
    """Category with the largest pooled posterior; ties go to the lowest id.

    A document no topic can generate falls in "None of the Above".
    """
    try:
        post = lda_posterior(counts, model)
    except ValueError:
        return TopicVerdict(NONE_OF_THE_ABOVE, "zero likelihood under every topic")
    cat = category_posterior(post, model)
    best = int(np.argmax(cat)) + 1      # argmax returns the first maximum
    return TopicVerdict(best, f"pooled posterior {cat[best - 1]:.4f}", cat)


def classify_text(text: str, model: LdaModel) -> TopicVerdict:
    return classify_lda(ngram_counts(text, model.vocab), model)
