"""Prompt templates for external classifiers and parsing of their replies."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from string import Template
from typing import Callable, Optional, Protocol, Sequence

from .lda import TopicVerdict
from .taxonomy import CATEGORY_IDS, taxonomy_block

TEMPLATE_FILES = {1: "prompt1.txt", 2: "prompt2.txt", 3: "prompt3.txt"}
LIST_FIELDS = {"news", "narratives", "relevant_news"}


class PromptError(KeyError):
    pass


class VerdictParseError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (offset {offset})")
        self.offset = offset


class VerdictValidationError(ValueError):
    pass


def load_template(template_id: int) -> Template:
    if template_id not in TEMPLATE_FILES:
        raise ValueError(f"unknown prompt template {template_id}")
    text = resources.files("jumprisk").joinpath("templates", TEMPLATE_FILES[template_id]).read_text(encoding="utf-8")
    return Template(text)


def _identifiers(tpl: Template) -> list[str]:
    # Template.get_identifiers only exists from Python 3.11
    out = []
    for m in tpl.pattern.finditer(tpl.template):
        name = m.group("named") or m.group("braced")
        if name and name not in out:
            out.append(name)
    return out


def placeholders(template_id: int) -> list[str]:
    return _identifiers(load_template(template_id))


def format_items(items) -> str:
    """``(id, text)`` pairs as 'id: text' lines; strings pass through."""
    if isinstance(items, str):
        return items
    return "\n".join(f"{i}: {t}" for i, t in items)


def render_prompt(template_id: int, **context) -> str:
    """Fill a template; every placeholder must be supplied.

    List-valued fields (news, narratives, relevant_news) accept ``(id, text)``
    pairs. Prompt 3's ``topics`` defaults to the taxonomy.
    """
    tpl = load_template(template_id)
    ctx = dict(context)
    if template_id == 3:
        ctx.setdefault("topics", taxonomy_block())
    missing = [k for k in _identifiers(tpl) if k not in ctx]
    if missing:
        raise PromptError(f"prompt {template_id}: missing placeholder(s) {', '.join(missing)}")
    for k in LIST_FIELDS & set(ctx):
        ctx[k] = format_items(ctx[k])
    return tpl.substitute(ctx)


def jump_context(start, end, ret: float, news: Sequence = ()) -> dict:
    """Prompt-1 fields for a jump over (start, end] with simple return ``ret``."""
    fmt = lambda t: str(t).replace("T", " ")[:16]
    return {
        "event_start_time": fmt(start),
        "event_end_time": fmt(end),
        "direction": "increases" if ret >= 0 else "decreases",
        "event_ret": f"{abs(ret) * 100:.2f}",
        "news": list(news),
    }


@dataclass
class Retrieval:
    news_ids: list
    explanation: str

    @property
    def attributable(self) -> bool:
        return len(self.news_ids) > 0


@dataclass
class TopicProposal:
    name: str
    definition: str
    text_ids: list = field(default_factory=list)


def _first_object(text: str):
    dec = json.JSONDecoder()
    start = text.find("{")
    if start < 0:
        raise VerdictParseError("no JSON object found", 0)
    first_err = None
    pos = start
    while pos >= 0:
        try:
            obj, _ = dec.raw_decode(text, pos)
            if isinstance(obj, dict):
                return obj
        except json.JSONDecodeError as exc:
            if first_err is None:
                first_err = exc
        pos = text.find("{", pos + 1)
    raise VerdictParseError(f"malformed JSON: {first_err.msg}", first_err.pos)


def _int_list(v, key):
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise VerdictValidationError(f"{key} must be a list of integers")
    return list(v)


def parse_verdict(text: str):
    """First well-formed JSON object in ``text``, validated by its keys.

    Returns a TopicVerdict (prompt 3), Retrieval (prompt 1) or TopicProposal
    (prompt 2).
    """
    obj = _first_object(text)
    expl = obj.get("Explanation", "")
    if not isinstance(expl, str):
        raise VerdictValidationError("Explanation must be a string")
    if "Topic_Category" in obj:
        cat = obj["Topic_Category"]
        if isinstance(cat, str) and cat.strip().isdigit():
            cat = int(cat)
        if not isinstance(cat, int) or isinstance(cat, bool) or cat not in CATEGORY_IDS:
            raise VerdictValidationError(f"Topic_Category {cat!r} outside 1..6")
        return TopicVerdict(cat, expl)
    if "News_id" in obj:
        return Retrieval(_int_list(obj["News_id"], "News_id"), expl)
    if "Topic_Name" in obj:
        return TopicProposal(str(obj["Topic_Name"]), str(obj.get("Topic Definition", "")),
                             _int_list(obj.get("Text_ID", []), "Text_ID"))
    raise VerdictValidationError(f"unrecognised reply keys: {sorted(obj)}")


class LlmClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class FakeLlm:
    """Deterministic stand-in for a hosted model.

    ``responder`` maps a prompt to a reply; every exchange is recorded.
    """

    def __init__(self, responder: Callable[[str], str]):
        self.responder = responder
        self.calls: list[tuple[str, str]] = []

    def complete(self, prompt: str) -> str:
        reply = self.responder(prompt)
        self.calls.append((prompt, reply))
        return reply


@dataclass
class LlmLabel:
    category: int              # 0 when unattributable
    retrieval: Retrieval
    verdict: Optional[TopicVerdict]


def classify_jump_llm(client: LlmClient, context: dict) -> LlmLabel:
    """Retrieval (prompt 1) then classification (prompt 3) for one jump.

    An empty news list stops after retrieval and marks the jump unattributable.
    """
    retrieval = parse_verdict(client.complete(render_prompt(1, **context)))
    if not isinstance(retrieval, Retrieval):
        raise VerdictValidationError("retrieval step did not return a News_id reply")
    if not retrieval.attributable:
        return LlmLabel(0, retrieval, None)
    news = dict(context.get("news", []))
    relevant = [(i, news[i]) for i in retrieval.news_ids if i in news]
    verdict = parse_verdict(client.complete(render_prompt(
        3, explanation=retrieval.explanation, relevant_news=relevant)))
    if not isinstance(verdict, TopicVerdict):
        raise VerdictValidationError("classification step did not return a Topic_Category reply")
    return LlmLabel(verdict.category, retrieval, verdict)
