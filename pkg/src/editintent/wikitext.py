"""Wiki-markup detection primitives, markup stripping and sentence splitting.

The detectors come in two modes:

* ``"strict"`` reproduces the published rule regexes byte for byte so rule
  audits can check the exact patterns.  The one exception is the wikilink
  pattern, whose published form (``[[^[+]]``) is not a valid regex; the
  reading ``\\[\\[[^\\[]+\\]\\]`` (doubled brackets, non-bracket interior) is
  used in both modes.
* ``"default"`` broadens the patterns to what real wikitext needs:
  ``<ref`` with attributes, case-insensitive ``{{cite`` with optional
  whitespace, infobox keys that may contain underscores, and word-bounded
  matching for the edit-comment pattern (so "poverty" does not count as a
  point-of-view comment).

The comment pattern is applied case-insensitively in both modes: the rule
tables print it once as "POV" and once as "pov", so case-insensitive is the
only consistent reading.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

STRICT = "strict"
DEFAULT = "default"

# Published patterns, kept verbatim for audits (wikilink excepted, see above).
STRICT_PATTERNS = {
    "citation": r"<ref>|\{\{Cite\}\}",
    "template": r"\{\{[^\{]+\}\}",
    "wikilink": r"\[\[[^\[]+\]\]",
    "infobox": r"^$|[a-zA-Z0-9 ]+=",
    "multiline": r"\n",
    "pov_comment": r"pov|pointy",
}

DEFAULT_PATTERNS = {
    "citation": r"<ref\b|(?i:\{\{\s*cite\b)",
    "template": r"\{\{[^\{]+\}\}",
    "wikilink": r"\[\[[^\[]+\]\]",
    "infobox": r"^$|[A-Za-z0-9_ ]+=",
    "multiline": r"\n",
    "pov_comment": r"\b(?:pov|pointy)\b",
}

_FLAGS = {"pov_comment": re.IGNORECASE}

_COMPILED: dict[tuple[str, str], re.Pattern[str]] = {}
for _mode, _table in ((STRICT, STRICT_PATTERNS), (DEFAULT, DEFAULT_PATTERNS)):
    for _name, _pat in _table.items():
        _COMPILED[(_mode, _name)] = re.compile(_pat, _FLAGS.get(_name, 0))


def _regex(mode: str, name: str) -> re.Pattern[str]:
    try:
        return _COMPILED[(mode, name)]
    except KeyError:
        raise ValueError(f"unknown regex mode {mode!r}") from None


def detect_citation(text: str, mode: str = DEFAULT) -> bool:
    """True if the text contains a citation opener (``<ref>`` / ``{{Cite}}``)."""
    return _regex(mode, "citation").search(text) is not None


def detect_template(text: str, mode: str = DEFAULT) -> bool:
    """True if the text contains a complete ``{{...}}`` template."""
    return _regex(mode, "template").search(text) is not None


def detect_wikilink(text: str, mode: str = DEFAULT) -> bool:
    """True if the text contains a ``[[...]]`` wikilink."""
    return _regex(mode, "wikilink").search(text) is not None


def detect_infobox_param(text: str, mode: str = DEFAULT) -> bool:
    """True if the text is empty or contains a ``key =`` infobox-style run.

    The search is unanchored in both modes, so prose such as
    "He scored 3 = a record" matches.  That overmatch is inherited from the
    published pattern and kept deliberately.
    """
    return _regex(mode, "infobox").search(text) is not None


def is_multiline(text: str) -> bool:
    """True if the text spans more than one line."""
    return "\n" in text


def comment_matches_pov(comment: str, mode: str = DEFAULT) -> bool:
    """True if an edit comment signals a point-of-view edit.

    Strict mode is an unbounded substring match ("poverty" fires); default
    mode requires word boundaries.
    """
    return _regex(mode, "pov_comment").search(comment) is not None


# --- markup stripping -------------------------------------------------------

_REF_SPAN = re.compile(r"<ref\b[^>/]*(?:/\s*>|>.*?</\s*ref\s*>)", re.IGNORECASE | re.DOTALL)
_TEMPLATE_INNER = re.compile(r"\{\{[^{}]*\}\}")
_WIKILINK_PIPED = re.compile(r"\[\[[^\[\]|]*\|([^\[\]]*)\]\]")
_WIKILINK_PLAIN = re.compile(r"\[\[([^\[\]]*)\]\]")
_EXTLINK_LABELED = re.compile(r"\[(?:https?|ftp)://\S*\s+([^\]]*)\]")
_EXTLINK_BARE = re.compile(r"\[(?:https?|ftp)://[^\s\]]*\]")
_QUOTES = re.compile(r"'{2,}")
_TAG = re.compile(r"</?[A-Za-z][^>]*>")
_HEADING = re.compile(r"^\s*=+\s*(.*?)\s*=+\s*$", re.MULTILINE)
_WS = re.compile(r"\s+")

_MAX_NESTING_PASSES = 25


def _strip_pass(text: str) -> str:
    s = _REF_SPAN.sub("", text)
    for _ in range(_MAX_NESTING_PASSES):
        t = _TEMPLATE_INNER.sub("", s)
        if t == s:
            break
        s = t
    for _ in range(_MAX_NESTING_PASSES):
        t = _WIKILINK_PIPED.sub(r"\1", s)
        t = _WIKILINK_PLAIN.sub(r"\1", t)
        t = _EXTLINK_LABELED.sub(r"\1", t)
        t = _EXTLINK_BARE.sub("", t)
        if t == s:
            break
        s = t
    s = _HEADING.sub(r"\1", s)
    s = _QUOTES.sub("", s)
    s = _TAG.sub("", s)
    return _WS.sub(" ", s).strip()


def strip_markup(text: str) -> str:
    """Reduce wikitext to plain prose.

    Reference spans disappear entirely; ``[[target|label]]`` keeps the label
    and ``[[target]]`` keeps the target; templates, quote markup, heading
    fences and residual tags are dropped; whitespace collapses to single
    spaces.  Removing one piece of markup can splice the next one together
    (stripping a tag from ``'<ref>'`` leaves ``''``), so the pass repeats
    until nothing changes; every pass only shortens, so this terminates and
    the result is a fixed point.  Idempotent by construction.
    """
    s = text
    for _ in range(_MAX_NESTING_PASSES):
        t = _strip_pass(s)
        if t == s:
            return s
        s = t
    return s


def is_markup_only(text: str) -> bool:
    """True if the text carries no prose once markup is removed.

    Link labels count as content, so ``[[Paris]]`` is not markup-only while
    ``<ref>x</ref>`` and ``{{fact}}`` are.
    """
    return re.search(r"\w", strip_markup(text)) is None


# --- sentence splitting -----------------------------------------------------


@dataclass(frozen=True)
class SentenceSpan:
    """A sentence located inside its source string (offsets are half-open)."""

    start: int
    end: int
    text: str


def _load_abbreviations() -> frozenset[str]:
    data = resources.files("editintent.data").joinpath("abbreviations.txt").read_text("utf-8")
    out = set()
    for line in data.splitlines():
        token = line.strip()
        if token and not token.startswith("#"):
            out.add(token.lower().rstrip("."))
    return frozenset(out)


_ABBREVIATIONS = _load_abbreviations()

_TERMINATORS = ".!?"
_ABBREV_TAIL = re.compile(r"([A-Za-z]+(?:\.[A-Za-z]+)*)\.$")


def _protected_mask(text: str) -> list[bool]:
    """Mark characters inside <ref>...</ref>, {{...}} and [[...]] spans."""
    mask = [False] * len(text)
    for m in _REF_SPAN.finditer(text):
        for i in range(m.start(), m.end()):
            mask[i] = True
    for opener, closer in (("{{", "}}"), ("[[", "]]")):
        depth = 0
        i = 0
        while i < len(text):
            pair = text[i : i + 2]
            if pair == opener:
                depth += 1
                mask[i] = mask[i + 1] = True
                i += 2
                continue
            if pair == closer and depth > 0:
                depth -= 1
                mask[i] = mask[i + 1] = True
                i += 2
                continue
            if depth > 0:
                mask[i] = True
            i += 1
    return mask


def split_sentences(text: str) -> list[SentenceSpan]:
    """Split text into sentence spans with a deterministic rule table.

    A boundary is a run of ``.!?`` outside protected markup spans, followed
    by whitespace and an uppercase character (or end of text).  A ``.``
    preceded by a known abbreviation or a single letter never splits.
    Spans exclude surrounding whitespace, so the gaps between consecutive
    spans are whitespace-only.
    """
    if not text.strip():
        return []
    mask = _protected_mask(text)
    boundaries: list[int] = []  # index one past the terminator run
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch not in _TERMINATORS or mask[i]:
            i += 1
            continue
        j = i
        while j < n and text[j] in _TERMINATORS and not mask[j]:
            j += 1
        # trailing protected markup (a reference after the period) stays
        # attached to the sentence it closes
        j2 = j
        while j2 < n and mask[j2]:
            j2 += 1
        # only the end of the terminator run can close a sentence
        ok = False
        k = j2
        while k < n and text[k].isspace():
            k += 1
        if k >= n:
            ok = True
        elif k > j2 and text[k].isupper():
            ok = True
        if ok and text[j - 1] == ".":
            m = _ABBREV_TAIL.search(text[:j])
            if m is not None:
                word = m.group(1)
                if len(word) == 1 or word.lower() in _ABBREVIATIONS:
                    ok = False
        if ok:
            boundaries.append(j2)
        i = j2 if j2 > j else j
    spans: list[SentenceSpan] = []
    cursor = 0
    for b in boundaries + [n]:
        start = cursor
        while start < b and text[start].isspace():
            start += 1
        end = b
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append(SentenceSpan(start, end, text[start:end]))
        cursor = b
    return spans


def normalize_section_title(title: str) -> str:
    """Canonical section form: spaces become underscores, first char upper."""
    t = title.strip().replace(" ", "_")
    if not t:
        return ""
    return t[0].upper() + t[1:]
