"""Rule-based extraction of propositions and the target from problem prose.

A rule table (JSON, ordered by priority) maps regex patterns over normalized
prose to formal-language templates with ``{1}``, ``{2}``, ... capture slots.
Matches are claimed greedily in priority order and never overlap; text no
rule consumed is kept as unmatched spans (warnings, not errors) so partial
parses still reach the solver.

Known limitation: a leading bare "A" is read as the article when followed by
a lowercase word ("A square ..."), otherwise as the point label A.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .terms import Predicate, Term, parse_term, validate_literal

__all__ = [
    "TextRule",
    "ParsedProblem",
    "TextParseError",
    "NoTargetFoundError",
    "ConflictingTargetsError",
    "normalize",
    "load_rules",
    "default_rules",
    "parse_text",
]


class TextParseError(ValueError):
    pass


class NoTargetFoundError(TextParseError):
    pass


class ConflictingTargetsError(TextParseError):
    pass


@dataclass(frozen=True)
class TextRule:
    pattern: str
    template: str
    priority: int
    regex: re.Pattern = field(compare=False, repr=False, default=None)  # type: ignore[assignment]

    @staticmethod
    def make(pattern: str, template: str, priority: int) -> "TextRule":
        regex = re.compile(pattern)
        slots = {int(m) for m in re.findall(r"\{(\d+)\}", template)}
        if slots and max(slots) > regex.groups:
            raise TextParseError(
                f"template slot {{{max(slots)}}} unbound by pattern {pattern!r}"
            )
        return TextRule(pattern, template, priority, regex)


@dataclass(frozen=True)
class ParsedProblem:
    propositions: tuple[Term, ...]
    target: Term
    unmatched_spans: tuple[str, ...]
    prose: str = ""
    # (kind, text) segments in order; concatenation reproduces the
    # normalized prose exactly (coverage accounting).
    segments: tuple[tuple[str, str], ...] = ()

    def literals(self) -> tuple[Term, ...]:
        """Propositions followed by the target (the P_T + t* indexing)."""
        return self.propositions + (self.target,)


# ---------------------------------------------------------------------------
# Normalization

_SYMBOL_MAP = {
    "m∠": " measure of angle ",
    "∠": " angle ",
    "°": " degrees",
    "√": " sqrt ",
    "π": " pi ",
    "△": " triangle ",
    "⊥": " perpendicular to ",
    "∥": " parallel to ",
    "≅": " congruent to ",
    "⊙": " circle ",
    "≈": " = ",
}

# Punctuation becomes standalone tokens, but decimal points stay glued.
_PUNCT_SPLIT = re.compile(r"([.,;?!])(?!\d)")
_EQ_SPLIT = re.compile(r"([=])")
_LABEL = re.compile(r"[A-Z][A-Z0-9]*$")


def normalize(prose: str) -> str:
    """Lowercase keywords, map unicode symbols, collapse whitespace; point
    labels stay uppercase and punctuation becomes standalone tokens."""
    text = prose
    for sym, repl in _SYMBOL_MAP.items():
        text = text.replace(sym, repl)
    text = _PUNCT_SPLIT.sub(r" \1 ", text)
    text = _EQ_SPLIT.sub(r" \1 ", text)
    tokens = text.split()
    out: list[str] = []
    for i, tok in enumerate(tokens):
        if _LABEL.match(tok):
            if tok == "A" and i + 1 < len(tokens) and tokens[i + 1].isalpha() and not tokens[i + 1][0].isupper():
                out.append("a")  # article, not the point A
            else:
                out.append(tok)
        else:
            out.append(tok.lower())
    return " ".join(out)


# ---------------------------------------------------------------------------
# Rule table


def load_rules(path: str | Path) -> list[TextRule]:
    raw = json.loads(Path(path).read_text())
    rules = [TextRule.make(r["pattern"], r["template"], r["priority"]) for r in raw]
    rules.sort(key=lambda r: r.priority)
    return rules


_DEFAULT_RULES: list[TextRule] | None = None


def default_rules() -> list[TextRule]:
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        with resources.as_file(
            resources.files("geosolve.data").joinpath("text_rules.json")
        ) as path:
            _DEFAULT_RULES = load_rules(path)
    return _DEFAULT_RULES


# ---------------------------------------------------------------------------
# Parsing


def parse_text(prose: str, rules: list[TextRule] | None = None) -> ParsedProblem:
    """Apply the rule table over normalized prose; exactly one Find literal
    becomes the target, everything else a proposition."""
    if not prose.strip():
        raise TextParseError("empty prose")
    if rules is None:
        rules = default_rules()
    text = normalize(prose)

    claimed: list[tuple[int, int, Term]] = []  # (start, end, literal)

    def overlaps(a: int, b: int) -> bool:
        return any(not (b <= s or e <= a) for s, e, _ in claimed)

    for rule in rules:
        for m in rule.regex.finditer(text):
            if m.start() == m.end() or overlaps(m.start(), m.end()):
                continue
            literal_text = re.sub(
                r"\{(\d+)\}", lambda g: m.group(int(g.group(1))) or "", rule.template
            )
            literal = validate_literal(parse_term(literal_text))
            claimed.append((m.start(), m.end(), literal))
    claimed.sort(key=lambda c: c[0])

    segments: list[tuple[str, str]] = []
    cursor = 0
    for start, end, _ in claimed:
        if cursor < start:
            segments.append(("unmatched", text[cursor:start]))
        segments.append(("matched", text[start:end]))
        cursor = end
    if cursor < len(text):
        segments.append(("unmatched", text[cursor:]))

    finds = [lit for _, _, lit in claimed if isinstance(lit, Predicate) and lit.name == "Find"]
    if not finds:
        raise NoTargetFoundError(f"no goal sentence found in {prose!r}")
    if len(finds) > 1:
        raise ConflictingTargetsError(f"{len(finds)} goal sentences in {prose!r}")

    propositions = tuple(
        lit for _, _, lit in claimed if not (isinstance(lit, Predicate) and lit.name == "Find")
    )
    unmatched = tuple(
        seg for kind, seg in segments if kind == "unmatched" and seg.strip(" .,;?!")
    )
    return ParsedProblem(
        propositions=propositions,
        target=finds[0],
        unmatched_spans=unmatched,
        prose=prose,
        segments=tuple(segments),
    )
