"""Malicious-command detection over Process Start command lines.

A rule names a utility (executable stem) plus argument tokens that must all
be present. Rules deliberately key on utility + action tokens rather than
full command strings so that path and parameter variants of the same attack
command still match.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fnmatch import translate as _glob_translate
from typing import BinaryIO, Dict, List, Optional, Tuple

from .errors import DuplicateRuleIdError, ParseError
from .events import Alert, Detector, Event, EventType, ProcessAttrs, Provider

GOALS = ("stealth", "attack", "payment_guidance")

_GLOB_CHARS = frozenset("*?[")


@dataclass(frozen=True)
class CommandRule:
    """One auditable rule: utility plus required argument tokens.

    A required token matches an argument token by case-insensitive equality;
    tokens containing * or ? are shell-style globs matched against whole
    argument tokens. Utility-only rules are rejected: at least one token is
    required so that plain invocations of a utility never alert.
    """

    id: str
    goal: str
    utility: str
    required_tokens: Tuple[str, ...]
    description: str


@dataclass
class RuleSet:
    rules: List[CommandRule]
    version: str = "0"


def normalize_command(command_line: str) -> Tuple[str, List[str]]:
    """Split a raw command line into (utility, argument tokens).

    The utility is the final path component of the first token (either slash
    accepted as separator), lowercased, with a trailing ".exe" stripped.
    Double-quoted segments are kept as single tokens with quotes removed.
    All tokens are lowercased. Empty input gives ("", []).
    """
    tokens: List[str] = []
    current: List[str] = []
    in_quotes = False
    for ch in command_line:
        if ch == '"':
            in_quotes = not in_quotes
        elif ch.isspace() and not in_quotes:
            if current:
                tokens.append("".join(current))
                current = []
        else:
            current.append(ch)
    if current:
        tokens.append("".join(current))
    if not tokens:
        return "", []
    head = tokens[0].lower()
    utility = re.split(r"[\\/]", head)[-1]
    if utility.endswith(".exe"):
        utility = utility[: -len(".exe")]
    return utility, [t.lower() for t in tokens[1:]]


def _parse_rule_line(line: str, lineno: int) -> CommandRule:
    parts = [p.strip() for p in line.split("|")]
    if len(parts) != 5:
        raise ParseError(lineno, f"expected 5 |-separated fields, got {len(parts)}")
    rule_id, goal, utility, token_field, description = parts
    if not rule_id:
        raise ParseError(lineno, "empty rule id")
    if goal not in GOALS:
        raise ParseError(lineno, f"unknown goal {goal!r}")
    utility = utility.lower()
    if not utility:
        raise ParseError(lineno, "empty utility")
    tokens = tuple(t.strip().lower() for t in token_field.split(",") if t.strip())
    if not tokens:
        raise ParseError(lineno, "rule requires at least one token")
    return CommandRule(
        id=rule_id, goal=goal, utility=utility, required_tokens=tokens, description=description
    )


def load_rules(source: BinaryIO) -> RuleSet:
    """Parse a rules file: one `id | goal | utility | tokens | description`
    per line, `#` comments, `# version: X` setting the set version."""
    version = "0"
    rules: List[CommandRule] = []
    seen = set()
    text = source.read().decode("utf-8")
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("version:"):
                version = body.split(":", 1)[1].strip()
            continue
        rule = _parse_rule_line(line, lineno)
        if rule.id in seen:
            raise DuplicateRuleIdError(f"line {lineno}: duplicate rule id {rule.id!r}")
        seen.add(rule.id)
        rules.append(rule)
    return RuleSet(rules=rules, version=version)


def load_rules_file(path) -> RuleSet:
    with open(path, "rb") as f:
        return load_rules(f)


def default_rules_path() -> str:
    from importlib.resources import files

    return str(files("peeler.data").joinpath("default_rules.txt"))


class CommandMatcher:
    """Immutable matching engine over one RuleSet; safe for concurrent use."""

    def __init__(self, rules: RuleSet):
        self.rules = rules
        self._by_utility: Dict[str, list] = {}
        for rule in rules.rules:
            checks = []
            for tok in rule.required_tokens:
                if _GLOB_CHARS & set(tok):
                    checks.append(re.compile(_glob_translate(tok)).match)
                else:
                    checks.append(tok)
            self._by_utility.setdefault(rule.utility, []).append((rule, checks))

    def match(self, e: Event) -> Optional[Alert]:
        if e.provider is not Provider.PROCESS or e.etype is not EventType.START:
            return None
        attrs = e.attrs
        if not isinstance(attrs, ProcessAttrs):
            return None
        utility, tokens = normalize_command(attrs.command_line)
        candidates = self._by_utility.get(utility)
        if not candidates:
            return None
        token_set = set(tokens)
        for rule, checks in candidates:
            for check in checks:
                if isinstance(check, str):
                    if check not in token_set:
                        break
                elif not any(check(t) for t in tokens):
                    break
            else:
                return Alert(
                    detector=Detector.COMMAND_RULE,
                    pid=e.pid,
                    trigger=rule.id,
                    event_timestamp=e.timestamp,
                    emitted_timestamp=e.timestamp,
                )
        return None


def match_command(rules: RuleSet, e: Event) -> Optional[Alert]:
    """One-shot form of CommandMatcher.match (pure in (rules, event))."""
    return CommandMatcher(rules).match(e)
