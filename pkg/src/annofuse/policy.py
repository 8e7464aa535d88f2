"""Consensus policy expressions.

Grammar (``&`` binds tighter than ``|``, whitespace ignored)::

    expr   := term ('|' term)*
    term   := factor ('&' factor)*
    factor := NAME | 'atleast' '(' INT ')' | '(' expr ')'

``atleast`` is reserved and cannot be used as a source name. Chains of the
same operator are flattened into one n-ary node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union


class PolicyError(ValueError):
    pass


class PolicySyntaxError(PolicyError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class PolicyBindingError(PolicyError):
    pass


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class AtLeast:
    q: int


@dataclass(frozen=True)
class And:
    operands: tuple["Node", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["Node", ...]


Node = Union[Name, AtLeast, And, Or]


@dataclass(frozen=True)
class ConsensusPolicy:
    text: str
    root: Node

    def names(self) -> set[str]:
        return _collect(self.root, Name, lambda n: n.name)

    def thresholds(self) -> set[int]:
        return _collect(self.root, AtLeast, lambda n: n.q)

    def __str__(self) -> str:
        return self.text


def _collect(node: Node, kind, get) -> set:
    if isinstance(node, kind):
        return {get(node)}
    if isinstance(node, (And, Or)):
        out = set()
        for op in node.operands:
            out |= _collect(op, kind, get)
        return out
    return set()


_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<int>[0-9]+)|(?P<op>[&|()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolicySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = repr(value) if value is not None else kind
            got = repr(tok[1]) if tok[0] != "end" else "end of input"
            raise PolicySyntaxError(f"expected {want}, found {got}", tok[2])
        self.pos += 1
        return tok

    def expr(self) -> Node:
        ops = [self.term()]
        while self.peek()[:2] == ("op", "|"):
            self.pos += 1
            ops.append(self.term())
        return ops[0] if len(ops) == 1 else Or(tuple(ops))

    def term(self) -> Node:
        ops = [self.factor()]
        while self.peek()[:2] == ("op", "&"):
            self.pos += 1
            ops.append(self.factor())
        return ops[0] if len(ops) == 1 else And(tuple(ops))

    def factor(self) -> Node:
        kind, value, offset = self.peek()
        if kind == "name" and value == "atleast":
            self.pos += 1
            self.take("op", "(")
            _, digits, at = self.take("int")
            q = int(digits)
            if q < 1:
                raise PolicySyntaxError("atleast() needs q >= 1", at)
            self.take("op", ")")
            return AtLeast(q)
        if kind == "name":
            self.pos += 1
            return Name(value)
        if (kind, value) == ("op", "("):
            self.pos += 1
            node = self.expr()
            self.take("op", ")")
            return node
        got = repr(value) if kind != "end" else "end of input"
        raise PolicySyntaxError(f"expected a source name, 'atleast' or '(', found {got}", offset)


def parse_policy(text: str) -> ConsensusPolicy:
    parser = _Parser(text)
    root = parser.expr()
    parser.take("end")
    return ConsensusPolicy(text, root)


def bind_policy(policy: ConsensusPolicy | str, sources: Iterable[str]) -> ConsensusPolicy:
    """Check every name against ``sources`` and every ``atleast(q)`` against K."""
    if isinstance(policy, str):
        policy = parse_policy(policy)
    sources = list(sources)
    unknown = sorted(policy.names() - set(sources))
    if unknown:
        raise PolicyBindingError(
            f"policy {policy.text!r} names unknown source(s) {unknown}; dataset has {sources}")
    for q in sorted(policy.thresholds()):
        if q > len(sources):
            raise PolicyBindingError(
                f"policy {policy.text!r}: atleast({q}) exceeds the {len(sources)} available sources")
    return policy


def evaluate(node: Node, present: frozenset[str] | set[str]) -> bool:
    """Truth value of ``node`` for a cluster whose member sources are ``present``."""
    if isinstance(node, Name):
        return node.name in present
    if isinstance(node, AtLeast):
        return len(present) >= node.q
    if isinstance(node, And):
        return all(evaluate(op, present) for op in node.operands)
    if isinstance(node, Or):
        return any(evaluate(op, present) for op in node.operands)
    raise TypeError(f"not a policy node: {node!r}")
