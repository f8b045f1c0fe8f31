"""Expert security sub-patterns for the three vulnerability kinds.

Simple flags are keyword matches on the syntax tree, the balance and loop
flags are syntax checks, and timestamp contamination uses the taint pass.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterator

import numpy as np

from cgescan.frontend import ast as A
from cgescan.frontend.resolve import STATE
from cgescan.taint import TaintState, mentions_taint, taint_propagate, variable_root

Position = tuple[int, int]


class VulnerabilityKind(str, Enum):
    REENTRANCY = "reentrancy"
    TIMESTAMP = "timestamp"
    INFINITE_LOOP = "infinite-loop"

    @classmethod
    def parse(cls, text: str) -> "VulnerabilityKind":
        aliases = {"loop": cls.INFINITE_LOOP, "infinite_loop": cls.INFINITE_LOOP,
                   "timestamp-dependence": cls.TIMESTAMP}
        text = text.strip().lower()
        return aliases.get(text) or cls(text)


class SubPattern(IntEnum):
    CALL_VALUE_INVOCATION = 0
    BALANCE_DEDUCTION = 1
    ENOUGH_BALANCE = 2
    TIMESTAMP_INVOCATION = 3
    TIMESTAMP_ASSIGN = 4
    TIMESTAMP_CONTAMINATION = 5
    LOOP_STATEMENT = 6
    LOOP_CONDITION = 7
    SELF_INVOCATION = 8

    @property
    def camel(self) -> str:
        head, *rest = self.name.lower().split("_")
        return head + "".join(w.title() for w in rest)

    @property
    def kind(self) -> VulnerabilityKind:
        return list(VulnerabilityKind)[self.value // 3]


PATTERNS_BY_KIND: dict[VulnerabilityKind, tuple[SubPattern, ...]] = {
    kind: tuple(p for p in SubPattern if p.kind is kind) for kind in VulnerabilityKind
}
PATTERN_VECTOR_LENGTH = 3 * (len(SubPattern) + 1)


@dataclass(frozen=True)
class PatternReport:
    kind: VulnerabilityKind
    flags: dict[SubPattern, bool]
    evidence: dict[SubPattern, tuple[Position, ...]] = field(default_factory=dict)
    # positions of constructs worth surfacing without setting a flag
    notes: dict[str, tuple[Position, ...]] = field(default_factory=dict)

    def to_json(self) -> dict:
        evidence = [
            {"pattern": p.camel, "line": line, "column": col}
            for p in PATTERNS_BY_KIND[self.kind]
            for line, col in self.evidence.get(p, ())
        ]
        notes = [
            {"note": name, "line": line, "column": col}
            for name in sorted(self.notes)
            for line, col in self.notes[name]
        ]
        return {
            "kind": self.kind.value,
            "flags": {p.camel: bool(self.flags[p]) for p in PATTERNS_BY_KIND[self.kind]},
            "evidence": evidence,
            "notes": notes,
        }


def _report(kind: VulnerabilityKind, found: dict[SubPattern, list[Position]],
            notes: dict[str, list[Position]] | None = None) -> PatternReport:
    flags = {p: bool(found.get(p)) for p in PATTERNS_BY_KIND[kind]}
    evidence = {p: tuple(dict.fromkeys(found[p])) for p in PATTERNS_BY_KIND[kind] if found.get(p)}
    return PatternReport(kind, flags, evidence,
                         {k: tuple(v) for k, v in (notes or {}).items() if v})


def _pos(node: A.Expr | A.Stmt) -> Position:
    return (node.line, node.column)


# shared syntax facts ----------------------------------------------------

_NUMERIC = re.compile(r"u?int\d*$")


def is_zero_literal(e: A.Expr) -> bool:
    return e.kind == A.LITERAL and e.name.split()[0] in ("0", "0x0", "0x00")


def balance_variables(fn: A.FunctionAst) -> frozenset[str]:
    """State mappings from address to a number that the function indexes."""
    candidates = {
        v.name for v in fn.state_vars
        if v.is_mapping and v.key_type.startswith("address") and _NUMERIC.match(v.value_type)
    }
    used = {
        e.operands[0].name for e in fn.expressions()
        if e.kind == A.INDEX and e.operands[0].kind == A.IDENT
    }
    return frozenset(candidates & used)


def balance_accesses(fn: A.FunctionAst, balances: frozenset[str]) -> Iterator[A.Expr]:
    for e in fn.expressions():
        if e.kind == A.INDEX and e.operands[0].kind == A.IDENT and e.operands[0].name in balances:
            yield e


def is_balance_deduction(s: A.Stmt, balances: frozenset[str]) -> bool:
    if s.kind not in (A.ASSIGNMENT, A.COMPOUND):
        return False
    lhs, rhs = s.exprs
    if not (lhs.kind == A.INDEX and lhs.operands[0].kind == A.IDENT
            and lhs.operands[0].name in balances):
        return False
    if s.kind == A.COMPOUND:
        return s.op == "-="
    if is_zero_literal(rhs) or (rhs.kind == A.BINARY and rhs.name == "-"):
        return True
    callee = rhs.operands[0] if rhs.kind == A.CALL else None
    return callee is not None and callee.kind == A.MEMBER and callee.name == "sub"


def first_statement_with(fn: A.FunctionAst, kinds: tuple[str, ...]
                         ) -> tuple[A.Stmt, A.Expr] | None:
    for s in fn.statements():
        for e in s.expressions():
            if e.kind in kinds:
                return s, e
    return None


def first_money_transfer(fn: A.FunctionAst) -> tuple[A.Stmt, A.Expr] | None:
    """First ``call.value`` site, else the first ``transfer``/``send`` site."""
    return first_statement_with(fn, (A.CALL_VALUE,)) or first_statement_with(
        fn, (A.TRANSFER, A.SEND))


def is_self_call(e: A.Expr, fn: A.FunctionAst) -> bool:
    if e.kind != A.CALL or not fn.name:
        return False
    callee = e.operands[0]
    if callee.kind == A.IDENT:
        return callee.name == fn.name
    if callee.kind == A.MEMBER and callee.name == fn.name:
        recv = callee.operands[0]
        return recv.kind == A.IDENT and recv.name == "this"
    return False


def last_index(s: A.Stmt) -> int:
    return max(x.index for x in s.walk())


def guards(fn: A.FunctionAst) -> Iterator[tuple[A.Stmt, list[A.Stmt]]]:
    """Each guard statement with the statements whose execution it controls.

    An ``if`` controls its branches, and also everything after it when its
    then-branch only exits; ``require``/``assert`` control every later
    statement.
    """
    stmts = list(fn.statements())
    for s in stmts:
        if s.kind in A.CONDITIONALS:
            guarded = [x for c in (*s.children, *s.else_children) for x in c.walk()]
            if s.children and all(c.kind in (A.REVERT, A.THROW, A.RETURN) for c in s.children):
                end = last_index(s)
                guarded += [x for x in stmts if x.index > end]
            yield s, guarded
        elif s.kind in (A.REQUIRE, A.ASSERT):
            yield s, [x for x in stmts if x.index > s.index]


def is_critical(s: A.Stmt, fn: A.FunctionAst) -> bool:
    """Money transfer or state write."""
    if any(e.kind in A.MONEY_TRANSFERS for e in s.expressions()):
        return True
    if s.kind in (A.ASSIGNMENT, A.COMPOUND):
        root = s.exprs[0].root()
        return root is not None and fn.symbol(root.name) == STATE
    return False


def loop_writes(loop: A.Stmt) -> set[str]:
    """Root names written by a loop's body and update clause."""
    written: set[str] = set()
    stmts = list(loop.header[1:]) + list(loop.children)
    for top in stmts:
        for s in top.walk():
            if s.kind == A.DECLARATION:
                written.add(s.exprs[0].name)
            elif s.kind in (A.ASSIGNMENT, A.COMPOUND):
                root = s.exprs[0].root()
                if root is not None:
                    written.add(root.name)
            for e in s.expressions():
                if e.kind == A.UNARY and e.name in ("++", "--", "delete"):
                    root = e.operands[0].root()
                    if root is not None:
                        written.add(root.name)
    return written


def loop_has_exit(loop: A.Stmt) -> bool:
    return any(
        s.kind in (A.BREAK, A.RETURN, A.REVERT, A.THROW)
        for c in loop.children for s in c.walk()
    )


def is_constant_true(e: A.Expr) -> bool:
    if e.kind != A.LITERAL:
        return False
    text = e.name.split()[0]
    if text == "true":
        return True
    try:
        return int(text.replace("_", ""), 0) != 0
    except ValueError:
        return False


def condition_variables(fn: A.FunctionAst, cond: A.Expr) -> set[str]:
    return {
        e.name for e in cond.walk()
        if e.kind == A.IDENT and variable_root(fn, e) is not None
    }


def suspicious_loop(fn: A.FunctionAst, loop: A.Stmt) -> bool:
    """Whether the loop's exit condition may never become false."""
    if loop_has_exit(loop):
        return False
    cond = loop.exprs[0]
    if is_constant_true(cond):
        return True
    if any(e.kind == A.CALL for e in cond.walk()):
        return False
    names = condition_variables(fn, cond)
    return bool(names) and not (names & loop_writes(loop))


def self_calls(fn: A.FunctionAst) -> Iterator[tuple[A.Expr, bool]]:
    """Every direct self-call with whether it sits inside an if/if-else."""

    def visit(s: A.Stmt, in_if: bool) -> Iterator[tuple[A.Expr, bool]]:
        for e in s.expressions():
            if is_self_call(e, fn):
                yield e, in_if
        nested_in_if = in_if or s.kind in A.CONDITIONALS
        for h in s.header:
            yield from visit(h, in_if)
        for c in (*s.children, *s.else_children):
            yield from visit(c, nested_in_if)

    for s in fn.body:
        yield from visit(s, False)


def _comparisons(e: A.Expr) -> Iterator[A.Expr]:
    for x in e.walk():
        if x.kind == A.BINARY and x.name in ("<", "<=", ">", ">="):
            yield x


# extractors -------------------------------------------------------------

def extract_reentrancy(fn: A.FunctionAst) -> PatternReport:
    found: dict[SubPattern, list[Position]] = {}
    notes: dict[str, list[Position]] = {"transferOrSend": []}
    for e in fn.expressions():
        if e.kind == A.CALL_VALUE:
            found.setdefault(SubPattern.CALL_VALUE_INVOCATION, []).append(_pos(e))
        elif e.kind in (A.TRANSFER, A.SEND):
            notes["transferOrSend"].append(_pos(e))
    first = first_statement_with(fn, (A.CALL_VALUE,))
    if first is None:
        return _report(VulnerabilityKind.REENTRANCY, found, notes)
    cv_stmt, cv = first
    balances = balance_variables(fn)

    deductions = [s for s in fn.statements() if is_balance_deduction(s, balances)]
    if deductions and all(s.index > cv_stmt.index for s in deductions):
        found[SubPattern.BALANCE_DEDUCTION] = [_pos(s) for s in deductions]

    # locals loaded from a balance stand in for it in comparisons
    derived = taint_propagate(fn, balance_accesses(fn, balances))
    amount = cv.operands[1]
    amount_names = {x.name for x in amount.walk() if x.kind == A.IDENT} - {"msg", "this"}
    amount_is_balance = mentions_taint(amount, derived)

    def matches_amount(side: A.Expr) -> bool:
        if side == amount:
            return True
        names = {x.name for x in side.walk() if x.kind == A.IDENT}
        return bool(names & amount_names)

    for g, _ in guards(fn):
        if g.index >= cv_stmt.index:
            continue
        for cmp in _comparisons(g.exprs[0]):
            left, right = cmp.operands
            for mine, other in ((left, right), (right, left)):
                if mentions_taint(mine, derived) and (amount_is_balance or matches_amount(other)):
                    found.setdefault(SubPattern.ENOUGH_BALANCE, []).append(_pos(cmp))
                    break
    return _report(VulnerabilityKind.REENTRANCY, found, notes)


def _call_arguments(e: A.Expr) -> tuple[A.Expr, ...]:
    if e.kind in (A.CALL, A.CALL_VALUE, A.TRANSFER, A.SEND):
        return e.operands[1:]
    return ()


def extract_timestamp(fn: A.FunctionAst) -> PatternReport:
    found: dict[SubPattern, list[Position]] = {}
    seeds = [e for e in fn.expressions() if e.kind == A.TIMESTAMP]
    if seeds:
        found[SubPattern.TIMESTAMP_INVOCATION] = [_pos(e) for e in seeds]
    for s in fn.statements():
        values: list[A.Expr] = []
        if s.kind == A.DECLARATION and len(s.exprs) > 1:
            values.append(s.exprs[1])
        elif s.kind in (A.ASSIGNMENT, A.COMPOUND):
            values.append(s.exprs[1])
        for e in s.expressions():
            values.extend(_call_arguments(e))
        for v in values:
            for x in v.walk():
                if x.kind == A.TIMESTAMP:
                    found.setdefault(SubPattern.TIMESTAMP_ASSIGN, []).append(_pos(x))
    if seeds:
        state = taint_propagate(fn, seeds)
        for g, guarded in guards(fn):
            if mentions_taint(g.exprs[0], state) and any(is_critical(x, fn) for x in guarded):
                found.setdefault(SubPattern.TIMESTAMP_CONTAMINATION, []).append(_pos(g))
    return _report(VulnerabilityKind.TIMESTAMP, found)


def extract_infinite_loop(fn: A.FunctionAst) -> PatternReport:
    found: dict[SubPattern, list[Position]] = {}
    for s in fn.statements():
        if s.kind in A.LOOPS:
            found.setdefault(SubPattern.LOOP_STATEMENT, []).append(_pos(s))
            if suspicious_loop(fn, s):
                found.setdefault(SubPattern.LOOP_CONDITION, []).append(_pos(s.exprs[0]))
    for call, in_if in self_calls(fn):
        if not in_if:
            found.setdefault(SubPattern.SELF_INVOCATION, []).append(_pos(call))
    return _report(VulnerabilityKind.INFINITE_LOOP, found)


EXTRACTORS = {
    VulnerabilityKind.REENTRANCY: extract_reentrancy,
    VulnerabilityKind.TIMESTAMP: extract_timestamp,
    VulnerabilityKind.INFINITE_LOOP: extract_infinite_loop,
}


def extract(fn: A.FunctionAst, kind: VulnerabilityKind) -> PatternReport:
    return EXTRACTORS[kind](fn)


def encode_patterns(report: PatternReport) -> np.ndarray:
    """Concatenate, per sub-pattern of the kind, a 9-way one-hot id and a flag digit."""
    blocks = []
    for p in PATTERNS_BY_KIND[report.kind]:
        block = np.zeros(len(SubPattern) + 1)
        block[p.value] = 1.0
        block[-1] = 1.0 if report.flags[p] else 0.0
        blocks.append(block)
    return np.concatenate(blocks)


__all__ = [
    "PATTERNS_BY_KIND",
    "PATTERN_VECTOR_LENGTH",
    "PatternReport",
    "SubPattern",
    "TaintState",
    "VulnerabilityKind",
    "encode_patterns",
    "extract",
    "extract_infinite_loop",
    "extract_reentrancy",
    "extract_timestamp",
    "taint_propagate",
]
