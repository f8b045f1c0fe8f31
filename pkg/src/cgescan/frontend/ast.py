"""Syntax tree for one Solidity source unit.

Positions (``line``/``column``) are excluded from equality so two trees
parsed from differently formatted text compare equal when their
structure matches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

# Expression kinds
IDENT = "identifier"
MEMBER = "member-access"
INDEX = "index-access"
CALL = "call"
CALL_VALUE = "call-value"
TRANSFER = "transfer"
SEND = "send"
BINARY = "binary-op"
UNARY = "unary-op"
LITERAL = "literal"
MSG_SENDER = "msg-sender"
TIMESTAMP = "block-timestamp"
CONDITIONAL = "conditional"

MONEY_TRANSFERS = (CALL_VALUE, TRANSFER, SEND)
INVOCATION_KINDS = (CALL, CALL_VALUE, TRANSFER, SEND, TIMESTAMP)

# Statement kinds
DECLARATION = "declaration"
ASSIGNMENT = "assignment"
COMPOUND = "compound-assignment"
IF = "if"
IF_ELSE = "if-else"
FOR = "for"
WHILE = "while"
REQUIRE = "require"
ASSERT = "assert"
REVERT = "revert"
THROW = "throw"
RETURN = "return"
EXPRESSION = "expression"
SELF_CALL = "self-invocation-call"
EXTERNAL_CALL = "external-call"
BREAK = "break"
CONTINUE = "continue"

ASSIGNING = (DECLARATION, ASSIGNMENT, COMPOUND)
LOOPS = (FOR, WHILE)
CONDITIONALS = (IF, IF_ELSE)
GUARDS = (IF, IF_ELSE, REQUIRE, ASSERT)


@dataclass(frozen=True)
class Expr:
    """One expression node.

    ``name`` holds the identifier, member name, operator symbol or literal
    text depending on ``kind``.  Calls keep the callee as ``operands[0]``;
    ``call-value`` is ``(receiver, amount, *args)`` and ``transfer``/``send``
    are ``(receiver, amount)``.
    """

    kind: str
    name: str = ""
    operands: tuple["Expr", ...] = ()
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def walk(self) -> Iterator["Expr"]:
        yield self
        for op in self.operands:
            yield from op.walk()

    def root(self) -> "Expr | None":
        """Base identifier of an access path such as ``a.b[c]``."""
        e: Expr = self
        while e.kind in (MEMBER, INDEX):
            e = e.operands[0]
        return e if e.kind == IDENT else None


@dataclass(frozen=True)
class Stmt:
    index: int
    kind: str
    exprs: tuple[Expr, ...] = ()
    children: tuple["Stmt", ...] = ()
    else_children: tuple["Stmt", ...] = ()
    header: tuple["Stmt", ...] = ()
    op: str = ""
    decl_type: str = ""
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def condition(self) -> Expr | None:
        if self.kind in (IF, IF_ELSE, FOR, WHILE, REQUIRE, ASSERT):
            return self.exprs[0]
        return None

    def nested(self) -> Iterator["Stmt"]:
        """Direct sub-statements in textual order."""
        yield from self.header
        yield from self.children
        yield from self.else_children

    def walk(self) -> Iterator["Stmt"]:
        yield self
        for s in self.nested():
            yield from s.walk()

    def expressions(self) -> Iterator[Expr]:
        """Every expression node owned by this statement (not its children)."""
        for e in self.exprs:
            yield from e.walk()


@dataclass(frozen=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True)
class StateVar:
    name: str
    type: str
    is_mapping: bool
    key_type: str = ""
    value_type: str = ""


@dataclass(frozen=True)
class FunctionAst:
    name: str
    params: tuple[Param, ...]
    modifiers: tuple[str, ...]
    visibility: str
    payable: bool
    body: tuple[Stmt, ...]
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    # filled by resolve_function
    contract: str = field(default="", compare=False)
    symbols: tuple[tuple[str, str], ...] = field(default=(), compare=False)
    state_vars: tuple[StateVar, ...] = field(default=(), compare=False)
    functions: tuple[str, ...] = field(default=(), compare=False)

    @property
    def is_fallback(self) -> bool:
        return self.name == ""

    def statements(self) -> Iterator[Stmt]:
        for s in self.body:
            yield from s.walk()

    def expressions(self) -> Iterator[Expr]:
        for s in self.statements():
            yield from s.expressions()

    def symbol(self, name: str) -> str:
        return dict(self.symbols).get(name, "unresolved")

    def state_var(self, name: str) -> StateVar | None:
        for v in self.state_vars:
            if v.name == name:
                return v
        return None

    def param_type(self, name: str) -> str | None:
        for p in self.params:
            if p.name == name:
                return p.type
        return None


@dataclass(frozen=True)
class ParseWarning:
    message: str
    line: int
    column: int


@dataclass(frozen=True)
class ContractAst:
    name: str
    state_vars: tuple[StateVar, ...] = ()
    functions: tuple[FunctionAst, ...] = ()
    has_fallback: bool = False
    modifier_defs: tuple[FunctionAst, ...] = ()
    events: tuple[str, ...] = ()
    warnings: tuple[ParseWarning, ...] = field(default=(), compare=False)
