"""Per-function contract graphs: role-classified nodes and temporally ordered edges."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterator

import numpy as np

from cgescan.errors import DimensionError, GraphBuildError
from cgescan.frontend import ast as A
from cgescan.frontend.parser import render_expr
from cgescan.frontend.resolve import STATE, UNRESOLVED
from cgescan.patterns import (
    VulnerabilityKind,
    balance_variables,
    first_money_transfer,
    guards,
    is_self_call,
)
from cgescan.taint import VARIABLE_CLASSES


class Role(str, Enum):
    CORE = "Core"
    NORMAL = "Normal"
    FALLBACK = "Fallback"


class SubRole(str, Enum):
    INVOCATION = "Invocation"
    VARIABLE = "Variable"
    FALLBACK_FN = "FallbackFn"


class AccFlag(str, Enum):
    LIMITED = "LimitedACC"
    NO_LIMITED = "NoLimited"
    NOT_APPLICABLE = "NotApplicable"


class CallerClass(str, Enum):
    SELF_CONTRACT = "SelfContract"
    MSG_SENDER = "MsgSender"
    EXTERNAL_ADDRESS = "ExternalAddress"
    NOT_APPLICABLE = "NotApplicable"


class Category(str, Enum):
    CONTROL_FLOW = "ControlFlow"
    DATA_FLOW = "DataFlow"
    FALLBACK = "Fallback"


class EdgeType(IntEnum):
    AH = 0
    RG = 1
    IR = 2
    IT = 3
    IF = 4
    GB = 5
    GN = 6
    WH = 7
    FR = 8
    FW = 9
    AG = 10
    AC = 11
    FB = 12

    @property
    def category(self) -> Category:
        if self in (EdgeType.AG, EdgeType.AC):
            return Category.DATA_FLOW
        if self is EdgeType.FB:
            return Category.FALLBACK
        return Category.CONTROL_FLOW


N_EDGE_TYPES = len(EdgeType)
DEFAULT_BUCKETS = 8
FLAG_WIDTH = len(AccFlag) + len(CallerClass) + len(Role) + len(SubRole)


@dataclass(frozen=True)
class NodeRole:
    value: Role
    sub_role: SubRole

    def __post_init__(self):
        if (self.value is Role.FALLBACK) != (self.sub_role is SubRole.FALLBACK_FN):
            raise ValueError("the Fallback role pairs only with the FallbackFn sub-role")


@dataclass(frozen=True)
class GraphNode:
    id: int
    label: str
    name: str
    role: NodeRole
    acc_flag: AccFlag
    caller_class: CallerClass
    # statement index of first occurrence; -1 for the function node
    source_pos: int

    @property
    def is_core(self) -> bool:
        return self.role.value is Role.CORE

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "name": self.name,
            "role": self.role.value.value,
            "sub_role": self.role.sub_role.value,
            "acc_flag": self.acc_flag.value,
            "caller_class": self.caller_class.value,
        }


@dataclass(frozen=True)
class GraphEdge:
    start: int
    end: int
    order: int
    etype: EdgeType

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end, "order": self.order,
                "type": self.etype.name}


@dataclass(frozen=True)
class ContractGraph:
    kind: VulnerabilityKind
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]
    function_name: str

    def core_ids(self) -> list[int]:
        return [n.id for n in self.nodes if n.is_core]

    def node(self, label: str) -> GraphNode:
        for n in self.nodes:
            if n.label == label:
                return n
        raise KeyError(label)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "function": self.function_name,
            "nodes": [n.to_json() for n in self.nodes],
            "edges": [e.to_json() for e in self.edges],
        }


# element discovery ------------------------------------------------------

_INVOCATION_NAMES = {A.CALL_VALUE: "call.value", A.TRANSFER: "transfer", A.SEND: "send",
                     A.TIMESTAMP: "block.timestamp"}


def has_money_transfer(fn: A.FunctionAst) -> bool:
    return any(e.kind in A.MONEY_TRANSFERS for e in fn.expressions())


def needs_fallback_node(fn: A.FunctionAst, kind: VulnerabilityKind) -> bool:
    """Every kind gets a Fallback node when the function moves money."""
    return has_money_transfer(fn)


def has_trigger(fn: A.FunctionAst, kind: VulnerabilityKind) -> bool:
    """Whether the function contains the construct its kind is about."""
    if kind is VulnerabilityKind.REENTRANCY:
        return has_money_transfer(fn)
    if kind is VulnerabilityKind.TIMESTAMP:
        return any(e.kind == A.TIMESTAMP for e in fn.expressions())
    return any(s.kind in A.LOOPS for s in fn.statements()) or any(
        is_self_call(e, fn) for e in fn.expressions())


def _index_operands(path: A.Expr) -> Iterator[A.Expr]:
    e = path
    found = []
    while e.kind in (A.MEMBER, A.INDEX):
        if e.kind == A.INDEX:
            found.append(e.operands[1])
        e = e.operands[0]
    yield from reversed(found)


class _Element:
    __slots__ = ("sub_role", "key", "expr")

    def __init__(self, sub_role: SubRole, key: object, expr: A.Expr):
        self.sub_role = sub_role
        self.key = key
        self.expr = expr


class _Builder:
    def __init__(self, fn: A.FunctionAst, kind: VulnerabilityKind):
        self.fn = fn
        self.kind = kind
        self.names: list[str] = []
        self.sub_roles: list[SubRole] = []
        self.exprs: list[A.Expr | None] = []
        self.positions: list[int] = []
        self.by_key: dict[object, int] = {}
        # statement index -> [(node id, part)], part in target/lhs/rhs/other
        self.stmt_nodes: dict[int, list[tuple[int, str]]] = {}
        self.loop_nodes: dict[int, int] = {}

        self._add(fn.name or "fallback", SubRole.INVOCATION, None, -1, key=("function",))
        for s in fn.statements():
            self.stmt_nodes[s.index] = self._collect(s)
        self.fallback_id: int | None = None
        if needs_fallback_node(fn, kind):
            first = first_money_transfer(fn)
            self.fallback_id = self._add("fallback", SubRole.FALLBACK_FN, None,
                                         first[0].index, key=("fallback",))

    def _add(self, name: str, sub_role: SubRole, expr: A.Expr | None, pos: int,
             key: object) -> int:
        if key in self.by_key:
            return self.by_key[key]
        nid = len(self.names)
        self.by_key[key] = nid
        self.names.append(name)
        self.sub_roles.append(sub_role)
        self.exprs.append(expr)
        self.positions.append(pos)
        return nid

    def _elements(self, e: A.Expr) -> Iterator[_Element]:
        fn = self.fn
        if e.kind in (A.IDENT, A.MEMBER, A.INDEX):
            root = e.root()
            if root is not None:
                cls = fn.symbol(root.name)
                if cls in VARIABLE_CLASSES:
                    yield _Element(SubRole.VARIABLE, ("var", render_expr(e)), e)
                elif cls == UNRESOLVED:
                    raise GraphBuildError(
                        f"{fn.name or 'fallback'}: unresolved identifier {root.name!r} "
                        f"at {root.line}:{root.column}")
            for sub in _index_operands(e):
                yield from self._elements(sub)
            return
        if e.kind == A.CALL:
            callee = e.operands[0]
            if callee.kind == A.MEMBER:
                yield from self._elements(callee.operands[0])
            for sub in _index_operands(callee) if callee.kind == A.INDEX else ():
                yield from self._elements(sub)
            yield _Element(SubRole.INVOCATION, ("inv", id(e)), e)
            for arg in e.operands[1:]:
                yield from self._elements(arg)
            return
        if e.kind in (A.CALL_VALUE, A.TRANSFER, A.SEND):
            yield from self._elements(e.operands[0])
            yield _Element(SubRole.INVOCATION, ("inv", id(e)), e)
            for arg in e.operands[1:]:
                yield from self._elements(arg)
            return
        if e.kind == A.TIMESTAMP:
            yield _Element(SubRole.INVOCATION, ("inv", id(e)), e)
            return
        for op in e.operands:
            yield from self._elements(op)

    def _node_for(self, el: _Element, s: A.Stmt) -> int:
        if el.sub_role is SubRole.VARIABLE:
            name = el.key[1]
        elif el.expr.kind == A.CALL:
            name = render_expr(el.expr.operands[0])
        else:
            name = _INVOCATION_NAMES[el.expr.kind]
        return self._add(name, el.sub_role, el.expr, s.index, el.key)

    def _nodes_of(self, e: A.Expr, s: A.Stmt) -> list[int]:
        return [self._node_for(el, s) for el in self._elements(e)]

    def _collect(self, s: A.Stmt) -> list[tuple[int, str]]:
        out: list[tuple[int, str]] = []
        if s.kind in A.LOOPS:
            nid = self._add(s.kind, SubRole.INVOCATION, None, s.index, key=("loop", s.index))
            self.loop_nodes[s.index] = nid
            out.append((nid, "other"))
            out += [(n, "other") for n in self._nodes_of(s.exprs[0], s)]
        elif s.kind == A.DECLARATION:
            target = s.exprs[0]
            out += [(n, "target") for n in self._nodes_of(target, s)]
            if len(s.exprs) > 1:
                out += [(n, "rhs") for n in self._nodes_of(s.exprs[1], s)]
        elif s.kind in (A.ASSIGNMENT, A.COMPOUND):
            lhs, rhs = s.exprs
            root = lhs.root()
            if root is not None and self.fn.symbol(root.name) in VARIABLE_CLASSES:
                out.append((self._node_for(
                    _Element(SubRole.VARIABLE, ("var", render_expr(lhs)), lhs), s), "target"))
                for sub in _index_operands(lhs):
                    out += [(n, "lhs") for n in self._nodes_of(sub, s)]
            else:
                out += [(n, "lhs") for n in self._nodes_of(lhs, s)]
            out += [(n, "rhs") for n in self._nodes_of(rhs, s)]
        else:
            for e in s.exprs:
                out += [(n, "other") for n in self._nodes_of(e, s)]
        return out

    # roles ------------------------------------------------------------

    def core_ids(self) -> set[int]:
        fn, kind = self.fn, self.kind
        core: set[int] = set()
        if has_trigger(fn, kind):
            core.add(0)
        var_ids = {k[1]: v for k, v in self.by_key.items() if k[0] == "var"}
        inv_ids = {k[1]: v for k, v in self.by_key.items() if k[0] == "inv"}

        def var_node(e: A.Expr) -> int | None:
            return var_ids.get(render_expr(e)) if e.kind in (A.IDENT, A.MEMBER, A.INDEX) else None

        if kind is VulnerabilityKind.REENTRANCY:
            for e in fn.expressions():
                if e.kind in A.MONEY_TRANSFERS:
                    core.add(inv_ids[id(e)])
            balances = balance_variables(fn)
            for text, nid in var_ids.items():
                root = self.exprs[nid].root()
                if root is not None and root.name in balances:
                    core.add(nid)
            # state variables that feed a balance write or guard a transfer/write
            def writes_balance(s: A.Stmt) -> bool:
                if s.kind not in (A.ASSIGNMENT, A.COMPOUND):
                    return False
                root = s.exprs[0].root()
                return root is not None and root.name in balances

            def moves_money(s: A.Stmt) -> bool:
                return any(e.kind in A.MONEY_TRANSFERS for e in s.expressions())

            feeders = [s.exprs[1] for s in fn.statements() if writes_balance(s)]
            for g, guarded in guards(fn):
                if any(writes_balance(x) or moves_money(x) for x in guarded):
                    feeders.append(g.exprs[0])
            for f in feeders:
                for e in f.walk():
                    nid = var_node(e)
                    if nid is not None and fn.symbol(e.root().name) == STATE:
                        core.add(nid)
        elif kind is VulnerabilityKind.TIMESTAMP:
            for e in fn.expressions():
                if e.kind == A.TIMESTAMP:
                    core.add(inv_ids[id(e)])
                elif e.kind == A.CALL and any(
                        x.kind == A.TIMESTAMP for a in e.operands[1:] for x in a.walk()):
                    core.add(inv_ids[id(e)])
            for s in fn.statements():
                if s.kind in A.ASSIGNING and len(s.exprs) > 1 and any(
                        x.kind == A.TIMESTAMP for x in s.exprs[1].walk()):
                    nid = var_node(s.exprs[0])
                    if nid is not None:
                        core.add(nid)
        else:
            for s in fn.statements():
                if s.kind in A.LOOPS:
                    core.add(self.loop_nodes[s.index])
                    for e in s.exprs[0].walk():
                        nid = var_node(e)
                        if nid is not None:
                            core.add(nid)
            for e in fn.expressions():
                if is_self_call(e, fn):
                    core.add(inv_ids[id(e)])
        return core

    def nodes(self) -> tuple[GraphNode, ...]:
        fn = self.fn
        core = self.core_ids()
        limited = bool(fn.modifiers) or fn.visibility in ("internal", "private")
        acc = AccFlag.LIMITED if limited else AccFlag.NO_LIMITED
        counts = {Role.CORE: 0, Role.NORMAL: 0}
        out = []
        for nid, (name, sub) in enumerate(zip(self.names, self.sub_roles)):
            if sub is SubRole.FALLBACK_FN:
                out.append(GraphNode(nid, "F", name, NodeRole(Role.FALLBACK, sub),
                                     AccFlag.NOT_APPLICABLE, CallerClass.NOT_APPLICABLE,
                                     self.positions[nid]))
                continue
            role = Role.CORE if nid in core else Role.NORMAL
            counts[role] += 1
            label = ("C" if role is Role.CORE else "N") + str(counts[role])
            if sub is SubRole.INVOCATION:
                node_acc, caller = acc, self._caller(nid)
            else:
                node_acc, caller = AccFlag.NOT_APPLICABLE, CallerClass.NOT_APPLICABLE
            out.append(GraphNode(nid, label, name, NodeRole(role, sub), node_acc, caller,
                                 self.positions[nid]))
        return tuple(out)

    def _caller(self, nid: int) -> CallerClass:
        if nid == 0:
            if self.fn.visibility in ("internal", "private"):
                return CallerClass.SELF_CONTRACT
            return CallerClass.MSG_SENDER
        e = self.exprs[nid]
        if e is None or e.kind != A.CALL:
            # loops, block.timestamp and value transfers run as the contract itself
            return CallerClass.SELF_CONTRACT
        callee = e.operands[0]
        if callee.kind != A.MEMBER:
            return CallerClass.SELF_CONTRACT
        recv = callee.operands[0]
        if recv.kind == A.MSG_SENDER:
            return CallerClass.MSG_SENDER
        root = recv.root()
        if root is not None and self.fn.symbol(root.name) in VARIABLE_CLASSES:
            return CallerClass.EXTERNAL_ADDRESS
        return CallerClass.SELF_CONTRACT

    # edges ------------------------------------------------------------

    def edges(self) -> tuple[GraphEdge, ...]:
        raw: list[tuple[int, int, EdgeType]] = []
        first = first_money_transfer(self.fn)
        fb_expr = first[1] if first is not None and self.fallback_id is not None else None
        last = [0]

        def control_type(s: A.Stmt, entry: EdgeType | None) -> EdgeType:
            if s.kind == A.REQUIRE:
                return EdgeType.RG
            if s.kind == A.ASSERT:
                return EdgeType.AH
            if s.kind in A.CONDITIONALS:
                kinds = {c.kind for c in s.children}
                if s.children and kinds <= {A.REVERT, A.THROW}:
                    return EdgeType.IT if A.THROW in kinds else EdgeType.IR
                return EdgeType.IF
            if s.kind == A.WHILE:
                return EdgeType.WH
            if s.kind == A.FOR:
                return EdgeType.FR
            return entry or EdgeType.FW

        def emit(s: A.Stmt, entry: EdgeType | None) -> bool:
            parts = self.stmt_nodes[s.index]
            if not parts:
                return False
            ids = list(dict.fromkeys(n for n, _ in parts))
            targets = [n for n, p in parts if p == "target"]
            if targets:
                primary = targets[0]
            else:
                invs = [n for n in ids if self.sub_roles[n] is SubRole.INVOCATION]
                primary = invs[0] if invs else ids[0]
            raw.append((last[0], primary, control_type(s, entry)))
            if targets:
                if s.kind == A.COMPOUND:
                    raw.append((primary, primary, EdgeType.AC))
                for n in dict.fromkeys(n for n, p in parts if p == "lhs"):
                    raw.append((n, primary, EdgeType.AC))
                for n in dict.fromkeys(n for n, p in parts if p == "rhs"):
                    raw.append((primary, n, EdgeType.AG))
            else:
                for n in ids:
                    if n != primary or self.sub_roles[n] is SubRole.VARIABLE:
                        raw.append((n, primary, EdgeType.AC))
            if fb_expr is not None and any(e is fb_expr for e in s.expressions()):
                raw.append((self.by_key[("inv", id(fb_expr))], self.fallback_id, EdgeType.FB))
                raw.append((self.fallback_id, 0, EdgeType.FB))
            last[0] = primary
            return True

        def block(stmts: tuple[A.Stmt, ...], entry: EdgeType | None) -> None:
            for s in stmts:
                if visit(s, entry):
                    entry = None

        def visit(s: A.Stmt, entry: EdgeType | None) -> bool:
            emitted = emit(s, entry)
            block(s.header, None)
            block(s.children, EdgeType.GN if s.kind in A.CONDITIONALS else None)
            block(s.else_children, EdgeType.GB)
            return emitted

        block(self.fn.body, None)
        return tuple(GraphEdge(a, b, k + 1, t) for k, (a, b, t) in enumerate(raw))


def assign_roles(fn: A.FunctionAst, kind: VulnerabilityKind) -> tuple[GraphNode, ...]:
    return _Builder(fn, kind).nodes()


def build_graph(fn: A.FunctionAst, kind: VulnerabilityKind) -> ContractGraph:
    b = _Builder(fn, kind)
    return ContractGraph(kind, b.nodes(), b.edges(), fn.name or "fallback")


def bucket_of(name: str, buckets: int = DEFAULT_BUCKETS, seed: int = 0) -> int:
    digest = hashlib.blake2b(f"{seed}:{name}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") % buckets


def node_feature(node: GraphNode, buckets: int = DEFAULT_BUCKETS, seed: int = 0) -> np.ndarray:
    """Unpadded feature row of width ``buckets + 13``."""
    v = np.zeros(buckets + FLAG_WIDTH)
    v[bucket_of(node.name, buckets, seed)] = 1.0
    off = buckets
    for value, enum in ((node.acc_flag, AccFlag), (node.caller_class, CallerClass),
                        (node.role.value, Role), (node.role.sub_role, SubRole)):
        v[off + list(enum).index(value)] = 1.0
        off += len(enum)
    return v


def encode_node_features(graph: ContractGraph, dim: int, buckets: int = DEFAULT_BUCKETS,
                         seed: int = 0) -> np.ndarray:
    width = buckets + FLAG_WIDTH
    if dim < width:
        raise DimensionError(f"dim {dim} is below the minimum feature width {width}")
    out = np.zeros((len(graph.nodes), dim))
    for i, n in enumerate(graph.nodes):
        out[i, :width] = node_feature(n, buckets, seed)
    return out


def encode_edge_type(etype: EdgeType) -> np.ndarray:
    v = np.zeros(N_EDGE_TYPES)
    v[int(etype)] = 1.0
    return v
