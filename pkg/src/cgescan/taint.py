"""Flow-insensitive may-taint over a function's assignments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from cgescan.frontend import ast as A
from cgescan.frontend.resolve import LOCAL, PARAM, STATE

VARIABLE_CLASSES = (PARAM, LOCAL, STATE)


@dataclass(frozen=True)
class TaintState:
    tainted: frozenset[str]
    sources: tuple[A.Expr, ...]
    iterations: int = 0


def assignment_pairs(fn: A.FunctionAst) -> list[tuple[str, tuple[A.Expr, ...]]]:
    """``(written variable, right-hand sides)`` for every write in ``fn``.

    Index and member writes count as writes of their root variable.
    """
    pairs: list[tuple[str, tuple[A.Expr, ...]]] = []
    for s in fn.statements():
        if s.kind == A.DECLARATION:
            if len(s.exprs) > 1:
                pairs.append((s.exprs[0].name, (s.exprs[1],)))
        elif s.kind in (A.ASSIGNMENT, A.COMPOUND):
            root = s.exprs[0].root()
            if root is not None:
                rhs = (s.exprs[1], s.exprs[0]) if s.kind == A.COMPOUND else (s.exprs[1],)
                pairs.append((root.name, rhs))
    return pairs


def variable_root(fn: A.FunctionAst, e: A.Expr) -> str | None:
    root = e.root()
    if root is not None and fn.symbol(root.name) in VARIABLE_CLASSES:
        return root.name
    return None


def taint_propagate(fn: A.FunctionAst, seeds: Iterable[A.Expr]) -> TaintState:
    """Least fixed point of the one-step taint relation.

    A variable is tainted when some write to it has a right-hand side that
    mentions a tainted variable or contains a seed expression.  Seeds that
    are themselves variable references taint their root variable.
    """
    sources = tuple(dict.fromkeys(seeds))
    seed_set = set(sources)
    tainted: set[str] = set()
    for seed in sources:
        root = variable_root(fn, seed)
        if root is not None:
            tainted.add(root)
    if not seed_set:
        return TaintState(frozenset(), sources, 0)

    pairs = assignment_pairs(fn)
    # seeds are fixed, so which writes contain one never changes
    seeded = [any(e in seed_set for rhs in rhss for e in rhs.walk()) for _, rhss in pairs]
    reads = [
        {e.name for rhs in rhss for e in rhs.walk() if e.kind == A.IDENT}
        for _, rhss in pairs
    ]
    iterations = 0
    changed = True
    while changed:
        changed = False
        iterations += 1
        for (target, _), has_seed, names in zip(pairs, seeded, reads):
            if target not in tainted and (has_seed or names & tainted):
                tainted.add(target)
                changed = True
    return TaintState(frozenset(tainted), sources, iterations)


def mentions_taint(e: A.Expr, state: TaintState) -> bool:
    seeds = set(state.sources)
    return any(
        (x.kind == A.IDENT and x.name in state.tainted) or x in seeds for x in e.walk()
    )
