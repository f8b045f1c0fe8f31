"""Identifier classification for one function of a parsed contract."""

from __future__ import annotations

from dataclasses import replace

from cgescan.errors import UnknownFunction
from cgescan.frontend import ast as A

PARAM = "param"
LOCAL = "local"
STATE = "state"
BUILTIN = "builtin"
FUNCTION = "function"
EVENT = "event"
MODIFIER = "modifier"
UNRESOLVED = "unresolved"

BUILTINS = frozenset(
    """
    msg block tx this super now abi keccak256 sha3 sha256 ripemd160 ecrecover
    addmod mulmod selfdestruct suicide gasleft blockhash type require assert revert
    address payable bool string bytes byte uint int var _
    """.split()
)


def _is_builtin(name: str) -> bool:
    if name in BUILTINS or name.startswith("new "):
        return True
    for prefix in ("uint", "int", "bytes"):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            return True
    return False


def referenced_identifiers(fn: A.FunctionAst) -> list[A.Expr]:
    """Identifier expressions in the body, excluding member names."""
    return [e for e in fn.expressions() if e.kind == A.IDENT]


def resolve_function(contract: A.ContractAst, name: str) -> A.FunctionAst:
    """Return the named function with every body identifier classified.

    Classes are ``param``, ``local``, ``state``, ``function``, ``event``,
    ``builtin`` or ``unresolved``; the result also carries the contract's
    state variables and function names so later passes need no contract.
    """
    fn = next((f for f in contract.functions if f.name == name), None)
    if fn is None:
        raise UnknownFunction(f"function {name!r} not found in contract {contract.name!r}")
    fn_names = tuple(f.name for f in contract.functions if f.name)
    state = {v.name for v in contract.state_vars}
    symbols: dict[str, str] = {}
    for p in fn.params:
        if p.name:
            symbols[p.name] = PARAM
    for s in fn.statements():
        if s.kind == A.DECLARATION:
            symbols.setdefault(s.exprs[0].name, LOCAL)
    modifier_names = {m.name for m in contract.modifier_defs}
    for e in referenced_identifiers(fn):
        if e.name in symbols:
            continue
        if e.name in state:
            symbols[e.name] = STATE
        elif e.name in fn_names:
            symbols[e.name] = FUNCTION
        elif e.name in contract.events:
            symbols[e.name] = EVENT
        elif e.name in modifier_names:
            symbols[e.name] = MODIFIER
        elif _is_builtin(e.name):
            symbols[e.name] = BUILTIN
        else:
            symbols[e.name] = UNRESOLVED
    return replace(
        fn,
        contract=contract.name,
        symbols=tuple(sorted(symbols.items())),
        state_vars=contract.state_vars,
        functions=fn_names,
    )
