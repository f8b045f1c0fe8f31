"""Solidity-subset front end: tokenizer, parser and name resolution."""

from __future__ import annotations

from dataclasses import dataclass

from cgescan.errors import UnknownFunction
from cgescan.frontend.ast import (
    ContractAst,
    Expr,
    FunctionAst,
    Param,
    ParseWarning,
    StateVar,
    Stmt,
)
from cgescan.frontend.lexer import Token, tokenize
from cgescan.frontend.parser import parse_source, render_contract, render_expr
from cgescan.frontend.resolve import resolve_function


@dataclass(frozen=True)
class Program:
    contracts: tuple[ContractAst, ...]
    warnings: tuple[ParseWarning, ...]

    def contract(self, name: str) -> ContractAst:
        for c in self.contracts:
            if c.name == name:
                return c
        raise KeyError(f"contract {name!r} not found")

    def functions(self) -> list[FunctionAst]:
        """All named or fallback functions, resolved, in source order."""
        return [resolve_function(c, f.name) for c in self.contracts for f in c.functions]


def parse_program(source: str) -> Program:
    warnings: list[ParseWarning] = []
    contracts = parse_source(tokenize(source), warnings)
    return Program(tuple(contracts), tuple(warnings))


def load_function(source: str, function: str, contract: str | None = None) -> FunctionAst:
    """Parse ``source`` and return one resolved function."""
    prog = parse_program(source)
    if contract is not None:
        return resolve_function(prog.contract(contract), function)
    for c in prog.contracts:
        if any(f.name == function for f in c.functions):
            return resolve_function(c, function)
    raise UnknownFunction(f"function {function!r} not found")


__all__ = [
    "ContractAst",
    "Expr",
    "FunctionAst",
    "Param",
    "ParseWarning",
    "Program",
    "StateVar",
    "Stmt",
    "Token",
    "load_function",
    "parse_program",
    "parse_source",
    "render_contract",
    "render_expr",
    "resolve_function",
    "tokenize",
]
