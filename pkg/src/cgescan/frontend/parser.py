"""Recursive-descent parser for the supported Solidity subset.

Grammar coverage: pragma, contract declarations, elementary/mapping/array
state variables, functions (including the unnamed fallback) with
modifiers, modifier definitions, events, if/else, for, while, do-while,
require/assert/revert/throw, assignments and compound assignments,
member/index access, ``call.value``/``transfer``/``send`` and
intra-contract calls.  Assembly blocks, inheritance lists, libraries,
interfaces, structs, enums and ``using`` directives are skipped with a
``ParseWarning``.
"""

from __future__ import annotations

from dataclasses import replace

from cgescan.errors import ParseError
from cgescan.frontend import ast as A
from cgescan.frontend.lexer import (
    IDENTIFIER,
    INTEGER,
    KEYWORD,
    STRING,
    Token,
    is_type_keyword,
)

UNITS = frozenset("wei gwei szabo finney ether seconds minutes hours days weeks years".split())
VISIBILITY = ("public", "external", "internal", "private")
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<=", ">>=")
DATA_LOCATIONS = ("memory", "storage", "calldata")
# namespaces whose members are builtins rather than external contracts
BUILTIN_NAMESPACES = frozenset("abi msg block tx this super string bytes type".split())

_BINARY_LEVELS: list[tuple[str, ...]] = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("|",),
    ("^",),
    ("&",),
    ("<<", ">>", ">>>"),
    ("+", "-"),
    ("*", "/", "%"),
]

_EOF = Token("eof", "<eof>", 0, 0)


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.warnings: list[A.ParseWarning] = []
        self._stmt_index = 0

    # token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self._eof()

    def _eof(self) -> Token:
        if self.tokens:
            last = self.tokens[-1]
            return Token("eof", "<eof>", last.line, last.column + len(last.text))
        return _EOF

    def peek(self, k: int = 1) -> Token:
        i = self.pos + k
        return self.tokens[i] if i < len(self.tokens) else self._eof()

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind not in (STRING, "eof") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            t = self.tok
            raise ParseError(repr(text), t.text, t.line, t.column)
        return self.advance()

    def expect_ident(self) -> Token:
        t = self.tok
        if t.kind != IDENTIFIER:
            raise ParseError("identifier", t.text, t.line, t.column)
        return self.advance()

    def warn(self, message: str, tok: Token | None = None) -> None:
        t = tok or self.tok
        self.warnings.append(A.ParseWarning(message, t.line, t.column))

    def skip_until(self, text: str) -> None:
        """Skip tokens up to and including ``text`` at nesting depth zero."""
        depth = 0
        while self.tok.kind != "eof":
            t = self.advance()
            if t.text in ("(", "[", "{") and t.kind != STRING:
                depth += 1
            elif t.text in (")", "]", "}") and t.kind != STRING:
                depth -= 1
                if depth < 0:
                    raise ParseError(repr(text), t.text, t.line, t.column)
                if depth == 0 and t.text == text:
                    return
            elif depth == 0 and t.text == text and t.kind != STRING:
                return
        t = self.tok
        raise ParseError(repr(text), t.text, t.line, t.column)

    def skip_braced(self) -> None:
        """Skip from the current position through the matching ``}``."""
        while not self.at("{"):
            if self.tok.kind == "eof":
                t = self.tok
                raise ParseError("'{'", t.text, t.line, t.column)
            self.advance()
        self.skip_until("}")

    # source units -------------------------------------------------------

    def parse_units(self) -> list[A.ContractAst]:
        contracts: list[A.ContractAst] = []
        while self.tok.kind != "eof":
            if self.at("pragma"):
                self.skip_until(";")
            elif self.at("import"):
                self.warn("import directive skipped")
                self.skip_until(";")
            elif self.at("abstract") and self.peek().text == "contract":
                self.advance()
            elif self.at("contract"):
                contracts.append(self.parse_contract())
            elif self.at("library", "interface"):
                self.warn(f"{self.tok.text} declaration skipped")
                self.skip_braced()
            elif self.at(";"):
                self.advance()
            else:
                t = self.tok
                raise ParseError("contract declaration", t.text, t.line, t.column)
        return contracts

    def parse_contract(self) -> A.ContractAst:
        start = len(self.warnings)
        self.expect("contract")
        name = self.expect_ident().text
        if self.at("is"):
            self.warn("inheritance list skipped")
            while not self.at("{"):
                if self.tok.kind == "eof":
                    self.expect("{")
                self.advance()
        self.expect("{")
        state_vars: list[A.StateVar] = []
        functions: list[A.FunctionAst] = []
        modifiers: list[A.FunctionAst] = []
        events: list[str] = []
        while not self.at("}"):
            t = self.tok
            if t.kind == "eof":
                self.expect("}")
            if self.at("function", "constructor") or (
                self.at("fallback", "receive") and self.peek().text == "("
            ):
                fn = self.parse_function()
                if fn is None:
                    continue
                if fn.name and any(f.name == fn.name for f in functions):
                    self.warnings.append(A.ParseWarning(
                        f"overloaded function {fn.name!r} skipped", fn.line, fn.column))
                    continue
                functions.append(fn)
            elif self.at("modifier"):
                modifiers.append(self.parse_modifier())
            elif self.at("event"):
                self.advance()
                events.append(self.expect_ident().text)
                self.skip_until(";")
            elif self.at("struct", "enum"):
                self.warn(f"{t.text} declaration skipped")
                self.skip_braced()
            elif self.at("using"):
                self.warn("using directive skipped")
                self.skip_until(";")
            elif t.kind == IDENTIFIER and t.text == "error" and self.peek().kind == IDENTIFIER:
                self.warn("error declaration skipped")
                self.skip_until(";")
            elif self.at(";"):
                self.advance()
            else:
                var = self.parse_state_var()
                if any(v.name == var.name for v in state_vars):
                    raise ParseError("distinct state variable name", var.name, t.line, t.column)
                state_vars.append(var)
        self.expect("}")
        fn_names = frozenset(f.name for f in functions if f.name)
        functions = [_classify_calls(f, fn_names) for f in functions]
        return A.ContractAst(
            name=name,
            state_vars=tuple(state_vars),
            functions=tuple(functions),
            has_fallback=any(f.is_fallback for f in functions),
            modifier_defs=tuple(modifiers),
            events=tuple(events),
            warnings=tuple(self.warnings[start:]),
        )

    # types --------------------------------------------------------------

    def parse_type(self) -> str:
        t = self.tok
        if self.at("mapping"):
            self.advance()
            self.expect("(")
            key = self.parse_type()
            self.expect("=>")
            value = self.parse_type()
            self.expect(")")
            base = f"mapping({key} => {value})"
        elif t.kind == KEYWORD and is_type_keyword(t.text):
            self.advance()
            base = t.text
            if base == "address" and self.at("payable"):
                self.advance()
                base = "address payable"
        elif t.kind == IDENTIFIER:
            self.advance()
            base = t.text
            while self.at(".") and self.peek().kind == IDENTIFIER:
                self.advance()
                base += "." + self.advance().text
        else:
            raise ParseError("type name", t.text, t.line, t.column)
        while self.at("["):
            self.advance()
            if self.at("]"):
                self.advance()
                base += "[]"
            else:
                size = self.parse_expression()
                self.expect("]")
                base += f"[{render_expr(size)}]"
        return base

    def parse_state_var(self) -> A.StateVar:
        type_ = self.parse_type()
        while self.at("public", "private", "internal", "constant", "immutable", "override"):
            self.advance()
        name = self.expect_ident().text
        if self.at("="):
            self.advance()
            self.parse_expression()
        self.expect(";")
        key, value = _mapping_parts(type_)
        return A.StateVar(name, type_, type_.startswith("mapping("), key, value)

    def parse_params(self) -> tuple[A.Param, ...]:
        self.expect("(")
        params: list[A.Param] = []
        while not self.at(")"):
            type_ = self.parse_type()
            while self.at(*DATA_LOCATIONS, "indexed", "payable"):
                self.advance()
            name = self.advance().text if self.tok.kind == IDENTIFIER else ""
            params.append(A.Param(name, type_))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return tuple(params)

    # functions ----------------------------------------------------------

    def parse_function(self) -> A.FunctionAst | None:
        head = self.advance()
        if head.text == "function":
            name = self.expect_ident().text if self.tok.kind == IDENTIFIER else ""
        elif head.text == "constructor":
            name = "constructor"
        elif head.text == "fallback":
            name = ""
        else:
            name = "receive"
        params = self.parse_params()
        visibility = "public"
        payable = False
        modifiers: list[str] = []
        while not self.at("{", ";"):
            t = self.tok
            if self.at(*VISIBILITY):
                visibility = self.advance().text
            elif self.at("payable"):
                self.advance()
                payable = True
            elif self.at("view", "pure", "constant", "virtual"):
                self.advance()
            elif self.at("override"):
                self.advance()
                if self.at("("):
                    self.skip_until(")")
            elif self.at("returns"):
                self.advance()
                self.parse_params()
            elif t.kind == IDENTIFIER:
                modifiers.append(self.advance().text)
                if self.at("("):
                    self.skip_until(")")
            else:
                raise ParseError("function attribute or body", t.text, t.line, t.column)
        self._stmt_index = 0
        body: tuple[A.Stmt, ...] = ()
        if self.at(";"):
            self.advance()
        else:
            body = tuple(self.parse_block())
        return A.FunctionAst(
            name=name,
            params=params,
            modifiers=tuple(modifiers),
            visibility=visibility,
            payable=payable,
            body=body,
            line=head.line,
            column=head.column,
        )

    def parse_modifier(self) -> A.FunctionAst:
        head = self.expect("modifier")
        name = self.expect_ident().text
        params = self.parse_params() if self.at("(") else ()
        while self.at("virtual", "override"):
            self.advance()
        self._stmt_index = 0
        body = tuple(self.parse_block())
        return A.FunctionAst(name, params, (), "internal", False, body, head.line, head.column)

    # statements ---------------------------------------------------------

    def _next_index(self) -> int:
        i = self._stmt_index
        self._stmt_index += 1
        return i

    def parse_block(self) -> list[A.Stmt]:
        self.expect("{")
        out: list[A.Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.expect("}")
            out.extend(self.parse_statement())
        self.expect("}")
        return out

    def parse_body(self) -> tuple[A.Stmt, ...]:
        """A block or a single statement (for if/loop bodies)."""
        if self.at("{"):
            return tuple(self.parse_block())
        return tuple(self.parse_statement())

    def parse_statement(self) -> list[A.Stmt]:
        t = self.tok
        text = t.text if t.kind != STRING else ""
        if text == "{":
            return self.parse_block()
        if text == "unchecked" and self.peek().text == "{":
            self.advance()
            return self.parse_block()
        if text == "assembly":
            self.warn("assembly block skipped")
            self.skip_braced()
            return []
        if text == ";":
            self.advance()
            return []
        if text == "if":
            return [self.parse_if()]
        if text == "for":
            return [self.parse_for()]
        if text == "while":
            idx = self._next_index()
            self.advance()
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            body = self.parse_body()
            return [A.Stmt(idx, A.WHILE, (cond,), body, line=t.line, column=t.column)]
        if text == "do":
            idx = self._next_index()
            self.advance()
            body = self.parse_body()
            self.expect("while")
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            self.expect(";")
            self.warn("do-while treated as while", t)
            return [A.Stmt(idx, A.WHILE, (cond,), body, line=t.line, column=t.column)]
        if text in ("require", "assert") and self.peek().text == "(":
            idx = self._next_index()
            self.advance()
            args = self.parse_call_args()
            self.expect(";")
            if not args:
                raise ParseError("condition", ")", t.line, t.column)
            kind = A.REQUIRE if text == "require" else A.ASSERT
            return [A.Stmt(idx, kind, (args[0],), line=t.line, column=t.column)]
        if text == "revert":
            idx = self._next_index()
            self.skip_until(";")
            return [A.Stmt(idx, A.REVERT, line=t.line, column=t.column)]
        if text == "throw":
            idx = self._next_index()
            self.advance()
            self.expect(";")
            return [A.Stmt(idx, A.THROW, line=t.line, column=t.column)]
        if text in ("break", "continue"):
            idx = self._next_index()
            self.advance()
            self.expect(";")
            return [A.Stmt(idx, A.BREAK if text == "break" else A.CONTINUE,
                           line=t.line, column=t.column)]
        if text == "return":
            idx = self._next_index()
            self.advance()
            exprs: tuple[A.Expr, ...] = ()
            if not self.at(";"):
                exprs = (self.parse_expression(),)
            self.expect(";")
            return [A.Stmt(idx, A.RETURN, exprs, line=t.line, column=t.column)]
        if text == "emit":
            idx = self._next_index()
            self.advance()
            e = self.parse_expression()
            self.expect(";")
            return [A.Stmt(idx, A.EXPRESSION, (e,), line=t.line, column=t.column)]
        if text == "(" and self._looks_like_tuple_declaration():
            self.warn("tuple declaration skipped")
            self.skip_until(";")
            return []
        stmt = self.parse_simple_statement()
        self.expect(";")
        return [stmt]

    def _looks_like_tuple_declaration(self) -> bool:
        nxt = self.peek()
        return nxt.kind == KEYWORD and is_type_keyword(nxt.text) or nxt.text == ","

    def _at_declaration(self) -> bool:
        t = self.tok
        if t.kind == KEYWORD and (is_type_keyword(t.text) or t.text == "mapping"):
            # `address(x).transfer(...)` and `uint(x)` are conversions, not declarations
            return not (self.peek().text == "(" and t.text != "mapping")
        if t.kind == IDENTIFIER:
            nxt = self.peek()
            if nxt.kind == IDENTIFIER or nxt.text in DATA_LOCATIONS:
                return True
            if nxt.text == "[" and self.peek(2).text == "]":
                return True
        return False

    def parse_simple_statement(self) -> A.Stmt:
        """Declaration, assignment or expression statement without ``;``."""
        t = self.tok
        idx = self._next_index()
        if self._at_declaration():
            type_ = self.parse_type()
            while self.at(*DATA_LOCATIONS):
                self.advance()
            name_tok = self.expect_ident()
            target = A.Expr(A.IDENT, name_tok.text, line=name_tok.line, column=name_tok.column)
            exprs: tuple[A.Expr, ...] = (target,)
            if self.at("="):
                self.advance()
                exprs = (target, self.parse_expression())
            return A.Stmt(idx, A.DECLARATION, exprs, decl_type=type_,
                          line=t.line, column=t.column)
        if self.at("delete"):
            self.advance()
            target = self.parse_expression()
            zero = A.Expr(A.LITERAL, "0", line=t.line, column=t.column)
            return A.Stmt(idx, A.ASSIGNMENT, (target, zero), op="=",
                          line=t.line, column=t.column)
        if self.at("++", "--"):
            op = self.advance().text
            target = self.parse_unary()
            one = A.Expr(A.LITERAL, "1", line=t.line, column=t.column)
            return A.Stmt(idx, A.COMPOUND, (target, one), op=op[0] + "=",
                          line=t.line, column=t.column)
        lhs = self.parse_expression()
        if self.at(*ASSIGN_OPS):
            op = self.advance().text
            rhs = self.parse_expression()
            kind = A.ASSIGNMENT if op == "=" else A.COMPOUND
            return A.Stmt(idx, kind, (lhs, rhs), op=op, line=t.line, column=t.column)
        if self.at("++", "--"):
            op = self.advance().text
            one = A.Expr(A.LITERAL, "1", line=t.line, column=t.column)
            return A.Stmt(idx, A.COMPOUND, (lhs, one), op=op[0] + "=",
                          line=t.line, column=t.column)
        return A.Stmt(idx, A.EXPRESSION, (lhs,), line=t.line, column=t.column)

    def parse_if(self) -> A.Stmt:
        t = self.expect("if")
        idx = self._next_index()
        self.expect("(")
        cond = self.parse_expression()
        self.expect(")")
        then = self.parse_body()
        if self.at("else"):
            self.advance()
            orelse = self.parse_body()
            return A.Stmt(idx, A.IF_ELSE, (cond,), then, orelse, line=t.line, column=t.column)
        return A.Stmt(idx, A.IF, (cond,), then, line=t.line, column=t.column)

    def parse_for(self) -> A.Stmt:
        t = self.expect("for")
        idx = self._next_index()
        self.expect("(")
        # both header slots always exist; an omitted clause is an empty statement
        if self.at(";"):
            init = A.Stmt(self._next_index(), A.EXPRESSION)
        else:
            init = self.parse_simple_statement()
        self.expect(";")
        if self.at(";"):
            cond = A.Expr(A.LITERAL, "true", line=self.tok.line, column=self.tok.column)
        else:
            cond = self.parse_expression()
        self.expect(";")
        if self.at(")"):
            update = A.Stmt(self._next_index(), A.EXPRESSION)
        else:
            update = self.parse_simple_statement()
        self.expect(")")
        body = self.parse_body()
        return A.Stmt(idx, A.FOR, (cond,), body, header=(init, update),
                      line=t.line, column=t.column)

    # expressions --------------------------------------------------------

    def parse_call_args(self) -> list[A.Expr]:
        self.expect("(")
        args: list[A.Expr] = []
        while not self.at(")"):
            args.append(self.parse_expression())
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return args

    def parse_expression(self) -> A.Expr:
        cond = self.parse_binary(0)
        if self.at("?"):
            self.advance()
            a = self.parse_expression()
            self.expect(":")
            b = self.parse_expression()
            return A.Expr(A.CONDITIONAL, "?:", (cond, a, b), cond.line, cond.column)
        return cond

    def parse_binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.parse_power()
        left = self.parse_binary(level + 1)
        while self.at(*_BINARY_LEVELS[level]):
            op = self.advance().text
            right = self.parse_binary(level + 1)
            left = A.Expr(A.BINARY, op, (left, right), left.line, left.column)
        return left

    def parse_power(self) -> A.Expr:
        base = self.parse_unary()
        if self.at("**"):
            self.advance()
            exp = self.parse_power()
            return A.Expr(A.BINARY, "**", (base, exp), base.line, base.column)
        return base

    def parse_unary(self) -> A.Expr:
        t = self.tok
        if self.at("!", "-", "~", "++", "--", "+") and t.kind != STRING:
            self.advance()
            operand = self.parse_unary()
            return A.Expr(A.UNARY, t.text, (operand,), t.line, t.column)
        if self.at("delete"):
            self.advance()
            operand = self.parse_unary()
            return A.Expr(A.UNARY, "delete", (operand,), t.line, t.column)
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        e = self.parse_primary()
        while True:
            t = self.tok
            if self.at("."):
                self.advance()
                name_tok = self.advance()
                if name_tok.kind not in (IDENTIFIER, KEYWORD):
                    raise ParseError("member name", name_tok.text, name_tok.line, name_tok.column)
                name = name_tok.text
                if name == "call" and self.at(".") and self.peek().text in ("value", "gas"):
                    e = self.parse_call_value(e, name_tok)
                    continue
                if e.kind == A.IDENT and e.name == "msg" and name == "sender":
                    e = A.Expr(A.MSG_SENDER, "msg.sender", (), e.line, e.column)
                elif e.kind == A.IDENT and e.name == "block" and name == "timestamp":
                    e = A.Expr(A.TIMESTAMP, "block.timestamp", (), e.line, e.column)
                else:
                    e = A.Expr(A.MEMBER, name, (e,), name_tok.line, name_tok.column)
            elif self.at("["):
                self.advance()
                if self.at("]"):
                    raise ParseError("index expression", "]", t.line, t.column)
                idx = self.parse_expression()
                self.expect("]")
                e = A.Expr(A.INDEX, "[]", (e, idx), e.line, e.column)
            elif self.at("("):
                args = self.parse_call_args()
                if e.kind == A.MEMBER and e.name in ("transfer", "send") and len(args) == 1:
                    kind = A.TRANSFER if e.name == "transfer" else A.SEND
                    e = A.Expr(kind, e.name, (e.operands[0], args[0]), e.line, e.column)
                else:
                    e = A.Expr(A.CALL, "()", (e, *args), _start(e).line, _start(e).column)
            elif self.at("{"):
                raise ParseError("'(' (call options are outside the subset)", "{",
                                 t.line, t.column)
            elif self.at("++", "--") and self.peek().text not in (";", ")"):
                # postfix inside a larger expression, e.g. a[i++]
                self.advance()
                e = A.Expr(A.UNARY, t.text, (e,), e.line, e.column)
            else:
                return e

    def parse_call_value(self, receiver: A.Expr, call_tok: Token) -> A.Expr:
        amount: A.Expr | None = None
        while self.at(".") and self.peek().text in ("value", "gas"):
            self.advance()
            which = self.advance().text
            args = self.parse_call_args()
            if len(args) != 1:
                raise ParseError(f"one argument to .{which}", str(len(args)),
                                 call_tok.line, call_tok.column)
            if which == "value":
                amount = args[0]
        if amount is None:
            raise ParseError(".value(...)", ".gas", call_tok.line, call_tok.column)
        args = self.parse_call_args() if self.at("(") else []
        return A.Expr(A.CALL_VALUE, "call.value", (receiver, amount, *args),
                      call_tok.line, call_tok.column)

    def parse_primary(self) -> A.Expr:
        t = self.tok
        if t.kind == INTEGER:
            self.advance()
            text = t.text
            if self.tok.kind == IDENTIFIER and self.tok.text in UNITS:
                text += " " + self.advance().text
            return A.Expr(A.LITERAL, text, (), t.line, t.column)
        if t.kind == STRING:
            self.advance()
            text = t.text
            while self.tok.kind == STRING:  # adjacent literals concatenate
                text += " " + self.advance().text
            return A.Expr(A.LITERAL, text, (), t.line, t.column)
        if self.at("true", "false"):
            self.advance()
            return A.Expr(A.LITERAL, t.text, (), t.line, t.column)
        if self.at("("):
            self.advance()
            e = self.parse_expression()
            if self.at(","):
                raise ParseError("')' (tuples are outside the subset)", ",", t.line, t.column)
            self.expect(")")
            return e
        if self.at("new"):
            self.advance()
            type_ = self.parse_type()
            return A.Expr(A.IDENT, "new " + type_, (), t.line, t.column)
        if t.kind == IDENTIFIER:
            self.advance()
            if t.text == "now":
                return A.Expr(A.TIMESTAMP, "block.timestamp", (), t.line, t.column)
            return A.Expr(A.IDENT, t.text, (), t.line, t.column)
        if t.kind == KEYWORD and (is_type_keyword(t.text) or t.text == "payable"):
            self.advance()
            name = t.text
            if name == "address" and self.at("payable"):
                self.advance()
            return A.Expr(A.IDENT, name, (), t.line, t.column)
        raise ParseError("expression", t.text, t.line, t.column)


def _start(e: A.Expr) -> A.Expr:
    while e.kind in (A.MEMBER, A.INDEX, A.CALL) and e.operands:
        e = e.operands[0]
    return e


def _mapping_parts(type_: str) -> tuple[str, str]:
    if not type_.startswith("mapping("):
        return "", ""
    inner = type_[len("mapping("):-1]
    key, _, value = inner.partition(" => ")
    return key, value


def _classify_calls(fn: A.FunctionAst, fn_names: frozenset[str]) -> A.FunctionAst:
    """Refine top-level call statements into self-invocation and external calls."""

    def fix(s: A.Stmt) -> A.Stmt:
        kind = s.kind
        if kind == A.EXPRESSION and s.exprs:
            e = s.exprs[0]
            if e.kind in A.MONEY_TRANSFERS:
                kind = A.EXTERNAL_CALL
            elif e.kind == A.CALL:
                callee = e.operands[0]
                if callee.kind == A.IDENT and callee.name in fn_names:
                    kind = A.SELF_CALL
                elif callee.kind == A.MEMBER:
                    recv = callee.operands[0]
                    if recv.kind == A.IDENT and recv.name == "this" and callee.name in fn_names:
                        kind = A.SELF_CALL
                    elif not (recv.kind == A.IDENT and recv.name in BUILTIN_NAMESPACES):
                        kind = A.EXTERNAL_CALL
        return replace(
            s,
            kind=kind,
            children=tuple(fix(c) for c in s.children),
            else_children=tuple(fix(c) for c in s.else_children),
            header=tuple(fix(c) for c in s.header),
        )

    return replace(fn, body=tuple(fix(s) for s in fn.body))


def parse_source(tokens: list[Token], warnings: list[A.ParseWarning] | None = None
                 ) -> list[A.ContractAst]:
    """Parse a token stream into contracts.

    Warnings for skipped constructs are attached to each contract; when a
    ``warnings`` list is supplied every warning, including those outside any
    contract, is appended to it as well.
    """
    p = Parser(tokens)
    contracts = p.parse_units()
    if warnings is not None:
        warnings.extend(p.warnings)
    return contracts


# canonical rendering ----------------------------------------------------

def render_expr(e: A.Expr) -> str:
    k = e.kind
    if k in (A.IDENT, A.LITERAL, A.MSG_SENDER, A.TIMESTAMP):
        return e.name
    if k == A.MEMBER:
        return f"{render_expr(e.operands[0])}.{e.name}"
    if k == A.INDEX:
        return f"{render_expr(e.operands[0])}[{render_expr(e.operands[1])}]"
    if k == A.CALL:
        args = ", ".join(render_expr(a) for a in e.operands[1:])
        return f"{render_expr(e.operands[0])}({args})"
    if k == A.CALL_VALUE:
        recv, amount, *args = e.operands
        joined = ", ".join(render_expr(a) for a in args)
        return f"{render_expr(recv)}.call.value({render_expr(amount)})({joined})"
    if k in (A.TRANSFER, A.SEND):
        return f"{render_expr(e.operands[0])}.{k}({render_expr(e.operands[1])})"
    if k == A.BINARY:
        return f"({render_expr(e.operands[0])} {e.name} {render_expr(e.operands[1])})"
    if k == A.UNARY:
        if e.name == "delete":
            return f"(delete {render_expr(e.operands[0])})"
        return f"({e.name}{render_expr(e.operands[0])})"
    if k == A.CONDITIONAL:
        c, a, b = (render_expr(x) for x in e.operands)
        return f"({c} ? {a} : {b})"
    raise ValueError(f"cannot render expression kind {k!r}")


def _render_simple(s: A.Stmt) -> str:
    if s.kind == A.DECLARATION:
        text = f"{s.decl_type} {render_expr(s.exprs[0])}"
        if len(s.exprs) > 1:
            text += f" = {render_expr(s.exprs[1])}"
        return text
    if s.kind in (A.ASSIGNMENT, A.COMPOUND):
        return f"{render_expr(s.exprs[0])} {s.op} {render_expr(s.exprs[1])}"
    if s.exprs:
        return render_expr(s.exprs[0])
    return ""


def render_stmt(s: A.Stmt, indent: str = "    ") -> list[str]:
    k = s.kind
    inner = indent + "    "
    if k in (A.IF, A.IF_ELSE):
        lines = [f"{indent}if ({render_expr(s.exprs[0])}) {{"]
        for c in s.children:
            lines += render_stmt(c, inner)
        if k == A.IF_ELSE:
            lines.append(f"{indent}}} else {{")
            for c in s.else_children:
                lines += render_stmt(c, inner)
        lines.append(f"{indent}}}")
        return lines
    if k == A.WHILE:
        lines = [f"{indent}while ({render_expr(s.exprs[0])}) {{"]
        for c in s.children:
            lines += render_stmt(c, inner)
        return lines + [f"{indent}}}"]
    if k == A.FOR:
        init, update = s.header
        lines = [f"{indent}for ({_render_simple(init)}; {render_expr(s.exprs[0])}; "
                 f"{_render_simple(update)}) {{"]
        for c in s.children:
            lines += render_stmt(c, inner)
        return lines + [f"{indent}}}"]
    if k in (A.REQUIRE, A.ASSERT):
        return [f"{indent}{k}({render_expr(s.exprs[0])});"]
    if k == A.REVERT:
        return [f"{indent}revert();"]
    if k in (A.THROW, A.BREAK, A.CONTINUE):
        return [f"{indent}{k};"]
    if k == A.RETURN:
        return [f"{indent}return {render_expr(s.exprs[0])};" if s.exprs else f"{indent}return;"]
    return [f"{indent}{_render_simple(s)};"]


def render_function(fn: A.FunctionAst, indent: str = "    ") -> list[str]:
    params = ", ".join(f"{p.type} {p.name}".rstrip() for p in fn.params)
    attrs = [fn.visibility] + (["payable"] if fn.payable else []) + list(fn.modifiers)
    head = f"function {fn.name}" if fn.name != "constructor" else "constructor"
    lines = [f"{indent}{head}({params}) {' '.join(attrs)} {{"]
    for s in fn.body:
        lines += render_stmt(s, indent + "    ")
    return lines + [f"{indent}}}"]


def render_contract(c: A.ContractAst) -> str:
    """Canonical source text; re-parsing it yields a structurally equal tree."""
    lines = [f"contract {c.name} {{"]
    for v in c.state_vars:
        lines.append(f"    {v.type} {v.name};")
    for ev in c.events:
        lines.append(f"    event {ev}();")
    for m in c.modifier_defs:
        params = ", ".join(f"{p.type} {p.name}".rstrip() for p in m.params)
        lines.append(f"    modifier {m.name}({params}) {{")
        for s in m.body:
            lines += render_stmt(s, "        ")
        lines.append("    }")
    for fn in c.functions:
        lines += render_function(fn)
    lines.append("}")
    return "\n".join(lines) + "\n"
