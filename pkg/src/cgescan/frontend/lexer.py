"""Tokenizer for the supported Solidity subset."""

from __future__ import annotations

import re
from dataclasses import dataclass

from cgescan.errors import LexError

IDENTIFIER = "identifier"
KEYWORD = "keyword"
INTEGER = "integer-literal"
STRING = "string-literal"
PUNCT = "punctuation"
OPERATOR = "operator"

KEYWORDS = frozenset(
    """
    pragma import contract library interface abstract is function modifier event struct enum
    using constructor fallback receive returns return if else for while do break continue
    require assert revert throw emit mapping public external internal private payable view
    pure constant immutable virtual override memory storage calldata indexed anonymous
    true false var new delete assembly unchecked address bool string bytes byte uint int
    fixed ufixed
    """.split()
)

_SIZED_TYPE = re.compile(r"(?:u?int(?:8|16|24|32|40|48|56|64|72|80|88|96|104|112|120|128"
                         r"|136|144|152|160|168|176|184|192|200|208|216|224|232|240|248|256)"
                         r"|bytes(?:[1-9]|[12][0-9]|3[0-2]))$")

_OPERATORS = [
    ">>>=", "<<=", ">>=", ">>>", "**", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "=>", "<<", ">>",
    "+", "-", "*", "/", "%", "=", "<", ">", "!", "&", "|", "^", "~", "?", ":",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n\f]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<open_comment>/\*)
  | (?P<string>(?:hex|unicode)?"(?:[^"\\\n]|\\.)*"|(?:hex|unicode)?'(?:[^'\\\n]|\\.)*')
  | (?P<number>0[xX][0-9a-fA-F_]+|(?:\d[\d_]*(?:\.\d[\d_]*)?|\.\d[\d_]*)(?:[eE]-?\d+)?)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<op>"""
    + "|".join(re.escape(op) for op in _OPERATORS)
    + r""")
  | (?P<punct>[(){}\[\];,.])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    def is_(self, *texts: str) -> bool:
        return self.kind in (KEYWORD, PUNCT, OPERATOR, IDENTIFIER) and self.text in texts


def is_type_keyword(text: str) -> bool:
    return text in ("address", "bool", "string", "bytes", "byte", "uint", "int", "var",
                    "fixed", "ufixed") or bool(_SIZED_TYPE.match(text))


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, dropping whitespace and comments.

    Raises ``LexError`` with the 1-based position of the first character
    that no token rule accepts.
    """
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        column = pos - line_start + 1
        if m is None:
            raise LexError("unrecognized character", line, column, source[pos:pos + 12])
        group = m.lastgroup
        text = m.group()
        if group == "open_comment":
            raise LexError("unterminated block comment", line, column, source[pos:pos + 12])
        if group == "string" or group not in ("ws", "line_comment", "block_comment"):
            if group == "ident":
                kind = KEYWORD if text in KEYWORDS or _SIZED_TYPE.match(text) else IDENTIFIER
            elif group == "number":
                kind = INTEGER
            elif group == "string":
                kind = STRING
            elif group == "op":
                kind = OPERATOR
            else:
                kind = PUNCT
            tokens.append(Token(kind, text, line, column))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    return tokens
