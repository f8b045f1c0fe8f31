"""Hand-written functions with their expected sub-pattern flags.

Every sub-pattern gets three rows: one that triggers it, one that does
not, and a boundary case.  Expected flags list all three sub-patterns of
the row's kind in their canonical order.
"""

from __future__ import annotations

from dataclasses import dataclass

from cgescan.frontend import load_function
from cgescan.patterns import SubPattern as S
from cgescan.patterns import VulnerabilityKind

RE, TS, IL = VulnerabilityKind.REENTRANCY, VulnerabilityKind.TIMESTAMP, VulnerabilityKind.INFINITE_LOOP

WRAPPER = """pragma solidity ^0.4.24;
contract T {
    mapping(address => uint) balances;
    uint counter;
    uint deadline;
    function emitLog(uint v) internal { counter = v; }
    function f(%s) public {
%s
    }
}
"""

# lines of the body, indented when rendered
FIG1_WITHDRAW = """require(balances[msg.sender] > 0);
msg.sender.call.value(balances[msg.sender])();
balances[msg.sender] = 0;"""


@dataclass(frozen=True)
class Row:
    name: str
    pattern: S
    role: str
    params: str
    body: str
    expected: tuple[bool, bool, bool]

    @property
    def kind(self) -> VulnerabilityKind:
        return self.pattern.kind

    @property
    def source(self) -> str:
        body = "\n".join("        " + line for line in self.body.splitlines())
        return WRAPPER % (self.params, body)

    def function(self):
        return load_function(self.source, "f", "T")


T, F = True, False

ROWS = [
    Row("cv_direct", S.CALL_VALUE_INVOCATION, "trigger", "", "msg.sender.call.value(1)();", (T, F, F)),
    Row("cv_transfer_only", S.CALL_VALUE_INVOCATION, "non-trigger", "", "msg.sender.transfer(1);", (F, F, F)),
    Row("cv_nested_in_if", S.CALL_VALUE_INVOCATION, "boundary", "uint x",
        "if (x > 0) {\n    msg.sender.call.value(x)();\n}", (T, F, F)),

    Row("bd_fig1_withdraw", S.BALANCE_DEDUCTION, "trigger", "", FIG1_WITHDRAW, (T, T, T)),
    Row("bd_before_call", S.BALANCE_DEDUCTION, "non-trigger", "uint a",
        "balances[msg.sender] -= a;\nmsg.sender.call.value(a)();", (T, F, F)),
    Row("bd_before_and_after", S.BALANCE_DEDUCTION, "boundary", "uint a",
        "balances[msg.sender] -= a;\nmsg.sender.call.value(a)();\nbalances[msg.sender] = 0;",
        (T, F, F)),

    Row("eb_require", S.ENOUGH_BALANCE, "trigger", "uint a",
        "require(balances[msg.sender] >= a);\nmsg.sender.call.value(a)();", (T, F, T)),
    Row("eb_after_call", S.ENOUGH_BALANCE, "non-trigger", "uint a",
        "msg.sender.call.value(a)();\nrequire(balances[msg.sender] >= a);", (T, F, F)),
    Row("eb_local_copy", S.ENOUGH_BALANCE, "boundary", "uint a",
        "uint b = balances[msg.sender];\nif (b >= a) {\n    msg.sender.call.value(a)();\n}",
        (T, F, T)),

    Row("ti_require", S.TIMESTAMP_INVOCATION, "trigger", "", "require(block.timestamp > 0);", (T, F, F)),
    Row("ti_absent", S.TIMESTAMP_INVOCATION, "non-trigger", "", "counter = 1;", (F, F, F)),
    Row("ti_now_alias", S.TIMESTAMP_INVOCATION, "boundary", "", "require(now > 0);", (T, F, F)),

    Row("ta_declaration", S.TIMESTAMP_ASSIGN, "trigger", "", "uint t = block.timestamp;", (T, T, F)),
    Row("ta_condition_only", S.TIMESTAMP_ASSIGN, "non-trigger", "",
        "uint x = 0;\nif (block.timestamp > 5) {\n    x = 1;\n}", (T, F, F)),
    Row("ta_call_argument", S.TIMESTAMP_ASSIGN, "boundary", "", "emitLog(block.timestamp);", (T, T, F)),

    Row("tc_guarded_transfer", S.TIMESTAMP_CONTAMINATION, "trigger", "",
        "uint t = block.timestamp;\nif (t % 2 == 0) {\n    msg.sender.transfer(1);\n}", (T, T, T)),
    Row("tc_guarded_local", S.TIMESTAMP_CONTAMINATION, "non-trigger", "",
        "uint t = block.timestamp;\nif (t > 0) {\n    uint y = 1;\n}", (T, T, F)),
    Row("tc_require_then_write", S.TIMESTAMP_CONTAMINATION, "boundary", "",
        "require(block.timestamp > deadline);\ncounter = 1;", (T, F, T)),

    Row("ls_for", S.LOOP_STATEMENT, "trigger", "uint n",
        "uint s = 0;\nfor (uint i = 0; i < n; i++) {\n    s += i;\n}", (T, F, F)),
    Row("ls_absent", S.LOOP_STATEMENT, "non-trigger", "uint n", "counter = n;", (F, F, F)),
    Row("ls_while_break", S.LOOP_STATEMENT, "boundary", "",
        "uint i = 0;\nwhile (i < 10) {\n    break;\n}", (T, F, F)),

    Row("lc_never_updated", S.LOOP_CONDITION, "trigger", "",
        "uint i = 0;\nuint x = 0;\nwhile (i < 10) {\n    x += 1;\n}", (T, T, F)),
    Row("lc_updated", S.LOOP_CONDITION, "non-trigger", "",
        "uint i = 0;\nwhile (i < 10) {\n    i++;\n}", (T, F, F)),
    Row("lc_constant_true", S.LOOP_CONDITION, "boundary", "",
        "while (true) {\n    counter += 1;\n}", (T, T, F)),

    Row("si_unconditional", S.SELF_INVOCATION, "trigger", "", "f();", (F, F, T)),
    Row("si_guarded", S.SELF_INVOCATION, "non-trigger", "uint n",
        "if (n > 0) {\n    f(n - 1);\n}", (F, F, F)),
    Row("si_this_call", S.SELF_INVOCATION, "boundary", "", "this.f();", (F, F, T)),
]

# evidence lines must contain one of these fragments
EVIDENCE_TEXT = {
    S.CALL_VALUE_INVOCATION: ("call.value",),
    S.BALANCE_DEDUCTION: ("balances",),
    S.ENOUGH_BALANCE: ("balances", "b >="),
    S.TIMESTAMP_INVOCATION: ("block.timestamp", "now"),
    S.TIMESTAMP_ASSIGN: ("block.timestamp", "now"),
    S.TIMESTAMP_CONTAMINATION: ("if", "require", "assert"),
    S.LOOP_STATEMENT: ("for", "while"),
    S.LOOP_CONDITION: ("for", "while"),
    S.SELF_INVOCATION: ("f(",),
}
