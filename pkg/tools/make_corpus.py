"""Generate the bundled fixture corpus under ``corpus/``.

Each sample is one small contract built from a vulnerable or safe template
with randomized identifiers, amounts and unrelated filler statements.
Labels come from the template, not from the scanner.

    python3 tools/make_corpus.py [--out corpus] [--seed 7] [--per-template 6]
"""

from __future__ import annotations

import argparse
import csv
import random
import shutil
from pathlib import Path

HEADER = "pragma solidity ^0.4.24;\n\n"

BALANCES = ["balances", "userBalance", "Balance", "credit", "deposits", "funds"]
AMOUNTS = ["amount", "value", "amt", "wad", "sum"]
CONTRACTS = ["Bank", "Wallet", "Vault", "Fund", "Escrow", "Pool", "Store", "Treasury"]
COUNTERS = ["counter", "txCount", "nonce", "calls"]


class Ctx:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.bal = rng.choice(BALANCES)
        self.amt = rng.choice(AMOUNTS)
        self.counter = rng.choice(COUNTERS)
        self.cmp = rng.choice([">=", ">"])

    def filler(self) -> list[str]:
        pool = [
            f"{self.counter} += 1;",
            "lastCaller = msg.sender;",
            "emit Touched(msg.sender);",
        ]
        return self.rng.sample(pool, self.rng.randint(0, 2))

    def contract(self, name: str, state: list[str], functions: list[str]) -> str:
        body = [
            f"    uint public {self.counter};",
            "    address public lastCaller;",
            "    address public owner;",
            *[f"    {s}" for s in state],
            "    event Touched(address who);",
            "",
            "    modifier onlyOwner() {",
            "        require(msg.sender == owner);",
            "        _;",
            "    }",
        ]
        for fn in functions:
            body.append("")
            body.extend("    " + line if line else "" for line in fn.splitlines())
        return HEADER + f"contract {name} {{\n" + "\n".join(body) + "\n}\n"


def block(lines: list[str], indent: int = 1) -> str:
    pad = "    " * indent
    return "\n".join(pad + line for line in lines)


def func(signature: str, lines: list[str]) -> str:
    return signature + " {\n" + block(lines) + "\n}"


def with_filler(core: list[str], filler: list[str], before: bool) -> list[str]:
    return filler + core if before else core + filler


# reentrancy --------------------------------------------------------------

def re_classic(c: Ctx):
    b, a = c.bal, c.amt
    body = [f"if ({b}[msg.sender] {c.cmp} {a}) {{",
            f"    msg.sender.call.value({a})();",
            f"    {b}[msg.sender] -= {a};", "}"]
    return ("withdraw", [f"mapping(address => uint) public {b};"],
            func(f"function withdraw(uint {a}) public", c.filler() + body), 1)


def re_drain_all(c: Ctx):
    b = c.bal
    body = [f"require({b}[msg.sender] > 0);",
            f"msg.sender.call.value({b}[msg.sender])();",
            f"{b}[msg.sender] = 0;"]
    return ("withdrawAll", [f"mapping(address => uint) public {b};"],
            func("function withdrawAll() public", with_filler(body, c.filler(), True)), 1)


def re_local(c: Ctx):
    b, a = c.bal, c.amt
    body = [f"uint {a} = {b}[msg.sender];", f"require({a} > 0);",
            f"msg.sender.call.value({a})();", f"{b}[msg.sender] = 0;"]
    return ("cashOut", [f"mapping(address => uint) public {b};"],
            func("function cashOut() public", c.filler() + body), 1)


def re_to_param(c: Ctx):
    b, a = c.bal, c.amt
    body = [f"require({b}[to] >= {a});", f"to.call.value({a})();",
            f"{b}[to] = {b}[to] - {a};"]
    return ("withdrawTo", [f"mapping(address => uint) public {b};"],
            func(f"function withdrawTo(address to, uint {a}) public", body + c.filler()), 1)


def re_unchecked(c: Ctx):
    b, a = c.bal, c.amt
    body = [f"msg.sender.call.value({a})();", f"{b}[msg.sender] -= {a};"]
    return ("take", [f"mapping(address => uint) public {b};"],
            func(f"function take(uint {a}) public", c.filler() + body), 1)


def _sharing_state(c: Ctx) -> list[str]:
    return ["mapping(address => uint) public Reward;", "mapping(address => bool) public Bonus;"]


def _withdraw_all_fn() -> str:
    return func("function withdrawAll(address recipient) public", [
        "uint amount = Reward[recipient];",
        "Reward[recipient] = 0;",
        "recipient.call.value(amount)();",
    ])


def re_sharing(c: Ctx):
    bonus = c.rng.choice(["100", "0.1 ether", "10 finney", "1 ether"])
    body = ["require(!Bonus[recipient]);", f"Reward[recipient] += {bonus};",
            "withdrawAll(recipient);", "Bonus[recipient] = true;"]
    fn = func("function getBonusWithdraw(address recipient) public", c.filler() + body)
    return ("getBonusWithdraw", _sharing_state(c), fn + "\n\n" + _withdraw_all_fn(), 1)


def safe_deduct_first(c: Ctx):
    b, a = c.bal, c.amt
    body = [f"require({b}[msg.sender] >= {a});", f"{b}[msg.sender] -= {a};",
            f"msg.sender.call.value({a})();"]
    return ("withdraw", [f"mapping(address => uint) public {b};"],
            func(f"function withdraw(uint {a}) public", c.filler() + body), 0)


def safe_transfer(c: Ctx):
    b, a = c.bal, c.amt
    verb = c.rng.choice(["transfer", "send"])
    call = f"msg.sender.transfer({a});" if verb == "transfer" else f"require(msg.sender.send({a}));"
    body = [f"require({b}[msg.sender] >= {a});", call, f"{b}[msg.sender] -= {a};"]
    return ("payout", [f"mapping(address => uint) public {b};"],
            func(f"function payout(uint {a}) public", c.filler() + body), 0)


def safe_deposit(c: Ctx):
    b = c.bal
    body = [f"{b}[msg.sender] += msg.value;"]
    return ("deposit", [f"mapping(address => uint) public {b};"],
            func("function deposit() public payable", with_filler(body, c.filler(), c.rng.random() < 0.5)), 0)


def safe_withdraw_all(c: Ctx):
    return ("withdrawAll", _sharing_state(c), _withdraw_all_fn(), 0)


def safe_owner_drain(c: Ctx):
    body = ["owner.call.value(this.balance)();"]
    return ("drain", [], func("function drain() public onlyOwner", c.filler() + body), 0)


def safe_zero_then_send(c: Ctx):
    b = c.bal
    body = [f"uint {c.amt} = {b}[msg.sender];", f"{b}[msg.sender] = 0;",
            f"msg.sender.call.value({c.amt})();"]
    return ("claim", [f"mapping(address => uint) public {b};"],
            func("function claim() public", c.filler() + body), 0)


# timestamp -------------------------------------------------------------

def ts_deadline_pay(c: Ctx):
    body = ["if (now > deadline) {", f"    msg.sender.transfer({c.rng.randint(1, 9)} ether);", "}"]
    return ("claimPrize", ["uint public deadline;"],
            func("function claimPrize() public", c.filler() + body), 1)


def ts_lottery(c: Ctx):
    mod = c.rng.choice([2, 7, 10, 100])
    body = [f"uint rand = uint(keccak256(block.timestamp)) % {mod};",
            "if (rand == 0) {", "    msg.sender.transfer(this.balance);", "}"]
    return ("play", [], func("function play() public payable", c.filler() + body), 1)


def ts_require_window(c: Ctx):
    days = c.rng.randint(1, 30)
    body = [f"require(now >= start + {days} days);", f"owner.transfer({c.amt});"]
    return ("release", ["uint public start;"],
            func(f"function release(uint {c.amt}) public", body + c.filler()), 1)


def ts_auction(c: Ctx):
    body = ["if (block.timestamp < end) {", "    bids[msg.sender] += msg.value;", "}"]
    return ("bid", ["uint public end;", "mapping(address => uint) public bids;"],
            func("function bid() public payable", c.filler() + body), 1)


def ts_local_guard(c: Ctx):
    body = ["uint t = now;", "if (t > lastTime + 1 hours) {", "    winner = msg.sender;", "}"]
    return ("tick", ["uint public lastTime;", "address public winner;"],
            func("function tick() public", c.filler() + body), 1)


def safe_ts_record(c: Ctx):
    body = ["lastSeen[msg.sender] = now;"]
    return ("ping", ["mapping(address => uint) public lastSeen;"],
            func("function ping() public", with_filler(body, c.filler(), c.rng.random() < 0.5)), 0)


def safe_ts_log(c: Ctx):
    body = ["emit Stamp(msg.sender, block.timestamp);"]
    return ("stamp", ["event Stamp(address who, uint when);"],
            func("function stamp() public", c.filler() + body), 0)


def safe_ts_getter(c: Ctx):
    return ("currentTime", [], func("function currentTime() public view returns (uint)",
                                    ["return block.timestamp;"]), 0)


def safe_ts_owner_start(c: Ctx):
    body = ["require(msg.sender == owner);", "startTime = now;"]
    return ("open", ["uint public startTime;"], func("function open() public", body + c.filler()), 0)


def safe_ts_none(c: Ctx):
    body = ["require(msg.sender == owner);", f"owner.transfer({c.amt});"]
    return ("withdrawOwner", [], func(f"function withdrawOwner(uint {c.amt}) public",
                                      c.filler() + body), 0)


# infinite loop ----------------------------------------------------------

def loop_stuck_while(c: Ctx):
    body = ["uint i = 0;", "while (i < n) {", "    total += i;", "}"]
    return ("accumulate", ["uint public total;"],
            func("function accumulate(uint n) public", c.filler() + body), 1)


def loop_missing_update(c: Ctx):
    body = ["for (uint i = 0; i < n; ) {", "    total += data[i];", "}"]
    return ("sumData", ["uint public total;", "uint[] public data;"],
            func("function sumData(uint n) public", c.filler() + body), 1)


def loop_true(c: Ctx):
    body = ["while (true) {", f"    {c.counter}++;", "}"]
    return ("spin", [], func("function spin() public", c.filler() + body), 1)


def loop_recursion(c: Ctx):
    body = ["total += x;", "step(x);"]
    return ("step", ["uint public total;"], func("function step(uint x) public", c.filler() + body), 1)


def loop_wrong_var(c: Ctx):
    body = ["for (uint i = 0; i < n; j++) {", "    total += i;", "}"]
    return ("scan", ["uint public total;", "uint public j;"],
            func("function scan(uint n) public", c.filler() + body), 1)


def safe_for(c: Ctx):
    body = ["for (uint i = 0; i < n; i++) {", "    total += data[i];", "}"]
    return ("sumData", ["uint public total;", "uint[] public data;"],
            func("function sumData(uint n) public", c.filler() + body), 0)


def safe_while(c: Ctx):
    body = ["uint i = 0;", "while (i < n) {", "    total += i;", "    i++;", "}"]
    return ("accumulate", ["uint public total;"],
            func("function accumulate(uint n) public", c.filler() + body), 0)


def safe_break(c: Ctx):
    body = ["while (true) {", "    if (x > 10) {", "        break;", "    }", "    x += 1;", "}"]
    return ("grow", [], func("function grow(uint x) public", c.filler() + body), 0)


def safe_guarded_recursion(c: Ctx):
    body = ["if (n > 0) {", "    total += n;", "    countDown(n - 1);", "}"]
    return ("countDown", ["uint public total;"],
            func("function countDown(uint n) public", c.filler() + body), 0)


def safe_no_loop(c: Ctx):
    body = ["total += n;"]
    return ("add", ["uint public total;"], func("function add(uint n) public", c.filler() + body), 0)


TEMPLATES = {
    "reentrancy": [re_classic, re_drain_all, re_local, re_to_param, re_unchecked, re_sharing,
                   safe_deduct_first, safe_transfer, safe_deposit, safe_withdraw_all,
                   safe_owner_drain, safe_zero_then_send],
    "timestamp": [ts_deadline_pay, ts_lottery, ts_require_window, ts_auction, ts_local_guard,
                  safe_ts_record, safe_ts_log, safe_ts_getter, safe_ts_owner_start, safe_ts_none],
    "infinite-loop": [loop_stuck_while, loop_missing_update, loop_true, loop_recursion,
                      loop_wrong_var, safe_for, safe_while, safe_break, safe_guarded_recursion,
                      safe_no_loop],
}

FIGURES = {
    "Bank.sol": HEADER + """contract Bank {
    mapping(address => uint) userBalance;

    function deposit() public payable { userBalance[msg.sender] += msg.value; }
    function withdraw() public {
        require(userBalance[msg.sender] > 0);
        msg.sender.call.value(userBalance[msg.sender])();
        userBalance[msg.sender] = 0;
    }
}
""",
    "Vulnerable.sol": HEADER + """contract Vulnerable {
    mapping(address => uint) public Balance;

    function withdraw(uint amount) public {
        if (Balance[msg.sender] >= amount) {
            msg.sender.call.value(amount)();
            Balance[msg.sender] -= amount;
        }
    }
}
""",
    "SharingVariable.sol": HEADER + """contract SharingVariable {
    mapping(address => uint) public Reward;
    mapping(address => bool) public Bonus;

    function getBonusWithdraw(address recipient) public {
        require(!Bonus[recipient]);
        Reward[recipient] += 100;
        withdrawAll(recipient);
        Bonus[recipient] = true;
    }
    function withdrawAll(address recipient) public {
        uint amount = Reward[recipient];
        Reward[recipient] = 0;
        recipient.call.value(amount)();
    }
}
""",
}
FIGURE_ROWS = [
    ("figures/Bank.sol", "Bank", "withdraw", "reentrancy", 1),
    ("figures/Bank.sol", "Bank", "deposit", "reentrancy", 0),
    ("figures/Vulnerable.sol", "Vulnerable", "withdraw", "reentrancy", 1),
    ("figures/SharingVariable.sol", "SharingVariable", "getBonusWithdraw", "reentrancy", 1),
    ("figures/SharingVariable.sol", "SharingVariable", "withdrawAll", "reentrancy", 0),
]


def generate(out: Path, seed: int, per_template: int) -> list[tuple]:
    rng = random.Random(seed)
    if out.exists():
        shutil.rmtree(out)
    rows: list[tuple] = []
    (out / "figures").mkdir(parents=True)
    for name, text in FIGURES.items():
        (out / "figures" / name).write_text(text)
    rows.extend(FIGURE_ROWS)
    for kind, templates in TEMPLATES.items():
        folder = out / kind
        folder.mkdir()
        for template in templates:
            for i in range(per_template):
                c = Ctx(rng)
                fn_name, state, functions, label = template(c)
                contract = f"{rng.choice(CONTRACTS)}{template.__name__.title().replace('_', '')}{i}"
                rel = f"{kind}/{template.__name__}_{i}.sol"
                (out / rel).write_text(c.contract(contract, state, [functions]))
                rows.append((rel, contract, fn_name, kind, label))
    with open(out / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "contract", "function", "kind", "label"])
        w.writerows(rows)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "corpus"))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--per-template", type=int, default=6)
    args = ap.parse_args()
    rows = generate(Path(args.out), args.seed, args.per_template)
    print(f"wrote {len(rows)} manifest rows to {args.out}")


if __name__ == "__main__":
    main()
