"""Command-line scanner: train, evaluate, detect, dump-graph, dump-patterns."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from cgescan import jsonio
from cgescan.dataset import ingest, split
from cgescan.errors import CgeError
from cgescan.frontend import FunctionAst, parse_program, resolve_function
from cgescan.graph import build_graph
from cgescan.model import CgeModel, ModelConfig, detect_function, parse_variant, train
from cgescan.model.predict import checkpoint_kind
from cgescan.normalize import normalize_graph
from cgescan.numerics import ParameterStore
from cgescan.patterns import VulnerabilityKind, extract
from cgescan.metrics import compute_metrics

SEED_ENV = "CGE_SCAN_SEED"
EXIT_OK, EXIT_FOUND, EXIT_ERROR = 0, 1, 2

log = logging.getLogger("cgescan")


class UsageError(CgeError):
    pass


def _kind(text: str) -> VulnerabilityKind:
    try:
        return VulnerabilityKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    raw = os.environ.get(SEED_ENV, "").strip()
    if not raw:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


class Writer:
    """Ordered output sink: stdout or a file given by --out."""

    def __init__(self, path: str | None):
        self.path = path
        self.lines: list[str] = []

    def emit(self, obj) -> None:
        self.lines.append(jsonio.dumps(obj))

    def close(self) -> None:
        text = "".join(line + "\n" for line in self.lines)
        if self.path is None:
            sys.stdout.write(text)
        else:
            Path(self.path).write_text(text)


# dataset commands -------------------------------------------------------

def _dataset(args, kind: VulnerabilityKind):
    manifest = Path(args.manifest)
    directory = Path(args.dir) if args.dir else manifest.parent
    result = ingest(directory, manifest)
    for entry, msg in result.failures:
        log.warning("skipped %s:%s.%s: %s", entry.path, entry.contract, entry.function, msg)
    samples = [s for e, s in zip(_prepared_entries(result), result.samples) if e.kind is kind]
    return result, samples


def _prepared_entries(result):
    failed = {id(e) for e, _ in result.failures}
    return [e for e in result.entries if id(e) not in failed]


def _config(args, kind: VulnerabilityKind, seed: int) -> ModelConfig:
    base = ModelConfig()
    return ModelConfig(
        kind=kind.value,
        variant=parse_variant(args.variant),
        lr=base.lr if args.lr is None else args.lr,
        dropout=base.dropout if args.dropout is None else args.dropout,
        batch=base.batch if args.batch is None else args.batch,
        l2=base.l2 if args.l2 is None else args.l2,
        epochs=base.epochs if args.epochs is None else args.epochs,
        threshold=base.threshold if args.threshold is None else args.threshold,
        seed=seed,
    ).validate()


def cmd_train(args, out: Writer) -> int:
    if args.out is None:
        raise UsageError("train needs --out for the checkpoint")
    seed = resolve_seed(args.seed)
    kind = args.kind
    config = _config(args, kind, seed)
    result, samples = _dataset(args, kind)
    if not samples:
        raise UsageError(f"no {kind.value} samples in {args.manifest}")
    train_set, test_set = split(samples, args.ratio, seed)
    trained = train(train_set, config)
    trained.store.save(args.out)
    if args.log:
        with open(args.log, "w") as fh:
            for entry in trained.log:
                fh.write(jsonio.dumps(entry) + "\n")
    summary = {"kind": kind.value, "variant": config.variant, "seed": seed,
               "train": len(train_set), "test": len(test_set), "best_epoch": trained.best_epoch,
               "checkpoint": str(args.out), "ingest": result.summary()}
    sys.stdout.write(jsonio.dumps(summary) + "\n")
    return EXIT_OK


def cmd_evaluate(args, out: Writer) -> int:
    if not args.checkpoint:
        raise UsageError("evaluate needs --checkpoint")
    store = ParameterStore.load(args.checkpoint[0])
    kind = args.kind or checkpoint_kind(store)
    if checkpoint_kind(store) is not kind:
        raise UsageError(f"checkpoint was trained for {checkpoint_kind(store).value}")
    seed = resolve_seed(args.seed)
    _, samples = _dataset(args, kind)
    test_set = split(samples, args.ratio, seed)[1] if samples else []
    if not test_set:
        raise UsageError("the test split is empty")
    model = CgeModel.from_store(store)
    threshold = model.config.threshold if args.threshold is None else args.threshold
    metrics = compute_metrics([(model.score(s), s.label) for s in test_set], threshold)
    report = {"kind": kind.value, "variant": model.config.variant, "seed": seed,
              "test": len(test_set), "threshold": threshold}
    report.update(metrics.to_json())
    out.emit(report)
    return EXIT_OK


# source commands --------------------------------------------------------

def _functions(path: str, function: str | None, contract: str | None) -> list[FunctionAst]:
    program = parse_program(Path(path).read_text())
    contracts = [program.contract(contract)] if contract else list(program.contracts)
    wanted = None if function is None else ("" if function == "fallback" else function)
    found = []
    for c in contracts:
        if wanted is not None:
            if any(f.name == wanted for f in c.functions):
                found.append(resolve_function(c, wanted))
        else:
            found.extend(resolve_function(c, f.name) for f in c.functions)
    if wanted is not None and not found:
        raise UsageError(f"{path}: function {function!r} not found")
    return found


def _label(fn: FunctionAst) -> dict:
    return {"contract": fn.contract, "function": fn.name or "fallback"}


def cmd_detect(args, out: Writer) -> int:
    if not args.checkpoint:
        raise UsageError("detect needs at least one --checkpoint")
    stores: dict[VulnerabilityKind, ParameterStore] = {}
    for path in args.checkpoint:
        store = ParameterStore.load(path)
        k = checkpoint_kind(store)
        if k in stores:
            raise UsageError(f"two checkpoints given for {k.value}")
        stores[k] = store
    kinds = [k for k in VulnerabilityKind if k in stores]
    if args.kind is not None:
        if args.kind not in stores:
            raise UsageError(f"no checkpoint loaded for {args.kind.value}")
        kinds = [args.kind]
    found = False
    for path in args.files:
        for fn in _functions(path, args.function, args.contract):
            for k in kinds:
                result = detect_function(fn, k, stores[k], args.threshold)
                found |= bool(result.label)
                record = {"file": path}
                record.update(result.to_json())
                out.emit(record)
    return EXIT_FOUND if found and args.fail_on_find else EXIT_OK


def cmd_dump_graph(args, out: Writer) -> int:
    for path in args.files:
        for fn in _functions(path, args.function, args.contract):
            graph = build_graph(fn, args.kind)
            record = {"file": path, "contract": fn.contract}
            record.update(graph.to_json())
            if args.normalized:
                record["normalized"] = (normalize_graph(graph).to_json()
                                        if graph.core_ids() else None)
            out.emit(record)
    return EXIT_OK


def cmd_dump_patterns(args, out: Writer) -> int:
    kinds = [args.kind] if args.kind is not None else list(VulnerabilityKind)
    for path in args.files:
        for fn in _functions(path, args.function, args.contract):
            for k in kinds:
                record = {"file": path}
                record.update(_label(fn))
                record.update(extract(fn, k).to_json())
                out.emit(record)
    return EXIT_OK


# parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgescan", description=__doc__)
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    def dataset_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--manifest", required=True, help="CSV with path,contract,function,kind,label")
        p.add_argument("--dir", help="corpus root (default: the manifest's directory)")
        p.add_argument("--ratio", type=float, default=0.8)
        p.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")

    p = sub.add_parser("train", help="train one per-kind checkpoint")
    p.add_argument("--kind", type=_kind, required=True)
    dataset_flags(p)
    p.add_argument("--lr", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--l2", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--variant", default="cge", choices=["cge", "wog", "woe", "won"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", help="checkpoint path")
    p.add_argument("--log", help="JSONL training log path")
    p.set_defaults(run=cmd_train)

    p = sub.add_parser("evaluate", help="metrics of a checkpoint on the held-out split")
    p.add_argument("--kind", type=_kind)
    dataset_flags(p)
    p.add_argument("--checkpoint", action="append")
    p.add_argument("--threshold", type=float)
    p.add_argument("--out")
    p.set_defaults(run=cmd_evaluate)

    p = sub.add_parser("detect", help="score every function in the given files")
    p.add_argument("files", nargs="+")
    p.add_argument("--checkpoint", action="append", help="repeat for several kinds")
    p.add_argument("--kind", type=_kind)
    p.add_argument("--function")
    p.add_argument("--contract")
    p.add_argument("--threshold", type=float)
    p.add_argument("--fail-on-find", action="store_true")
    p.add_argument("--out")
    p.set_defaults(run=cmd_detect)

    p = sub.add_parser("dump-graph", help="print contract graphs as JSON lines")
    p.add_argument("files", nargs="+")
    p.add_argument("--kind", type=_kind, required=True)
    p.add_argument("--function")
    p.add_argument("--contract")
    p.add_argument("--normalized", action="store_true", help="include the normalized graph")
    p.add_argument("--out")
    p.set_defaults(run=cmd_dump_graph)

    p = sub.add_parser("dump-patterns", help="print sub-pattern reports as JSON lines")
    p.add_argument("files", nargs="+")
    p.add_argument("--kind", type=_kind)
    p.add_argument("--function")
    p.add_argument("--contract")
    p.add_argument("--out")
    p.set_defaults(run=cmd_dump_patterns)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="cgescan: %(levelname)s: %(message)s")
    out = Writer(getattr(args, "out", None) if args.command != "train" else None)
    try:
        code = args.run(args, out)
        out.close()
    except (CgeError, KeyError, OSError, ValueError) as exc:
        if isinstance(exc, OSError) and exc.strerror:
            msg = f"{exc.filename}: {exc.strerror}" if exc.filename else exc.strerror
        elif isinstance(exc, KeyError) and exc.args:
            msg = exc.args[0]
        else:
            msg = exc
        print(f"cgescan: error: {msg}", file=sys.stderr)
        return EXIT_ERROR
    return code


if __name__ == "__main__":
    sys.exit(main())
