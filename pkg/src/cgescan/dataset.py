"""Manifest-driven corpus ingestion and stratified splitting."""

from __future__ import annotations

import csv
import hashlib
import logging
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, TypeVar

from cgescan.errors import CgeError, ManifestError
from cgescan.frontend import parse_program, resolve_function
from cgescan.graph import DEFAULT_BUCKETS
from cgescan.model.network import Sample
from cgescan.numerics import make_rng
from cgescan.patterns import VulnerabilityKind
from cgescan.pipeline import prepare_sample

log = logging.getLogger(__name__)

MANIFEST_COLUMNS = ("path", "contract", "function", "kind", "label")
CACHE_VERSION = "1"

T = TypeVar("T")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    contract: str
    function: str
    kind: VulnerabilityKind
    label: int

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.path, self.contract, self.function, self.kind.value)


@dataclass
class IngestResult:
    entries: list[ManifestEntry] = field(default_factory=list)
    samples: list[Sample] = field(default_factory=list)
    failures: list[tuple[ManifestEntry, str]] = field(default_factory=list)

    def summary(self) -> dict:
        return {"prepared": len(self.samples), "failed": len(self.failures),
                "failures": [{"path": e.path, "contract": e.contract, "function": e.function,
                              "kind": e.kind.value, "error": msg} for e, msg in self.failures]}


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Parse a ``path,contract,function,kind,label`` CSV manifest."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = [c for c in MANIFEST_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ManifestError(f"{path}: missing columns {', '.join(missing)}")
        entries, seen = [], set()
        for lineno, row in enumerate(reader, start=2):
            try:
                values = {c: (row[c] or "").strip() for c in MANIFEST_COLUMNS}
                if not values["path"] or not values["contract"]:
                    raise ValueError("path and contract are required")
                kind = VulnerabilityKind.parse(values["kind"])
                if values["label"] not in ("0", "1"):
                    raise ValueError(f"label must be 0 or 1, got {values['label']!r}")
            except (ValueError, AttributeError) as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
            entry = ManifestEntry(values["path"], values["contract"], values["function"], kind,
                                  int(values["label"]))
            if entry.key in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate entry {entry.key}")
            seen.add(entry.key)
            entries.append(entry)
    return entries


def _function_name(name: str) -> str:
    return "" if name in ("", "fallback", "()") else name


def ingest(directory: str | Path, manifest: str | Path, buckets: int = DEFAULT_BUCKETS,
           seed: int = 0, cache_dir: str | Path | None = None) -> IngestResult:
    """Prepare every manifest entry; failures are collected, not raised.

    Parsed programs are shared between entries of one file, and prepared
    samples are cached on disk under ``cache_dir`` keyed by a hash of the
    file content and the entry.
    """
    directory = Path(directory)
    result = IngestResult()
    programs: dict[str, object] = {}
    cache = Path(cache_dir) if cache_dir is not None else None
    if cache is not None:
        cache.mkdir(parents=True, exist_ok=True)
    for entry in read_manifest(manifest):
        result.entries.append(entry)
        try:
            data = (directory / entry.path).read_bytes()
        except OSError as exc:
            result.failures.append((entry, f"cannot read {entry.path}: {exc.strerror}"))
            continue
        digest = hashlib.sha256(data).hexdigest()
        key = hashlib.sha256("|".join(
            (CACHE_VERSION, digest, entry.contract, entry.function, entry.kind.value,
             str(entry.label), str(buckets), str(seed))).encode()).hexdigest()
        cached = cache / f"{key}.pkl" if cache is not None else None
        if cached is not None and cached.exists():
            with open(cached, "rb") as fh:
                result.samples.append(pickle.load(fh))
            continue
        try:
            if digest not in programs:
                programs[digest] = parse_program(data.decode("utf-8"))
            contract = programs[digest].contract(entry.contract)
            fn = resolve_function(contract, _function_name(entry.function))
            sample = prepare_sample(fn, entry.kind, entry.label, buckets, seed,
                                    name=f"{entry.path}:{entry.contract}.{entry.function}")
        except (CgeError, KeyError, UnicodeDecodeError) as exc:
            result.failures.append((entry, str(exc)))
            continue
        if cached is not None:
            with open(cached, "wb") as fh:
                pickle.dump(sample, fh)
        result.samples.append(sample)
    if not result.entries:
        log.warning("manifest %s lists no entries", manifest)
    return result


def split_counts(counts: Sequence[int], ratio: float) -> list[int]:
    """Per-class training counts summing to round(ratio * total), largest remainder first."""
    total = round(ratio * sum(counts))
    quotas = [ratio * c for c in counts]
    take = [int(q) for q in quotas]
    order = sorted(range(len(counts)), key=lambda i: (-(quotas[i] - take[i]), i))
    for i in order:
        if sum(take) >= total:
            break
        if take[i] < counts[i]:
            take[i] += 1
    return take


def split(samples: Sequence[T], ratio: float, seed: int,
          labels: Sequence[int] | None = None) -> tuple[list[T], list[T]]:
    """Seeded stratified split; both halves keep the original relative order."""
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must lie strictly between 0 and 1, got {ratio}")
    if labels is None:
        labels = [s.label for s in samples]
    rng = make_rng(seed)
    classes = sorted(set(labels))
    groups = [[i for i, y in enumerate(labels) if y == c] for c in classes]
    take = split_counts([len(g) for g in groups], ratio)
    chosen: set[int] = set()
    for g, k in zip(groups, take):
        perm = rng.permutation(len(g))
        chosen.update(g[j] for j in perm[:k])
    train = [s for i, s in enumerate(samples) if i in chosen]
    test = [s for i, s in enumerate(samples) if i not in chosen]
    return train, test
