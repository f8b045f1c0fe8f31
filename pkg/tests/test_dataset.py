from __future__ import annotations

import logging
from collections import Counter

import pytest

from cgescan.dataset import ingest, read_manifest, split, split_counts
from cgescan.errors import ManifestError

HEADER = "path,contract,function,kind,label\n"


def test_corpus_prepares_cleanly(corpus):
    assert len(corpus.samples) == 197 and not corpus.failures
    kinds = Counter(e.kind.value for e in corpus.entries)
    assert set(kinds) == {"reentrancy", "timestamp", "infinite-loop"}
    labels = Counter(s.label for s in corpus.samples)
    assert labels[0] > 0 and labels[1] > 0


def test_empty_manifest_warns(tmp_path, caplog):
    (tmp_path / "m.csv").write_text(HEADER)
    with caplog.at_level(logging.WARNING):
        result = ingest(tmp_path, tmp_path / "m.csv")
    assert not result.entries and "no entries" in caplog.text


def test_missing_file_is_a_failure(tmp_path):
    (tmp_path / "a.sol").write_text(
        "contract A { uint x; function f() public { x = now; } }")
    (tmp_path / "m.csv").write_text(HEADER + "a.sol,A,f,timestamp,1\nmissing.sol,B,g,timestamp,0\n")
    result = ingest(tmp_path, tmp_path / "m.csv")
    assert len(result.samples) == 1 and len(result.failures) == 1
    assert result.summary()["failed"] == 1
    assert "missing.sol" in result.failures[0][1]


def test_unknown_function_is_a_failure(tmp_path):
    (tmp_path / "a.sol").write_text("contract A { function f() public { } }")
    (tmp_path / "m.csv").write_text(HEADER + "a.sol,A,nope,timestamp,0\n")
    result = ingest(tmp_path, tmp_path / "m.csv")
    assert not result.samples and len(result.failures) == 1


def test_cache_round_trip(tmp_path):
    (tmp_path / "a.sol").write_text("contract A { uint x; function f() public { x = now; } }")
    (tmp_path / "m.csv").write_text(HEADER + "a.sol,A,f,timestamp,1\n")
    first = ingest(tmp_path, tmp_path / "m.csv", cache_dir=tmp_path / "cache")
    second = ingest(tmp_path, tmp_path / "m.csv", cache_dir=tmp_path / "cache")
    assert len(list((tmp_path / "cache").iterdir())) == 1
    a, b = first.samples[0], second.samples[0]
    assert a.label == b.label and a.name == b.name


@pytest.mark.parametrize("body", [
    "path,contract,kind,label\na.sol,A,timestamp,1\n",
    HEADER + "a.sol,A,f,timestamp,2\n",
    HEADER + "a.sol,A,f,overflow,1\n",
    HEADER + ",A,f,timestamp,1\n",
    HEADER + "a.sol,A,f,timestamp,1\na.sol,A,f,timestamp,0\n",
])
def test_bad_manifests(tmp_path, body):
    (tmp_path / "m.csv").write_text(body)
    with pytest.raises(ManifestError):
        read_manifest(tmp_path / "m.csv")


def test_split_sizes_and_determinism():
    items = list(range(10))
    labels = [0] * 10
    train, test = split(items, 0.8, 3, labels)
    assert len(train) == 8 and len(test) == 2
    assert sorted(train + test) == items
    assert split(items, 0.8, 3, labels) == (train, test)
    assert train == sorted(train) and test == sorted(test)


def test_split_is_stratified():
    items = list(range(10))
    labels = [0] * 5 + [1] * 5
    train, test = split(items, 0.8, 0, labels)
    assert Counter(labels[i] for i in train) == {0: 4, 1: 4}
    assert Counter(labels[i] for i in test) == {0: 1, 1: 1}


def test_split_rejects_bad_ratio():
    for r in (0, 1, 1.5):
        with pytest.raises(ValueError):
            split([1, 2], r, 0, [0, 1])


def test_split_counts_total():
    assert split_counts([3, 3, 3], 0.5) == [2, 1, 1]
    assert sum(split_counts([7, 2, 11], 0.8)) == 16
