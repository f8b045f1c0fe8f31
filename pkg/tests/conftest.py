from __future__ import annotations

import sys
from pathlib import Path

import pytest

from cgescan.dataset import ingest, split
from cgescan.model import ModelConfig, train

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"
MANIFEST = CORPUS / "manifest.csv"


@pytest.fixture(scope="session")
def corpus():
    return ingest(CORPUS, MANIFEST)


@pytest.fixture(scope="session")
def reentrancy_checkpoint(corpus, tmp_path_factory):
    """A reentrancy model trained on the bundled corpus with default settings."""
    samples = [s for e, s in zip(corpus.entries, corpus.samples) if e.kind.value == "reentrancy"]
    train_set, _ = split(samples, 0.8, 0)
    result = train(train_set, ModelConfig(kind="reentrancy", seed=0))
    path = tmp_path_factory.mktemp("ckpt") / "reentrancy.ckpt"
    result.store.save(path)
    return path


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.VERDICTS:
        terminalreporter.section("acceptance")
        for line in module.VERDICTS:
            terminalreporter.write_line(line)
