import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def _squad(paragraphs):
    return {"version": "1.1", "data": [{"title": "t", "paragraphs": paragraphs}]}


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def kv_files(tmp_path):
    """A tiny key-value train/dev pair written as SQuAD v1.1 files."""
    def make(n, prefix, offset):
        paragraphs = []
        for i in range(n):
            a, b = (i + offset) % 5, (i + offset + 2) % 5
            context = f"k{a} is v{a} . k{b} is v{b} ."
            start = context.index(f"v{b}")
            paragraphs.append({
                "context": context,
                "qas": [{"id": f"{prefix}{i}", "question": f"what is k{b} ?",
                         "answers": [{"text": f"v{b}", "answer_start": start}]}],
            })
        return _squad(paragraphs)

    train, dev = tmp_path / "train.json", tmp_path / "dev.json"
    train.write_text(json.dumps(make(20, "t", 0)))
    dev.write_text(json.dumps(make(6, "d", 1)))
    return train, dev
