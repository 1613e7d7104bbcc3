"""
共享的 pytest fixtures
"""
import os
import sys

# 添加项目根目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from app.models.event import EventSchema, EventTypeSpec, LabeledArgSpec
from app.services.corpus_service import build_sample
from app.services.embedding_service import EmbeddingTable
from app.utils.standoff import load_schema

# tokens: Denies(0) alcohol(1) use(2) .(3) Former(4) smoker(5) .(6) IV(7) cocaine(8) use(9) .(10)
EXAMPLE_TEXT = "Denies alcohol use. Former smoker. IV cocaine use."


@pytest.fixture
def schema():
    return load_schema()


@pytest.fixture(scope="session")
def small_schema():
    """两个事件类型，各一个 labeled argument，另有少量 span-only 论元"""
    return EventSchema(event_types={
        "Alcohol": EventTypeSpec(
            labeled_args={"Status": LabeledArgSpec(labels=["none", "current", "past"], required=True)},
            span_args=["Amount"],
        ),
        "Drug": EventTypeSpec(
            labeled_args={"Status": LabeledArgSpec(labels=["none", "current", "past"], required=True)},
            span_args=["Type", "Amount"],
        ),
    })


@pytest.fixture
def example_sample():
    return build_sample("note1#0", EXAMPLE_TEXT)


@pytest.fixture
def tiny_embeddings():
    """缩放的正交 one-hot 行向量，每个 token 都可分"""
    words = ["denies", "alcohol", "use", ".", "former", "smoker", "iv", "cocaine"]
    return EmbeddingTable(
        dim=len(words),
        vocab={w: i for i, w in enumerate(words)},
        matrix=2.0 * np.eye(len(words)),
    )
