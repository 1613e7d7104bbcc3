"""
词向量、TF-IDF 权重与样本向量测试
"""
import math

import numpy as np
import pytest

from app.core.exceptions import DimensionMismatchError, EmbeddingFormatError, MissingInputError
from app.models.vectors import SourceIdf, TfidfModel
from app.services.corpus_service import build_sample
from app.services.embedding_service import EmbeddingTable, cosine, load_embeddings, parse_embeddings, write_embeddings
from app.services.vector_service import (
    as_matrix,
    fit_tfidf,
    load_vectors,
    sample_vector,
    save_vectors,
    vectorize_samples,
)
from app.utils.tfidf_weights import fit_source_idf, term_weights


def _table(rows):
    vocab = {token: i for i, token in enumerate(rows)}
    return EmbeddingTable(dim=len(next(iter(rows.values()))), vocab=vocab, matrix=np.array(list(rows.values()), dtype=float))


def test_parse_embeddings_examples():
    table = parse_embeddings(["1 2", "foo 1.0 0.0"])
    assert table.dim == 2
    assert np.array_equal(table.get("foo"), [1.0, 0.0])

    empty = parse_embeddings(["0 5"])
    assert len(empty) == 0 and empty.dim == 5


@pytest.mark.parametrize("lines", [
    ["1 2", "foo 1.0 0.0 3.0"],
    ["2 2", "foo 1.0 0.0"],
    ["2 2", "foo 1 0", "foo 0 1"],
    ["1 2", "foo nan 0"],
    ["two 2", "foo 1 0"],
    [],
])
def test_parse_embeddings_rejects_malformed_input(lines):
    with pytest.raises(EmbeddingFormatError):
        parse_embeddings(lines)


def test_lookup_is_case_insensitive_and_zero_fills_oov():
    table = _table({"smokes": [1.0, 2.0]})
    assert "Smokes" in table
    V, known = table.lookup(["SMOKES", "beer"])
    assert known.tolist() == [True, False]
    assert V.tolist() == [[1.0, 2.0], [0.0, 0.0]]


def test_write_and_load_embeddings(tmp_path):
    table = _table({"a": [0.1, -2.5], "b": [3.0, 1e-7]})
    path = tmp_path / "emb.txt"
    write_embeddings(table, path)
    loaded = load_embeddings(path)
    assert loaded.vocab == table.vocab
    assert np.array_equal(loaded.matrix, table.matrix)


def test_idf_values():
    """平滑 idf: ln((1+N)/(1+df)) + 1"""
    idf = fit_source_idf([["a", "b"], ["b"], ["b", "c", "c"]])
    assert idf.n_documents == 3
    assert idf.df == {"a": 1, "b": 3, "c": 1}
    assert idf.idf["b"] == pytest.approx(1.0)
    assert idf.idf["a"] == pytest.approx(math.log(2) + 1)
    assert idf.weight("unseen") == pytest.approx(math.log(4) + 1)


def test_idf_of_empty_source():
    idf = fit_source_idf([[], []])
    assert idf.n_documents == 2 and idf.idf == {}


def test_term_weights_modes():
    idf = SourceIdf(n_documents=3, df={"a": 1}, idf={"a": 2.0})
    assert term_weights(["a", "a"], idf, "raw") == {"a": 4.0}
    assert term_weights(["a", "a"], idf, "lognorm")["a"] == pytest.approx(2.0 * (1 + math.log(2)))


def test_fit_tfidf_per_source():
    """每个来源独立拟合权重"""
    samples = [
        build_sample("a1", "smokes daily", source="A"),
        build_sample("a2", "smokes never", source="A"),
        build_sample("b1", "smokes", source="B"),
    ]
    model = fit_tfidf(samples)
    assert set(model.sources) == {"A", "B"}
    assert model.sources["A"].idf["smokes"] == pytest.approx(1.0)
    assert model.sources["A"].idf["daily"] == pytest.approx(math.log(3 / 2) + 1)
    assert model.sources["B"].n_documents == 1
    assert "daily" not in model.sources["B"].idf
    assert fit_tfidf(list(reversed(samples))) == model


def test_sample_vector_single_token():
    embeddings = _table({"smokes": [0.3, -0.7]})
    sample = build_sample("s1", "smokes")
    vector = sample_vector(sample, embeddings, fit_tfidf([sample]))
    assert vector.vector == pytest.approx([0.3, -0.7])


def test_sample_vector_weighted_average():
    """a (w=2, e=[1,0]) and b (w=1, e=[0,1]) average to [2/3, 1/3]."""
    embeddings = _table({"a": [1.0, 0.0], "b": [0.0, 1.0]})
    tfidf = TfidfModel(sources={"default": SourceIdf(n_documents=2, idf={"a": 2.0, "b": 1.0})})
    vector = sample_vector(build_sample("s1", "a b"), embeddings, tfidf)
    assert vector.vector == pytest.approx([2 / 3, 1 / 3])
    assert vector.norm == pytest.approx(math.sqrt(5) / 3)


def test_sample_vector_all_oov():
    embeddings = _table({"a": [1.0, 0.0]})
    sample = build_sample("s1", "nothing known here")
    vector = sample_vector(sample, embeddings, fit_tfidf([sample]))
    assert vector.vector.tolist() == [0.0, 0.0]
    assert vector.norm == 0.0


def test_sample_vector_requires_fitted_source():
    sample = build_sample("s1", "a", source="other")
    with pytest.raises(MissingInputError):
        sample_vector(sample, _table({"a": [1.0]}), TfidfModel())


def test_vectorize_save_and_load(tmp_path):
    embeddings = _table({"a": [1.0, 0.0], "b": [0.0, 1.0]})
    samples = [build_sample("s1", "a b b"), build_sample("s2", "a")]
    vectors = vectorize_samples(samples, embeddings, fit_tfidf(samples), threads=2)
    assert list(vectors) == ["s1", "s2"]

    path = tmp_path / "vectors.json"
    save_vectors(vectors, path)
    loaded = load_vectors(path)
    assert np.array_equal(loaded["s1"].vector, vectors["s1"].vector)

    assert as_matrix(loaded, ["s2", "s1"]).shape == (2, 2)
    with pytest.raises(MissingInputError):
        as_matrix(loaded, ["s3"])


def test_cosine_examples():
    assert cosine([3.0, 4.0], [3.0, 4.0]) == pytest.approx(1.0)
    assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert cosine([0.0, 0.0], [1.0, 2.0]) == 0.0
    assert cosine([1.0, 2.0], [-1.0, -2.0]) == pytest.approx(-1.0)
    with pytest.raises(DimensionMismatchError):
        cosine([1.0], [1.0, 2.0])


def test_cosine_is_symmetric_and_bounded():
    rng = np.random.default_rng(5)
    for _ in range(100):
        u, v = rng.normal(size=6) * 1e3, rng.normal(size=6)
        assert cosine(u, v) == cosine(v, u)
        assert abs(cosine(u, v)) <= 1.0


if __name__ == "__main__":
    pytest.main([__file__])
