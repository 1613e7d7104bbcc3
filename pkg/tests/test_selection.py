"""
批量主动学习查询测试
"""
import math

import numpy as np
import pytest

from app.core.exceptions import ForgeError
from app.models.selection import SelectionConfig
from app.models.surrogate import ProbProfile
from app.services.selection_service import (
    batch_score,
    diversity,
    greedy_select,
    random_select,
    similarity_to_batch,
    uncertainties_for_batch,
)
from app.services.surrogate_service import sample_uncertainty

EVENT_TYPES = ["A", "B", "C"]


def _pool(rng, n=12, dim=5):
    """随机概率分布与向量；ID 故意不按字典序生成"""
    ids = [f"s{k:03d}" for k in rng.permutation(n)]
    profiles = {
        sid: ProbProfile(sample_id=sid, distributions={
            et: rng.dirichlet(np.ones(3 + i)).tolist() for i, et in enumerate(EVENT_TYPES)
        })
        for sid in ids
    }
    vectors = {sid: rng.normal(size=dim) for sid in ids}
    return ids, profiles, vectors


def _frozen_oracle(ids, profiles, vectors, config):
    """逐步穷举：s_i 相对当前批次，u 按当前批次大小取 slot"""
    batch = []
    for slot in range(min(config.batch_size, len(ids))):
        best_id, best = None, -math.inf
        for sid in sorted(ids):
            if sid in batch:
                continue
            s = similarity_to_batch(vectors[sid], [vectors[b] for b in batch], config.similarity_mode)
            u = sample_uncertainty(profiles[sid], config.uncertainty_mode, slot, EVENT_TYPES)
            value = float(diversity(s, config.alpha)) * u
            if value > best:
                best_id, best = sid, value
        batch.append(best_id)
    return batch


def _rescore_oracle(ids, profiles, vectors, config):
    uncertainties = {sid: sample_uncertainty(profiles[sid], "sum") for sid in ids}
    batch = []
    for _ in range(min(config.batch_size, len(ids))):
        candidates = [sid for sid in sorted(ids) if sid not in batch]
        batch.append(max(candidates, key=lambda sid: batch_score(batch + [sid], uncertainties, vectors, config)))
    return batch, uncertainties


def test_similarity_to_batch_examples():
    candidate = [1.0, 0.0]
    batch = [[0.8, 0.6], [0.2, math.sqrt(1 - 0.04)]]
    assert similarity_to_batch(candidate, batch, "average") == pytest.approx(0.5)
    assert similarity_to_batch(candidate, batch, "maximum") == pytest.approx(0.8)
    assert similarity_to_batch(candidate, [], "maximum") == 0.0


def test_diversity_clips_base():
    assert float(diversity(0.0, 0.1)) == 1.0
    assert float(diversity(1.0, 2.0)) == 0.0
    assert float(diversity(-1.0, 1.0)) == pytest.approx(2.0)


def test_batch_score_examples():
    config = SelectionConfig(alpha=0.1, similarity_mode="maximum")
    vectors = {"a": [1.0, 0.0], "b": [0.5, math.sqrt(0.75)]}
    assert batch_score(["a"], {"a": 1.0}, vectors, config) == pytest.approx(1.0)
    assert batch_score(["a", "b"], {"a": 1.0, "b": 1.0}, vectors, config) == pytest.approx(2 * 0.5 ** 0.1)


def test_single_pick_is_most_uncertain():
    rng = np.random.default_rng(1)
    ids, profiles, vectors = _pool(rng)
    config = SelectionConfig(batch_size=1, uncertainty_mode="sum")
    batch = greedy_select(ids, profiles, vectors, config, EVENT_TYPES)
    expected = max(sorted(ids), key=lambda sid: sample_uncertainty(profiles[sid], "sum"))
    assert batch.sample_ids == [expected]
    assert batch.steps[0].similarity == 0.0


def test_batch_larger_than_pool_takes_everything():
    rng = np.random.default_rng(2)
    ids, profiles, vectors = _pool(rng, n=5)
    batch = greedy_select(ids, profiles, vectors, SelectionConfig(batch_size=9), EVENT_TYPES)
    assert sorted(batch.sample_ids) == sorted(ids)
    assert [step.rank for step in batch.steps] == [1, 2, 3, 4, 5]


@pytest.mark.parametrize("similarity_mode", ["average", "maximum"])
@pytest.mark.parametrize("uncertainty_mode", ["sum", "loop"])
@pytest.mark.parametrize("alpha", [0.1, 1.0, 2.0])
def test_greedy_matches_exhaustive_steps(similarity_mode, uncertainty_mode, alpha):
    rng = np.random.default_rng(int(alpha * 10) + len(similarity_mode) + len(uncertainty_mode))
    ids, profiles, vectors = _pool(rng)
    config = SelectionConfig(batch_size=6, alpha=alpha, similarity_mode=similarity_mode, uncertainty_mode=uncertainty_mode)
    batch = greedy_select(ids, profiles, vectors, config, EVENT_TYPES)
    assert batch.sample_ids == _frozen_oracle(ids, profiles, vectors, config)

    marginals = [step.q_marginal for step in batch.steps]
    assert batch.steps[-1].q_total == pytest.approx(sum(marginals))


def test_greedy_matches_exhaustive_steps_on_random_pools():
    """50 个随机样本池 (|U| <= 100, N <= 10)，轮换相似度、不确定性与 alpha 组合"""
    combos = [
        (similarity_mode, uncertainty_mode, alpha)
        for similarity_mode in ["average", "maximum"]
        for uncertainty_mode in ["sum", "loop"]
        for alpha in [0.1, 1.0, 2.0]
    ]
    rng = np.random.default_rng(50)
    for k in range(50):
        ids, profiles, vectors = _pool(rng, n=int(rng.integers(20, 101)), dim=int(rng.integers(3, 9)))
        similarity_mode, uncertainty_mode, alpha = combos[k % len(combos)]
        config = SelectionConfig(
            batch_size=int(rng.integers(1, 11)),
            alpha=alpha,
            similarity_mode=similarity_mode,
            uncertainty_mode=uncertainty_mode,
        )
        batch = greedy_select(ids, profiles, vectors, config, EVENT_TYPES)
        assert batch.sample_ids == _frozen_oracle(ids, profiles, vectors, config)


def test_loop_mode_cycles_event_types():
    """每个类型只有一个样本不确定，逐个位置的选择依次落在这些样本上"""
    certain = {"A": [1.0, 0.0], "B": [1.0, 0.0], "C": [1.0, 0.0]}
    profiles = {}
    for sid, uncertain_type in [("x", "A"), ("y", "B"), ("z", "C")]:
        dists = dict(certain)
        dists[uncertain_type] = [0.5, 0.5]
        profiles[sid] = ProbProfile(sample_id=sid, distributions=dists)
    vectors = {"x": [1.0, 0.0], "y": [0.0, 1.0], "z": [1.0, 1.0]}
    config = SelectionConfig(batch_size=3, uncertainty_mode="loop")
    batch = greedy_select(["z", "y", "x"], profiles, vectors, config, EVENT_TYPES)
    assert batch.sample_ids == ["x", "y", "z"]


def test_ties_go_to_smallest_id():
    profiles = {sid: ProbProfile(sample_id=sid, distributions={"A": [0.5, 0.5]}) for sid in ["b", "a", "c"]}
    vectors = {sid: [1.0, 0.0] for sid in profiles}
    batch = greedy_select(list(profiles), profiles, vectors, SelectionConfig(batch_size=1), ["A"])
    assert batch.sample_ids == ["a"]


@pytest.mark.parametrize("similarity_mode", ["average", "maximum"])
def test_rescored_batch_matches_exhaustive_steps(similarity_mode):
    rng = np.random.default_rng(5)
    ids, profiles, vectors = _pool(rng, n=10)
    config = SelectionConfig(batch_size=5, alpha=1.0, similarity_mode=similarity_mode,
                             uncertainty_mode="sum", rescore_final_batch=True)
    batch = greedy_select(ids, profiles, vectors, config, EVENT_TYPES)
    expected, uncertainties = _rescore_oracle(ids, profiles, vectors, config)
    assert batch.sample_ids == expected
    assert batch.steps[-1].q_total == pytest.approx(batch_score(batch.sample_ids, uncertainties, vectors, config))


def test_pool_errors():
    rng = np.random.default_rng(6)
    ids, profiles, vectors = _pool(rng, n=3)
    with pytest.raises(ForgeError):
        greedy_select([], profiles, vectors, SelectionConfig(), EVENT_TYPES)
    with pytest.raises(ForgeError):
        greedy_select(ids + ids[:1], profiles, vectors, SelectionConfig(), EVENT_TYPES)


def test_random_select_is_reproducible():
    pool = [f"p{k}" for k in range(20)]
    a = random_select(pool, 5, np.random.default_rng(3))
    b = random_select(list(reversed(pool)), 5, np.random.default_rng(3))
    assert a.sample_ids == b.sample_ids
    assert len(set(a.sample_ids)) == 5
    assert a.strategy == "random"
    assert len(random_select(pool, 50, np.random.default_rng(0)).sample_ids) == 20


def test_csv_rows_and_uncertainties():
    rng = np.random.default_rng(7)
    ids, profiles, vectors = _pool(rng, n=4)
    batch = greedy_select(ids, profiles, vectors, SelectionConfig(batch_size=2), EVENT_TYPES)
    rows = batch.csv_rows()
    assert [row["rank"] for row in rows] == [1, 2]
    assert set(rows[0]) == {"rank", "sample_id", "u", "s", "q_marginal"}
    assert set(uncertainties_for_batch(batch)) == set(batch.sample_ids)


if __name__ == "__main__":
    pytest.main([__file__])
