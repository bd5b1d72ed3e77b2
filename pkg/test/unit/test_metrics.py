import numpy as np
import pytest

from stareid.errors import DimensionError
from stareid.errors import FormatError
from stareid.metrics import RetrievalSet
from stareid.metrics import cmc
from stareid.metrics import evaluate_retrieval
from stareid.metrics import mean_ap
from stareid.metrics import pairwise_distances
from stareid.metrics import read_embeddings
from stareid.metrics import write_embeddings


def _create_meta(query_ids, query_cams, gallery_ids, gallery_cams, distractors=None, width=2):
    return RetrievalSet(np.zeros((len(query_ids), width)), query_ids, query_cams,
                        np.zeros((len(gallery_ids), width)), gallery_ids, gallery_cams, distractors)


def _brute_force(dist, meta, ranks):
    hits = {r: 0 for r in ranks}
    precisions = []
    for q in range(dist.shape[0]):
        kept = [g for g in range(dist.shape[1])
                if not meta.gallery_distractors[g]
                and not (meta.gallery_identities[g] == meta.query_identities[q]
                         and meta.gallery_cameras[g] == meta.query_cameras[q])]
        kept.sort(key=lambda g: dist[q, g])
        matches = [meta.gallery_identities[g] == meta.query_identities[q] for g in kept]
        if not any(matches):
            continue
        first = matches.index(True)
        for r in ranks:
            hits[r] += first < r
        found = 0
        total = 0.0
        for position, match in enumerate(matches, start=1):
            if match:
                found += 1
                total += found / position
        precisions.append(total / found)

    evaluated = len(precisions)
    accuracy = {r: hits[r] / evaluated if evaluated else 0.0 for r in ranks}
    return accuracy, (np.mean(precisions) if precisions else 0.0), evaluated


def test_ap_five_sixths():
    meta = _create_meta([1], [0], [1, 2, 1, 3], [1, 1, 1, 1])
    dist = np.array([[0.1, 0.2, 0.3, 0.4]])

    m_ap, evaluated, skipped = mean_ap(dist, meta)
    assert m_ap == pytest.approx(5 / 6, abs=1e-15)
    assert (evaluated, skipped) == (1, 0)


def test_ap_one_tenth():
    gallery_ids = [2] * 9 + [1]
    meta = _create_meta([1], [0], gallery_ids, [1] * 10)
    dist = np.arange(10, dtype=float)[None]

    assert mean_ap(dist, meta)[0] == pytest.approx(0.1, abs=1e-15)
    accuracy, _, _ = cmc(dist, meta, ranks=(1, 5, 10))
    assert accuracy == {1: 0.0, 5: 0.0, 10: 1.0}


def test_same_camera_matches_and_distractors_are_ignored():
    meta = _create_meta([1], [0], [1, 1, 2, 1], [0, 1, 1, 1], distractors=[False, False, True, False])
    dist = np.array([[0.0, 0.5, 0.1, 0.9]])

    accuracy, evaluated, _ = cmc(dist, meta, ranks=(1, ))
    assert accuracy[1] == 1.0
    assert evaluated == 1
    assert mean_ap(dist, meta)[0] == pytest.approx(1.0)


def test_query_without_valid_match_is_skipped():
    meta = _create_meta([1, 2], [0, 0], [1, 2], [0, 1])
    dist = np.array([[0.1, 0.2], [0.2, 0.1]])

    accuracy, evaluated, skipped = cmc(dist, meta, ranks=(1, ))
    assert (evaluated, skipped) == (1, 1)
    assert accuracy[1] == 1.0


def test_metrics_match_brute_force():
    rng = np.random.RandomState(0)
    for _ in range(100):
        queries = rng.randint(1, 6)
        items = rng.randint(1, 21)
        meta = _create_meta(rng.randint(0, 4, size=queries), rng.randint(0, 2, size=queries),
                            rng.randint(0, 4, size=items), rng.randint(0, 2, size=items),
                            distractors=rng.rand(items) < 0.2)
        dist = rng.uniform(0, 1, size=(queries, items))
        ranks = tuple(r for r in (1, 5, 10, 20) if r <= items)

        expected_cmc, expected_map, expected_evaluated = _brute_force(dist, meta, ranks)
        accuracy, evaluated, _ = cmc(dist, meta, ranks)
        m_ap, _, _ = mean_ap(dist, meta)

        assert evaluated == expected_evaluated
        for r in ranks:
            assert accuracy[r] == expected_cmc[r]
        assert m_ap == pytest.approx(expected_map, abs=1e-12)


def _create_retrieval(rng):
    queries = rng.randint(1, 6)
    items = rng.randint(1, 21)
    query = rng.uniform(-1, 1, size=(queries, 4))
    gallery = rng.uniform(-1, 1, size=(items, 4))
    labels = (rng.randint(0, 4, size=queries), rng.randint(0, 2, size=queries),
              rng.randint(0, 4, size=items), rng.randint(0, 2, size=items), rng.rand(items) < 0.2)
    return query, gallery, labels


def test_report_ignores_global_scaling():
    rng = np.random.RandomState(8)
    for _ in range(50):
        query, gallery, (q_ids, q_cams, g_ids, g_cams, distractors) = _create_retrieval(rng)
        plain = evaluate_retrieval(RetrievalSet(query, q_ids, q_cams, gallery, g_ids, g_cams, distractors))
        scaled = evaluate_retrieval(RetrievalSet(7 * query, q_ids, q_cams, 7 * gallery, g_ids, g_cams, distractors))
        assert scaled.as_dict() == plain.as_dict()


def test_ranks_are_non_decreasing():
    rng = np.random.RandomState(9)
    for _ in range(50):
        query, gallery, (q_ids, q_cams, g_ids, g_cams, distractors) = _create_retrieval(rng)
        report = evaluate_retrieval(RetrievalSet(query, q_ids, q_cams, gallery, g_ids, g_cams, distractors))
        assert report.rank1 <= report.rank5 <= report.rank10 <= report.rank20


def test_rank_beyond_gallery_is_an_error():
    meta = _create_meta([1], [0], [1, 2], [1, 1])
    with pytest.raises(ValueError):
        cmc(np.zeros((1, 2)), meta, ranks=(5, ))


def test_evaluate_retrieval_saturates_ranks():
    embeddings = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]])
    meta = RetrievalSet(embeddings[:1], [1], [0], embeddings[1:], [2, 1], [1, 1])

    report = evaluate_retrieval(meta)
    assert report.rank1 == 0.0
    assert report.rank5 == report.rank20 == 1.0
    assert report.mAP == pytest.approx(0.5)
    assert 'rank1=0.0' in report.to_lines().splitlines()
    assert list(report.to_frame().columns) == ['rank1', 'rank5', 'rank10', 'rank20', 'mAP', 'evaluated',
                                               'skipped']


def test_evaluate_retrieval_empty_sets():
    empty_query = RetrievalSet(np.zeros((0, 2)), [], [], np.ones((2, 2)), [1, 2], [0, 0])
    report = evaluate_retrieval(empty_query)
    assert report.evaluated == 0
    assert report.rank1 == 0.0

    empty_gallery = RetrievalSet(np.ones((1, 2)), [1], [0], np.zeros((0, 2)), [], [])
    assert evaluate_retrieval(empty_gallery).skipped == 1


def test_pairwise_distances():
    query = np.array([[3.0, 4.0]])
    gallery = np.array([[0.0, 0.0], [3.0, 4.0]])
    np.testing.assert_allclose(pairwise_distances(query, gallery), [[5.0, 0.0]])
    np.testing.assert_allclose(pairwise_distances(query, gallery * 2, normalize=True), [[1.0, 0.0]], atol=1e-12)
    with pytest.raises(DimensionError):
        pairwise_distances(query, np.zeros((1, 3)))


def test_stae_round_trip_and_errors(tmp_path):
    path = tmp_path / 'embeddings.stae'
    embeddings = np.arange(6, dtype=np.float32).reshape(2, 3)
    write_embeddings(str(path), embeddings, [4, 5], [0, 1], [False, True])

    records = read_embeddings(str(path))
    np.testing.assert_array_equal(records.embeddings, embeddings)
    assert records.identities.tolist() == [4, 5]
    assert records.cameras.tolist() == [0, 1]
    assert records.distractors.tolist() == [False, True]

    blob = path.read_bytes()
    path.write_bytes(blob[:-1])
    with pytest.raises(FormatError):
        read_embeddings(str(path))
    path.write_bytes(b'STAF' + blob[4:])
    with pytest.raises(FormatError, match="magic"):
        read_embeddings(str(path))
