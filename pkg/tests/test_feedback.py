import numpy as np
import pytest

from banditchain import (
    ChainInstance,
    FeedbackOracle,
    LossKind,
    PairSample,
    bio_spans,
    chunk_f1_loss,
    hamming_loss,
    loss_fn,
)


def test_hamming_identical_and_disjoint():
    assert hamming_loss(("A", "B"), ("A", "B")) == 0.0
    assert hamming_loss(("A", "B"), ("B", "A")) == 1.0


def test_hamming_partial():
    assert hamming_loss(("B", "I", "O"), ("B", "O", "O")) == pytest.approx(1 / 3)


def test_hamming_length_mismatch():
    with pytest.raises(ValueError, match="length"):
        hamming_loss(("A",), ("A", "B"))


def test_hamming_symmetric():
    rng = np.random.default_rng(0)
    labels = ("A", "B", "C")
    for _ in range(50):
        a = tuple(labels[i] for i in rng.integers(3, size=6))
        b = tuple(labels[i] for i in rng.integers(3, size=6))
        assert hamming_loss(a, b) == hamming_loss(b, a)


def test_bio_spans_basic():
    assert bio_spans(("O", "B", "I", "O", "B")) == {(1, 2, ""), (4, 4, "")}


def test_bio_spans_i_after_o_opens_span():
    assert bio_spans(("O", "I", "I")) == {(1, 2, "")}


def test_bio_spans_type_change_opens_span():
    assert bio_spans(("B-NP", "I-VP", "I-VP")) == {(0, 0, "NP"), (1, 2, "VP")}


def test_bio_spans_b_always_opens():
    assert bio_spans(("B", "B", "I")) == {(0, 0, ""), (1, 2, "")}


def test_bio_spans_rejects_non_bio():
    with pytest.raises(ValueError, match="BIO"):
        bio_spans(("O", "X"))


def test_chunk_f1_identical_spans():
    assert chunk_f1_loss(("O", "B", "I"), ("O", "B", "I")) == 0.0


def test_chunk_f1_both_empty():
    assert chunk_f1_loss(("O", "O"), ("O", "O")) == 0.0


def test_chunk_f1_one_empty():
    assert chunk_f1_loss(("O", "B"), ("O", "O")) == 1.0
    assert chunk_f1_loss(("O", "O"), ("O", "B")) == 1.0


def test_chunk_f1_disjoint_nonempty():
    assert chunk_f1_loss(("B", "O", "O"), ("O", "O", "B")) == 1.0


def test_chunk_f1_partial_overlap():
    # gold span (1,2); pred spans (1,2) and (4,4): P=1/2, R=1, F1=2/3
    gold = ("O", "B", "I", "O", "O")
    pred = ("O", "B", "I", "O", "B")
    assert chunk_f1_loss(gold, pred) == pytest.approx(1 / 3)


def test_loss_kind_parsing():
    assert LossKind.parse("chunk-f1") is LossKind.CHUNK_F1
    assert loss_fn("hamming") is hamming_loss
    with pytest.raises(ValueError, match="unknown loss"):
        LossKind.parse("bleu")


def test_feedback_pointwise():
    oracle = FeedbackOracle("hamming")
    x = ChainInstance(tokens=("a", "b"), gold=("A", "B"))
    assert oracle.feedback(x, ("A", "B")) == 0.0
    assert oracle.feedback(x, ("B", "B")) == 0.5


def test_feedback_requires_gold():
    oracle = FeedbackOracle("hamming")
    with pytest.raises(ValueError, match="gold"):
        oracle.feedback(ChainInstance(tokens=("a",)), ("A",))


def test_feedback_pair_equal_losses_zero():
    oracle = FeedbackOracle("hamming")
    x = ChainInstance(tokens=("a", "b"), gold=("A", "B"))
    pair = PairSample(("B", "A"), ("B", "A"))
    assert oracle.feedback_pair(x, pair, "bin") == 0.0
    assert oracle.feedback_pair(x, pair, "cont") == 0.0


def test_feedback_pair_continuous_gap():
    oracle = FeedbackOracle("hamming")
    x = ChainInstance(tokens=tuple("abcde"), gold=("A", "A", "A", "A", "A"))
    worse = ("B", "B", "B", "A", "A")  # loss 0.6
    better = ("B", "A", "A", "A", "A")  # loss 0.2
    assert oracle.feedback_pair(x, PairSample(worse, better), "cont") == pytest.approx(0.4)
    assert oracle.feedback_pair(x, PairSample(worse, better), "bin") == 1.0
    assert oracle.feedback_pair(x, PairSample(better, worse), "cont") == 0.0


def test_feedback_values_stay_in_unit_interval():
    rng = np.random.default_rng(1)
    oracle = FeedbackOracle("chunk-f1")
    labels = ("O", "B", "I")
    for _ in range(100):
        n = int(rng.integers(1, 8))
        gold = tuple(labels[i] for i in rng.integers(3, size=n))
        pred = tuple(labels[i] for i in rng.integers(3, size=n))
        x = ChainInstance(tokens=tuple(f"t{i}" for i in range(n)), gold=gold)
        value = oracle.feedback(x, pred)
        assert 0.0 <= value <= 1.0


def test_oracle_interface_exposes_only_scalars():
    """API review: no public operation on the oracle returns a labeling."""
    oracle = FeedbackOracle("hamming")
    public = [name for name in dir(oracle) if not name.startswith("_")]
    assert sorted(public) == ["feedback", "feedback_pair", "kind", "loss"]
    x = ChainInstance(tokens=("a", "b"), gold=("A", "B"))
    assert isinstance(oracle.feedback(x, ("B", "A")), float)
    assert isinstance(
        oracle.feedback_pair(x, PairSample(("B", "A"), ("A", "B")), "bin"), float
    )
    # the loss accessor is a scalar-valued function, not a structure accessor
    assert isinstance(oracle.loss(("A",), ("B",)), float)
