"""Simulated bandit feedback: task losses scored against held-back gold.

The learner only ever sees scalar loss values in [0, 1].  The oracle object
holds the loss kind and reads the gold labeling off the instance itself; its
public surface deliberately has no operation that returns a labeling.
"""

from __future__ import annotations

import re
from enum import Enum
from typing import Callable, Sequence

from .chain import ChainInstance
from .objectives import PairSample, pair_feedback

Labeling = Sequence[str]

_BIO_LABEL = re.compile(r"^(O|[BI](-.+)?)$")


class LossKind(Enum):
    HAMMING = "hamming"
    CHUNK_F1 = "chunk-f1"

    @classmethod
    def parse(cls, name: "str | LossKind") -> "LossKind":
        if isinstance(name, LossKind):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            options = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown loss {name!r} (expected one of {options})") from None


def hamming_loss(gold: Labeling, pred: Labeling) -> float:
    """Fraction of positions whose labels disagree."""
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: gold {len(gold)} vs pred {len(pred)}")
    mismatches = sum(1 for g, p in zip(gold, pred) if g != p)
    return mismatches / len(gold)


def bio_spans(labels: Labeling) -> set[tuple[int, int, str]]:
    """Chunks (start, end inclusive, type) under the BIO convention.

    A B tag always opens a span.  An I tag continues the open span of the
    same type; after O, at the start, or after a different type it opens a
    new span of its own type.
    """
    spans: set[tuple[int, int, str]] = set()
    start = None
    kind = None
    for i, lab in enumerate(labels):
        if not _BIO_LABEL.match(lab):
            raise ValueError(f"label {lab!r} is not a BIO tag")
        if lab == "O":
            if start is not None:
                spans.add((start, i - 1, kind))
                start = None
            continue
        tag, _, chunk_type = lab.partition("-")
        if tag == "B" or start is None or chunk_type != kind:
            if start is not None:
                spans.add((start, i - 1, kind))
            start = i
            kind = chunk_type
    if start is not None:
        spans.add((start, len(labels) - 1, kind))
    return spans


def chunk_f1_loss(gold: Labeling, pred: Labeling) -> float:
    """1 - F1 over exact BIO span matches.

    Both span sets empty counts as a perfect prediction (loss 0); exactly
    one empty as a total miss (loss 1).
    """
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: gold {len(gold)} vs pred {len(pred)}")
    gold_spans = bio_spans(gold)
    pred_spans = bio_spans(pred)
    if not gold_spans and not pred_spans:
        return 0.0
    if not gold_spans or not pred_spans:
        return 1.0
    tp = len(gold_spans & pred_spans)
    if tp == 0:
        return 1.0
    precision = tp / len(pred_spans)
    recall = tp / len(gold_spans)
    return 1.0 - 2.0 * precision * recall / (precision + recall)


_LOSS_FNS: dict[LossKind, Callable[[Labeling, Labeling], float]] = {
    LossKind.HAMMING: hamming_loss,
    LossKind.CHUNK_F1: chunk_f1_loss,
}


def loss_fn(kind: "str | LossKind") -> Callable[[Labeling, Labeling], float]:
    return _LOSS_FNS[LossKind.parse(kind)]


class FeedbackOracle:
    """Scores predictions against gold, exposing only scalars.

    No public operation returns a labeling; the learner can request the loss
    of a prediction (or the pairwise feedback for an ordered pair) and
    nothing else.
    """

    def __init__(self, kind: "str | LossKind" = LossKind.HAMMING):
        self.kind = LossKind.parse(kind)
        self._loss = _LOSS_FNS[self.kind]

    def __repr__(self) -> str:
        return f"FeedbackOracle({self.kind.value!r})"

    @property
    def loss(self) -> Callable[[Labeling, Labeling], float]:
        """The pointwise loss function (gold, pred) -> [0, 1]."""
        return self._loss

    def feedback(self, instance: ChainInstance, labeling: Labeling) -> float:
        """Pointwise bandit feedback for one predicted labeling."""
        if instance.gold is None:
            raise ValueError("instance has no gold labeling; cannot simulate feedback")
        return self._loss(instance.gold, labeling)

    def feedback_pair(self, instance: ChainInstance, pair: PairSample, mode: str) -> float:
        """Pairwise feedback for an ordered pair of predictions."""
        return pair_feedback(
            self.feedback(instance, pair.first),
            self.feedback(instance, pair.second),
            mode,
        )
