"""Sparse real-valued vectors keyed by integer feature ids."""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Mapping, Tuple


class SparseVector:
    """A mapping from feature id to a finite, nonzero float.

    Entries that are exactly zero are dropped, both on construction and after
    in-place updates, so iterating a vector only ever visits active
    coordinates.  All values are checked to be finite on construction; the
    arithmetic ops preserve finiteness for finite inputs.
    """

    __slots__ = ("_data",)

    def __init__(self, data: Mapping[int, float] | Iterable[Tuple[int, float]] | None = None):
        clean: dict[int, float] = {}
        if data is not None:
            items = data.items() if hasattr(data, "items") else data
            for fid, value in items:
                value = float(value)
                if not math.isfinite(value):
                    raise ValueError(f"non-finite value {value!r} for feature {fid}")
                if value != 0.0:
                    clean[int(fid)] = value
        self._data = clean

    @classmethod
    def _from_clean(cls, data: dict[int, float]) -> "SparseVector":
        out = cls.__new__(cls)
        out._data = data
        return out

    def copy(self) -> "SparseVector":
        return SparseVector._from_clean(dict(self._data))

    def get(self, fid: int, default: float = 0.0) -> float:
        return self._data.get(fid, default)

    def items(self) -> Iterable[Tuple[int, float]]:
        return self._data.items()

    def support(self) -> set[int]:
        return set(self._data)

    def __getitem__(self, fid: int) -> float:
        return self._data.get(fid, 0.0)

    def __setitem__(self, fid: int, value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} for feature {fid}")
        if value == 0.0:
            self._data.pop(fid, None)
        else:
            self._data[int(fid)] = value

    def __len__(self) -> int:
        return len(self._data)

    def __iter__(self) -> Iterator[int]:
        return iter(self._data)

    def __contains__(self, fid: int) -> bool:
        return fid in self._data

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self._data == other._data

    def __repr__(self) -> str:
        shown = dict(sorted(self._data.items())[:6])
        more = "" if len(self._data) <= 6 else f", ... ({len(self._data)} entries)"
        return f"SparseVector({shown!r}{more})"

    # -- arithmetic ---------------------------------------------------------

    def add_scaled(self, other: "SparseVector", scale: float = 1.0) -> "SparseVector":
        """In-place ``self += scale * other``; returns self."""
        if scale == 0.0:
            return self
        data = self._data
        for fid, value in other._data.items():
            new = data.get(fid, 0.0) + scale * value
            if new == 0.0:
                data.pop(fid, None)
            else:
                data[fid] = new
        return self

    def scale(self, c: float) -> "SparseVector":
        """In-place multiplication by a scalar; returns self."""
        if c == 0.0:
            self._data.clear()
        elif c != 1.0:
            for fid in self._data:
                self._data[fid] *= c
        return self

    def scaled(self, c: float) -> "SparseVector":
        if c == 0.0:
            return SparseVector()
        return SparseVector._from_clean({f: c * v for f, v in self._data.items()})

    def __add__(self, other: "SparseVector") -> "SparseVector":
        return self.copy().add_scaled(other, 1.0)

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        return self.copy().add_scaled(other, -1.0)

    def __mul__(self, c: float) -> "SparseVector":
        return self.scaled(float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "SparseVector":
        return self.scaled(-1.0)

    def dot(self, other: "SparseVector") -> float:
        a, b = self._data, other._data
        if len(b) < len(a):
            a, b = b, a
        return sum(v * b[f] for f, v in a.items() if f in b)

    def norm_sq(self) -> float:
        return sum(v * v for v in self._data.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())


def mean_vector(vectors: Iterable[SparseVector]) -> SparseVector:
    """Arithmetic mean of a nonempty collection of sparse vectors."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("mean of empty collection")
    acc = SparseVector()
    for v in vectors:
        acc.add_scaled(v, 1.0)
    return acc.scale(1.0 / len(vectors))
