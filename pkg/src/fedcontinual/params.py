"""Flat parameter vectors with a named segment layout."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


class LayoutMismatchError(ValueError):
    """Two parameter vectors (or a vector and a model spec) disagree on layout."""


@dataclass(frozen=True)
class Segment:
    name: str
    offset: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))


class Layout(tuple):
    """Ordered, contiguous segments covering a flat array."""

    def __new__(cls, segments: Sequence[Segment]):
        segments = tuple(segments)
        offset = 0
        names = set()
        for seg in segments:
            if seg.offset != offset:
                raise LayoutMismatchError(
                    f"segment {seg.name!r} starts at {seg.offset}, expected {offset}"
                )
            if seg.name in names:
                raise LayoutMismatchError(f"duplicate segment name {seg.name!r}")
            names.add(seg.name)
            offset += seg.size
        return super().__new__(cls, segments)

    @classmethod
    def from_shapes(cls, shapes: Sequence[tuple[str, tuple[int, ...]]]) -> "Layout":
        segments = []
        offset = 0
        for name, shape in shapes:
            seg = Segment(name, offset, tuple(int(s) for s in shape))
            segments.append(seg)
            offset += seg.size
        return cls(segments)

    @property
    def size(self) -> int:
        return sum(seg.size for seg in self)

    def names(self) -> list[str]:
        return [seg.name for seg in self]

    def to_list(self) -> list[dict]:
        return [{"name": s.name, "offset": s.offset, "shape": list(s.shape)} for s in self]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "Layout":
        return cls([Segment(d["name"], int(d["offset"]), tuple(d["shape"])) for d in items])


class ParamVector:
    """A float64 vector plus the layout that names its pieces.

    Arithmetic between two vectors requires identical layouts. ``view(name)``
    returns a reshaped view into the flat storage, so writes through it are
    visible in ``data``.
    """

    __slots__ = ("data", "layout")

    def __init__(self, data: np.ndarray, layout: Layout):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 1 or data.size != layout.size:
            raise LayoutMismatchError(
                f"data of shape {data.shape} does not cover layout of size {layout.size}"
            )
        self.data = data
        self.layout = layout

    @classmethod
    def zeros(cls, layout: Layout) -> "ParamVector":
        return cls(np.zeros(layout.size), layout)

    def view(self, name: str) -> np.ndarray:
        for seg in self.layout:
            if seg.name == name:
                return self.data[seg.offset:seg.offset + seg.size].reshape(seg.shape)
        raise KeyError(name)

    def views(self) -> Iterator[tuple[str, np.ndarray]]:
        for seg in self.layout:
            yield seg.name, self.data[seg.offset:seg.offset + seg.size].reshape(seg.shape)

    def copy(self) -> "ParamVector":
        return ParamVector(self.data.copy(), self.layout)

    def like(self, data: np.ndarray) -> "ParamVector":
        return ParamVector(data, self.layout)

    def check_layout(self, other: "ParamVector") -> None:
        if self.layout != other.layout:
            raise LayoutMismatchError("parameter layouts differ")

    def __add__(self, other: "ParamVector") -> "ParamVector":
        self.check_layout(other)
        return ParamVector(self.data + other.data, self.layout)

    def __sub__(self, other: "ParamVector") -> "ParamVector":
        self.check_layout(other)
        return ParamVector(self.data - other.data, self.layout)

    def __mul__(self, scale: float) -> "ParamVector":
        return ParamVector(self.data * float(scale), self.layout)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return self.data.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"ParamVector(size={self.data.size}, segments={self.layout.names()})"
