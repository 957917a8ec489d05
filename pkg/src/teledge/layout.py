"""Edge-display geometry and touch masks.

A device exposes two 1-D electrode strips, one per phone edge. Electrodes
are addressed by a single global index: the left strip occupies indices
``0 .. left_count-1`` and the right strip ``left_count .. total-1``, each
running top to bottom. A :class:`TouchMask` is one bit per electrode
(1 = touched) and is simultaneously a sensing report and a stimulation
candidate set.

Masks have a textual notation used in traces and fixtures: a brace-wrapped
comma list of set indices, e.g. ``{3,4,5}``; the empty mask is ``{}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

MAX_TOTAL = 256

DEFAULT_LEFT = 21
DEFAULT_RIGHT = 32


class LayoutError(ValueError):
    """Electrode counts that cannot form a valid layout."""


class MaskSizeError(ValueError):
    """Masks (or a mask and a map) built for different electrode counts."""


@dataclass(frozen=True)
class ElectrodeLayout:
    """Two 1-D strips of electrodes addressed by one global index space."""

    left_count: int
    right_count: int

    @property
    def total(self) -> int:
        return self.left_count + self.right_count

    def strip_of(self, index: int) -> str:
        """Return ``"left"`` or ``"right"`` for a global electrode index."""
        if not 0 <= index < self.total:
            raise IndexError(f"electrode index {index} out of range 0..{self.total - 1}")
        return "left" if index < self.left_count else "right"

    def strip_range(self, strip: str) -> range:
        """Global index range of a strip, top to bottom."""
        if strip == "left":
            return range(0, self.left_count)
        if strip == "right":
            return range(self.left_count, self.total)
        raise ValueError(f"unknown strip {strip!r}")


def make_layout(left_count: int = DEFAULT_LEFT, right_count: int = DEFAULT_RIGHT) -> ElectrodeLayout:
    """Build a layout, enforcing at least one electrode per strip and total <= 256."""
    if left_count < 1 or right_count < 1:
        raise LayoutError(f"strip counts must be >= 1, got ({left_count}, {right_count})")
    if left_count + right_count > MAX_TOTAL:
        raise LayoutError(f"total {left_count + right_count} exceeds {MAX_TOTAL} electrodes")
    return ElectrodeLayout(left_count, right_count)


DEFAULT_LAYOUT = make_layout()


@dataclass(frozen=True)
class TouchMask:
    """Fixed-width bit set over a layout's electrodes, one bit per electrode.

    Immutable; ``size`` is the electrode count and ``bits`` holds bit ``i``
    for electrode ``i``. An empty mask is a real value, distinct from "no
    mask received" (which callers represent as ``None``).
    """

    size: int
    bits: int = 0

    def __post_init__(self) -> None:
        if self.size < 1:
            raise MaskSizeError(f"mask size must be >= 1, got {self.size}")
        if self.bits < 0 or self.bits >> self.size:
            raise MaskSizeError(f"bits 0x{self.bits:x} do not fit in {self.size} electrodes")

    @classmethod
    def empty(cls, size: int) -> TouchMask:
        return cls(size, 0)

    @classmethod
    def from_indices(cls, size: int, indices: Iterable[int]) -> TouchMask:
        bits = 0
        for i in indices:
            if not 0 <= i < size:
                raise MaskSizeError(f"electrode {i} out of range for size {size}")
            bits |= 1 << i
        return cls(size, bits)

    def __contains__(self, index: int) -> bool:
        return 0 <= index < self.size and bool(self.bits >> index & 1)

    def __iter__(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def __bool__(self) -> bool:
        return self.bits != 0

    def __and__(self, other: TouchMask) -> TouchMask:
        return mask_and(self, other)

    def __or__(self, other: TouchMask) -> TouchMask:
        if self.size != other.size:
            raise MaskSizeError(f"mask sizes differ: {self.size} vs {other.size}")
        return TouchMask(self.size, self.bits | other.bits)

    def popcount(self) -> int:
        return self.bits.bit_count()

    def indices(self) -> tuple[int, ...]:
        return tuple(self)

    def issubset(self, other: TouchMask) -> bool:
        return self.size == other.size and self.bits & ~other.bits == 0


def mask_and(a: TouchMask, b: TouchMask) -> TouchMask:
    """Per-electrode intersection: bit i of the result is set iff set in both."""
    if a.size != b.size:
        raise MaskSizeError(f"mask sizes differ: {a.size} vs {b.size}")
    return TouchMask(a.size, a.bits & b.bits)


@dataclass(frozen=True)
class IndexMap:
    """Bijection relating local electrode indices to the paired device's.

    ``mapping[i]`` is the remote index lit when local electrode ``i`` is
    touched. Identity is the default pairing; ``mirrored`` reverses each
    strip top-to-bottom (the strips have unequal counts, so a left/right
    swap is not well defined).
    """

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.mapping)
        if sorted(self.mapping) != list(range(n)):
            raise ValueError("mapping is not a permutation of 0..total-1")

    @classmethod
    def identity(cls, total: int) -> IndexMap:
        return cls(tuple(range(total)))

    @classmethod
    def mirrored(cls, layout: ElectrodeLayout) -> IndexMap:
        left = tuple(reversed(layout.strip_range("left")))
        right = tuple(reversed(layout.strip_range("right")))
        return cls(left + right)

    @property
    def total(self) -> int:
        return len(self.mapping)

    def inverse(self) -> IndexMap:
        inv = [0] * self.total
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return IndexMap(tuple(inv))


def map_remote(mask: TouchMask, index_map: IndexMap) -> TouchMask:
    """Relabel a mask into the paired device's index space."""
    if mask.size != index_map.total:
        raise MaskSizeError(f"mask size {mask.size} does not match map over {index_map.total}")
    bits = 0
    for i in mask:
        bits |= 1 << index_map.mapping[i]
    return TouchMask(mask.size, bits)


def format_mask(mask: TouchMask) -> str:
    """Render the ``{3,4,5}`` trace notation; empty mask is ``{}``."""
    return "{" + ",".join(str(i) for i in mask) + "}"


def parse_mask(text: str, size: int) -> TouchMask:
    """Parse the ``{3,4,5}`` notation back into a mask of the given size."""
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ValueError(f"mask notation must be brace-wrapped, got {text!r}")
    body = text[1:-1].strip()
    if not body:
        return TouchMask.empty(size)
    return TouchMask.from_indices(size, (int(part) for part in body.split(",")))
