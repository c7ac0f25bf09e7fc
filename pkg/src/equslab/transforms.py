"""Unitary grid transforms (pure index permutations) and transform groups."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Transform:
    """A permutation of the pixel grid of an ``(H, W, C)`` image.

    ``kind`` is one of ``identity``, ``hflip``, ``vflip``, ``rot90`` (with
    ``k`` quarter turns, square grids only) or ``shift`` (cyclic, by
    ``dx`` columns and ``dy`` rows).
    """

    kind: str
    k: int = 1
    dx: int = 0
    dy: int = 0

    def __post_init__(self):
        if self.kind not in ("identity", "hflip", "vflip", "rot90", "shift"):
            raise ValueError(f"unknown transform kind {self.kind!r}")

    @property
    def name(self) -> str:
        if self.kind == "rot90":
            return f"rot90x{self.k % 4}"
        if self.kind == "shift":
            return f"shift:{self.dx},{self.dy}"
        return self.kind

    def _check(self, x):
        if x.ndim != 3:
            raise ValueError(f"expected an (H, W, C) image, got shape {x.shape}")
        if self.kind == "rot90" and x.shape[0] != x.shape[1]:
            raise ValueError("rot90 needs a square grid")

    def apply(self, x):
        x = np.asarray(x)
        self._check(x)
        if self.kind == "identity":
            out = x
        elif self.kind == "hflip":
            out = x[:, ::-1, :]
        elif self.kind == "vflip":
            out = x[::-1, :, :]
        elif self.kind == "rot90":
            out = np.rot90(x, self.k % 4, axes=(0, 1))
        else:
            out = np.roll(x, (self.dy, self.dx), axis=(0, 1))
        return np.ascontiguousarray(out)

    def inverse(self, x):
        x = np.asarray(x)
        self._check(x)
        if self.kind in ("identity", "hflip", "vflip"):
            return self.apply(x)
        if self.kind == "rot90":
            return np.ascontiguousarray(np.rot90(x, -(self.k % 4), axes=(0, 1)))
        return np.ascontiguousarray(np.roll(x, (-self.dy, -self.dx), axis=(0, 1)))


def apply_transform(f: Transform, x):
    return f.apply(x)


def apply_inverse(f: Transform, x):
    return f.inverse(x)


IDENTITY = Transform("identity")
HFLIP = Transform("hflip")
VFLIP = Transform("vflip")


class TransformGroup:
    """Ordered, non-empty list of transforms, cycled round-robin by step counter."""

    def __init__(self, transforms: Sequence[Transform]):
        transforms = tuple(transforms)
        if not transforms:
            raise ValueError("a transform group needs at least one element")
        self.transforms = transforms

    def __len__(self):
        return len(self.transforms)

    def __iter__(self):
        return iter(self.transforms)

    def __repr__(self):
        return f"TransformGroup({'+'.join(t.name for t in self.transforms)})"

    @property
    def name(self) -> str:
        return "+".join(t.name for t in self.transforms)


def next_transform(group: TransformGroup, step_index: int) -> Transform:
    """Element used on the ``step_index``-th equivariant step (0-based)."""
    return group.transforms[int(step_index) % len(group)]


def parse_group(spec: str) -> TransformGroup:
    """Parse a group name: ``flip``, ``flip+vflip``, ``rot90``, ``shift:dx,dy``, ``identity``.

    Components are joined with ``+``.
    """
    out = []
    for part in spec.split("+"):
        part = part.strip()
        if part in ("flip", "hflip"):
            out.append(HFLIP)
        elif part == "vflip":
            out.append(VFLIP)
        elif part == "identity":
            out.append(IDENTITY)
        elif part.startswith("rot90"):
            k = int(part[len("rot90"):].lstrip("x") or 1)
            out.append(Transform("rot90", k=k))
        elif part.startswith("shift:"):
            dx, dy = (int(v) for v in part[len("shift:"):].split(","))
            out.append(Transform("shift", dx=dx, dy=dy))
        else:
            raise ValueError(f"unknown transform {part!r} in group spec {spec!r}")
    return TransformGroup(out)
