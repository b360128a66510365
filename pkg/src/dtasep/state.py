"""The three equivalent views of an exclusion configuration.

A configuration over a contiguous label window can be read as labeled
particle positions (strictly increasing), as the gaps between consecutive
particles, or as the height function h_i = position_i - i (nondecreasing).
Gap i sits between particles i and i+1; equivalently gap_i = h_{i+1} - h_i.
Conversions are exact in 64-bit integers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np


def _as_int64(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional sequence")
    return arr


@dataclass(frozen=True, eq=False)
class ParticleConfig:
    """Positions indexed by particle label over [first_label, last_label]."""

    first_label: int
    positions: np.ndarray = dc_field(repr=False)
    origin_label: int = 0

    def __post_init__(self):
        object.__setattr__(self, "positions", _as_int64(self.positions))
        self.positions.setflags(write=False)
        if len(self.positions) == 0:
            raise ValueError("a configuration needs at least one particle")
        if np.any(np.diff(self.positions) < 1):
            raise ValueError("positions must be strictly increasing with label")

    @property
    def last_label(self) -> int:
        return self.first_label + len(self.positions) - 1

    def labels(self) -> np.ndarray:
        return np.arange(self.first_label, self.first_label + len(self.positions))

    def position(self, label: int) -> int:
        if not self.first_label <= label <= self.last_label:
            raise KeyError(f"label {label} outside [{self.first_label}, {self.last_label}]")
        return int(self.positions[label - self.first_label])

    def __len__(self) -> int:
        return len(self.positions)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ParticleConfig)
                and self.first_label == other.first_label
                and np.array_equal(self.positions, other.positions))


@dataclass(frozen=True, eq=False)
class GapConfig:
    """Gaps between consecutive particles, plus the anchor that fixes the embedding.

    gaps[k] is the vacancy count between particles first_label+k and
    first_label+k+1; anchor = (label, position) pins the lowest particle.
    """

    first_label: int
    gaps: np.ndarray = dc_field(repr=False)
    anchor: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "gaps", _as_int64(self.gaps))
        self.gaps.setflags(write=False)
        if np.any(self.gaps < 0):
            raise ValueError("gaps must be nonnegative")
        if self.anchor[0] != self.first_label:
            raise ValueError("anchor label must equal first_label")

    def __len__(self) -> int:
        return len(self.gaps)

    def __eq__(self, other) -> bool:
        return (isinstance(other, GapConfig)
                and self.first_label == other.first_label
                and tuple(self.anchor) == tuple(other.anchor)
                and np.array_equal(self.gaps, other.gaps))


@dataclass(frozen=True, eq=False)
class HeightConfig:
    """Height view h_i = position_i - i over a label window."""

    first_label: int
    heights: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "heights", _as_int64(self.heights))
        self.heights.setflags(write=False)
        if len(self.heights) == 0:
            raise ValueError("a configuration needs at least one particle")
        if np.any(np.diff(self.heights) < 0):
            raise ValueError("heights must be nondecreasing with label")

    @property
    def last_label(self) -> int:
        return self.first_label + len(self.heights) - 1

    def __len__(self) -> int:
        return len(self.heights)

    def __eq__(self, other) -> bool:
        return (isinstance(other, HeightConfig)
                and self.first_label == other.first_label
                and np.array_equal(self.heights, other.heights))


def particles_to_gaps(cfg: ParticleConfig) -> GapConfig:
    """Gap view: gaps[i] = position_{i+1} - position_i - 1.

    A single-particle configuration yields an empty gap sequence carrying
    only the anchor.
    """
    gaps = np.diff(cfg.positions) - 1
    return GapConfig(first_label=cfg.first_label, gaps=gaps,
                     anchor=(cfg.first_label, int(cfg.positions[0])))


def gaps_to_particles(cfg: GapConfig) -> ParticleConfig:
    """Rebuild positions from the anchor by cumulative sums of gap + 1."""
    label0, pos0 = cfg.anchor
    steps = np.concatenate(([pos0], cfg.gaps + 1))
    return ParticleConfig(first_label=label0, positions=np.cumsum(steps))


def particles_to_heights(cfg: ParticleConfig) -> HeightConfig:
    """Height view h_i = position_i - i."""
    return HeightConfig(first_label=cfg.first_label,
                        heights=cfg.positions - cfg.labels())


def heights_to_particles(cfg: HeightConfig) -> ParticleConfig:
    """Exact inverse of `particles_to_heights`."""
    labels = np.arange(cfg.first_label, cfg.first_label + len(cfg.heights))
    return ParticleConfig(first_label=cfg.first_label,
                          positions=cfg.heights + labels)


def write_snapshot_csv(cfg: ParticleConfig, path) -> None:
    """Snapshot export: one row per label with position, gap, and height.

    The last stored label has no gap ahead of it; that cell is left empty.
    """
    gaps = particles_to_gaps(cfg).gaps
    heights = particles_to_heights(cfg).heights
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "position", "gap", "height"])
        for i, lab in enumerate(cfg.labels()):
            gap = int(gaps[i]) if i < len(gaps) else ""
            w.writerow([int(lab), int(cfg.positions[i]), gap, int(heights[i])])
