"""Per-class clipping thresholds and the shipped dataset presets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import MissingThreshold


@dataclass(frozen=True)
class ThresholdConfig:
    """Clipping distance in meters for each class id."""

    tau: Mapping[int, float]

    def __post_init__(self):
        clean = {}
        for cls, value in dict(self.tau).items():
            cls = int(cls)
            value = float(value)
            if cls < 0:
                raise MissingThreshold(f"threshold declared for negative class id {cls}")
            if not math.isfinite(value) or value <= 0.0:
                raise MissingThreshold(
                    f"threshold for class {cls} must be finite and > 0, got {value!r}"
                )
            clean[cls] = value
        object.__setattr__(self, "tau", MappingProxyType(dict(sorted(clean.items()))))

    def __getitem__(self, cls: int) -> float:
        try:
            return self.tau[int(cls)]
        except KeyError:
            raise MissingThreshold(f"no threshold for class {cls}") from None

    def covers(self, classes) -> bool:
        return all(int(c) in self.tau for c in classes)

    def as_array(self, n_classes: int) -> np.ndarray:
        """Dense lookup table indexed by class id; every class must be covered."""
        missing = [c for c in range(n_classes) if c not in self.tau]
        if missing:
            raise MissingThreshold(f"no threshold for class(es) {missing}")
        return np.array([self.tau[c] for c in range(n_classes)], dtype=np.float64)

    @classmethod
    def from_sequence(cls, values) -> "ThresholdConfig":
        return cls({i: v for i, v in enumerate(values)})


# Values in meters, class order as listed for each dataset.
PRESETS = {
    "dales": (
        ("ground", 2.0),
        ("vegetation", 3.0),
        ("buildings", 10.0),
        ("cars", 5.0),
        ("trucks", 5.0),
        ("power_lines", 5.0),
        ("fences", 5.0),
        ("poles", 5.0),
    ),
    "fractal": (
        ("ground", 2.0),
        ("vegetation", 3.0),
        ("building", 10.0),
        ("water", 10.0),
        ("bridge", 5.0),
        ("permanent_structure", 10.0),
        ("other", 10.0),
    ),
    "tracasa-pna20": (
        ("ground", 2.0),
        ("low_vegetation", 2.0),
        ("medium_high_vegetation", 5.0),
        ("building", 10.0),
        ("vehicle", 5.0),
    ),
}


def preset(name: str) -> tuple[tuple[str, ...], ThresholdConfig]:
    """Class names and thresholds for one of the bundled datasets."""
    try:
        rows = PRESETS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    names = tuple(n for n, _ in rows)
    return names, ThresholdConfig.from_sequence([t for _, t in rows])
