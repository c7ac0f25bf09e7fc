"""Paired comparisons across matched seeds."""

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.stats import binomtest


@dataclass
class SignTest:
    """One-sided paired sign test of ``a < b``; ties are dropped."""

    label: str
    wins: int
    losses: int
    ties: int
    p_value: float
    mean_a: float
    mean_b: float
    deltas: List[float]

    @property
    def n(self) -> int:
        return self.wins + self.losses + self.ties

    def significant(self, alpha=0.05) -> bool:
        return self.p_value < alpha

    def to_dict(self):
        return {
            "label": self.label,
            "wins": self.wins,
            "losses": self.losses,
            "ties": self.ties,
            "p_value": self.p_value,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "mean_delta": float(np.mean(self.deltas)) if self.deltas else float("nan"),
            "deltas": list(self.deltas),
        }

    def summary(self, alpha=0.05) -> str:
        verdict = "significant" if self.significant(alpha) else "NOT significant"
        return (
            f"{self.label}: {self.wins}/{self.wins + self.losses} paired wins "
            f"(ties {self.ties}), mean {self.mean_a:.6g} vs {self.mean_b:.6g}, "
            f"p={self.p_value:.3g} [{verdict} at {alpha}]"
        )


def sign_test_less(a, b, label="") -> SignTest:
    """Test whether ``a`` tends to be smaller than ``b`` over paired samples."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    d = a - b
    wins = int(np.sum(d < 0))
    losses = int(np.sum(d > 0))
    ties = int(d.size - wins - losses)
    n = wins + losses
    p = binomtest(wins, n, 0.5, alternative="greater").pvalue if n else 1.0
    return SignTest(label, wins, losses, ties, float(p), float(a.mean()), float(b.mean()), d.tolist())
