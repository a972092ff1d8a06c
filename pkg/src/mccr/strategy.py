"""Behavioral strategies keyed by infoset key."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np


class BehavioralStrategy:
    """Map from infoset key to a probability vector.

    Infosets without an entry play uniformly at random.
    """

    def __init__(self, table: Mapping[str, Iterable[float]] | None = None):
        self.table: dict[str, np.ndarray] = {}
        if table:
            for k, v in table.items():
                self.table[k] = np.asarray(v, dtype=float)

    def probs(self, key: str, n: int) -> np.ndarray:
        p = self.table.get(key)
        if p is None:
            return np.full(n, 1.0 / n)
        if len(p) != n:
            raise ValueError(f"infoset {key!r}: expected {n} actions, got {len(p)}")
        return p

    def __getitem__(self, key: str) -> np.ndarray:
        return self.table[key]

    def __setitem__(self, key: str, value) -> None:
        self.table[key] = np.asarray(value, dtype=float)

    def __contains__(self, key: str) -> bool:
        return key in self.table

    def __len__(self) -> int:
        return len(self.table)

    def keys(self):
        return self.table.keys()

    def items(self):
        return self.table.items()

    def update(self, other: "BehavioralStrategy | Mapping") -> None:
        items = other.items()
        for k, v in items:
            self[k] = v

    def copy(self) -> "BehavioralStrategy":
        return BehavioralStrategy({k: v.copy() for k, v in self.table.items()})

    def validate(self, atol: float = 1e-9) -> None:
        for k, p in self.table.items():
            if np.any(p < -atol) or abs(p.sum() - 1.0) > atol:
                raise ValueError(f"infoset {k!r} is not a distribution: {p}")

    def dumps(self) -> str:
        """Tab-separated ``key<TAB>p0,p1,...`` lines, sorted by key."""
        lines = []
        for k in sorted(self.table):
            lines.append(k + "\t" + ",".join(repr(float(x)) for x in self.table[k]))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def loads(cls, text: str) -> "BehavioralStrategy":
        out = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, probs = line.rpartition("\t")
            out[key] = [float(x) for x in probs.split(",")]
        return out

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.dumps())

    @classmethod
    def load(cls, path) -> "BehavioralStrategy":
        with open(path) as f:
            return cls.loads(f.read())


def uniform_strategy() -> BehavioralStrategy:
    return BehavioralStrategy()
