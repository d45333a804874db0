"""Array-backed union-find with path halving."""

import numpy as np


class UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return int(i)

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic: smaller index wins as root
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb

    def labels(self) -> np.ndarray:
        """Canonical root label (smallest member index) per element."""
        return np.array([self.find(i) for i in range(len(self.parent))],
                        dtype=np.int64)

    def n_classes(self) -> int:
        return len(np.unique(self.labels()))
