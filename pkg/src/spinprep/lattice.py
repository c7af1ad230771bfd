"""Lattice geometry: site count, local dimension and the interaction graph."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class LatticeSpec:
    """n sites of local dimension d, coupled along an undirected edge list.

    Sites are 1-based; edges are unordered pairs (j, k) with 1 <= j < k <= n.
    """

    n: int
    d: int = 2
    edges: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"site count must be positive, got {self.n}")
        if self.d < 2:
            raise ValueError(f"local dimension must be >= 2, got {self.d}")
        norm = []
        seen = set()
        for (j, k) in self.edges:
            if j == k:
                raise ValueError(f"self-loop edge ({j},{k}) not allowed")
            a, b = (j, k) if j < k else (k, j)
            if not (1 <= a and b <= self.n):
                raise ValueError(f"edge ({j},{k}) out of range for n={self.n}")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({j},{k})")
            seen.add((a, b))
            norm.append((a, b))
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def dim(self) -> int:
        """Hilbert-space dimension d**n."""
        return self.d ** self.n


def chain(n: int, d: int = 2) -> LatticeSpec:
    """Open chain with nearest-neighbor edges (j, j+1), j = 1..n-1."""
    return LatticeSpec(n=n, d=d, edges=tuple((j, j + 1) for j in range(1, n)))
