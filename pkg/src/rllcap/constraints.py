"""Runlength-constrained sequences, their state diagrams and cycle structure.

A (d, k) constraint admits binary words in which every zero-run lying
strictly between two ones has length in [d, k].  Runs touching a word
boundary are only bounded above by k (a word may begin or end mid-run).
k may be infinite (math.inf).  Words are plain strings of '0'/'1' read
left to right.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

__all__ = [
    "INF",
    "ConstraintSpec",
    "StateDiagram",
    "Cycle",
    "WalkDecomposition",
    "MemoryTooSmall",
    "InvalidWord",
    "is_valid_word",
    "valid_words",
    "build_state_diagram",
    "enumerate_cycles",
    "decompose_walk",
    "noiseless_capacity",
    "bisect_root",
]

INF = math.inf


class MemoryTooSmall(ValueError):
    """State-diagram memory below the (d, k) threshold."""


class InvalidWord(ValueError):
    """Word violates the (d, k) constraint."""


@dataclass(frozen=True)
class ConstraintSpec:
    """The pair (d, k); k == math.inf marks the unbounded case."""

    d: int
    k: float

    def __post_init__(self):
        if self.d < 0 or self.d != int(self.d):
            raise ValueError(f"d must be a non-negative integer, got {self.d}")
        if self.k != INF and (self.k != int(self.k) or self.k <= self.d):
            raise ValueError(f"k must be an integer > d or inf, got {self.k}")

    @property
    def finite(self) -> bool:
        return self.k != INF

    def min_memory(self) -> int:
        """Smallest admissible state-diagram memory (at least 1)."""
        return max(1, int(self.k) if self.finite else self.d)

    def __str__(self):
        return f"({self.d},{'inf' if not self.finite else int(self.k)})"


def is_valid_word(word: str, spec: ConstraintSpec) -> bool:
    """True iff `word` satisfies the (d, k) constraint.

    Interior zero-runs must have length in [d, k]; leading and trailing
    partial runs are only bounded above by k.
    """
    ones = [i for i, b in enumerate(word) if b == "1"]
    n = len(word)
    if not ones:
        return not spec.finite or n <= spec.k
    if spec.finite:
        if ones[0] > spec.k or (n - 1 - ones[-1]) > spec.k:
            return False
    for a, b in zip(ones, ones[1:]):
        gap = b - a - 1
        if gap < spec.d or (spec.finite and gap > spec.k):
            return False
    return True


def valid_words(spec: ConstraintSpec, n: int) -> list[str]:
    """All valid length-n words in lexicographic order."""
    out: list[str] = []

    def extend(prefix: str, seen_one: bool, run: int):
        if len(prefix) == n:
            out.append(prefix)
            return
        if not spec.finite or run < spec.k:
            extend(prefix + "0", seen_one, run + 1)
        if not seen_one or run >= spec.d:
            extend(prefix + "1", True, 0)

    extend("", False, 0)
    return out


@dataclass(frozen=True)
class StateDiagram:
    """Memory-mu state diagram: vertices are valid length-mu words.

    An edge labelled b runs from v to v[1:] + b whenever v + b is a valid
    length-(mu+1) word.  Supported memory range is mu <= 8 (vertex count
    grows like 2^mu; the cycle search is exponential beyond that).
    """

    constraint: ConstraintSpec
    mu: int
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str, str], ...]  # (source, label bit, target)
    succ: dict[str, tuple[tuple[str, str], ...]] = field(repr=False)

    def edge_words(self) -> list[str]:
        """(mu+1)-bit words, one per edge, in edge order."""
        return [src + bit for src, bit, _ in self.edges]


MAX_MU = 8


def build_state_diagram(spec: ConstraintSpec, mu: int) -> StateDiagram:
    if mu < spec.min_memory():
        raise MemoryTooSmall(
            f"mu={mu} below threshold {spec.min_memory()} for {spec}"
        )
    if mu > MAX_MU:
        raise ValueError(f"mu={mu} above supported cap {MAX_MU}")
    verts = valid_words(spec, mu)
    edges = []
    succ: dict[str, list[tuple[str, str]]] = {v: [] for v in verts}
    for v in verts:
        for bit in "01":
            if is_valid_word(v + bit, spec):
                w = v[1:] + bit
                edges.append((v, bit, w))
                succ[v].append((bit, w))
    return StateDiagram(
        constraint=spec,
        mu=mu,
        vertices=tuple(verts),
        edges=tuple(edges),
        succ={v: tuple(s) for v, s in succ.items()},
    )


@dataclass(frozen=True)
class Cycle:
    """Simple directed cycle, stored in its rotation-minimal form.

    `vertices` starts at the lexicographically smallest vertex (vertices
    of a simple cycle are distinct, so that rotation is unique) and
    `word` is the associated valid word of length mu + len(vertices).
    """

    vertices: tuple[str, ...]
    word: str

    @property
    def length(self) -> int:
        return len(self.vertices)


def _cycle_from_vertices(verts: tuple[str, ...]) -> Cycle:
    # rotate so the smallest vertex label leads
    i = verts.index(min(verts))
    rot = verts[i:] + verts[:i]
    labels = [v[-1] for v in rot[1:]] + [rot[0][-1]]
    return Cycle(vertices=rot, word=rot[0] + "".join(labels))


def enumerate_cycles(g: StateDiagram) -> list[Cycle]:
    """Every simple directed cycle of g exactly once, in deterministic order.

    Backtracking search rooted at each vertex in sorted order; a cycle is
    reported only from its smallest vertex, so each equivalence class
    under rotation appears once.
    """
    order = {v: i for i, v in enumerate(sorted(g.vertices))}
    cycles: list[Cycle] = []

    def dfs(root: str, v: str, path: list[str], on_path: set[str]):
        for _, w in g.succ[v]:
            if w == root:
                cycles.append(_cycle_from_vertices(tuple(path)))
            elif order[w] > order[root] and w not in on_path:
                path.append(w)
                on_path.add(w)
                dfs(root, w, path, on_path)
                on_path.discard(w)
                path.pop()

    for root in sorted(g.vertices):
        dfs(root, root, [root], {root})
    cycles.sort(key=lambda c: (c.length, c.vertices))
    return cycles


@dataclass(frozen=True)
class WalkDecomposition:
    """Walk split into simple cycles (with multiplicity) plus a short path."""

    cycles: Counter
    residual_path: tuple[str, ...]
    source_length: int

    def total_cycle_edges(self) -> int:
        return sum(c.length * m for c, m in self.cycles.items())


def decompose_walk(word: str, g: StateDiagram) -> WalkDecomposition:
    """Iterated first-cycle excision of the walk corresponding to `word`.

    Walk the vertex sequence until a vertex repeats, cut out the cycle
    between its two occurrences, and continue on the spliced walk.  Each
    excised cycle is simple because the cut happens at the first repeat.
    """
    mu = g.mu
    n = len(word)
    if not is_valid_word(word, g.constraint):
        raise InvalidWord(word)
    if n <= mu:
        raise InvalidWord(f"word length {n} must exceed mu={mu}")
    walk = [word[i : i + mu] for i in range(n - mu + 1)]
    cycles: Counter = Counter()
    while True:
        seen: dict[str, int] = {}
        cut = None
        for i, v in enumerate(walk):
            if v in seen:
                cut = (seen[v], i)
                break
            seen[v] = i
        if cut is None:
            break
        i1, i2 = cut
        cycles[_cycle_from_vertices(tuple(walk[i1:i2]))] += 1
        walk = walk[: i1 + 1] + walk[i2 + 1 :]
    dec = WalkDecomposition(
        cycles=cycles, residual_path=tuple(walk), source_length=n
    )
    assert dec.total_cycle_edges() + (len(walk) - 1) == n - mu
    return dec


def bisect_root(f, lo: float, hi: float, tol: float = 1e-13) -> float:
    """Bisection on a sign-changing bracket; exits early on an exact zero."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break  # interval at floating-point resolution
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def noiseless_capacity(spec: ConstraintSpec) -> float:
    """log2(1/lambda) where lambda in (0,1) solves z^(k+2) - z^(d+1) - z + 1 = 0.

    For k = inf the z^(k+2) term is dropped.  The polynomial changes sign
    exactly once on (0, 1) for legal (d, k), so plain bisection applies.
    """
    d, k = spec.d, spec.k

    if spec.finite:
        def f(z):
            return z ** (int(k) + 2) - z ** (d + 1) - z + 1.0
    else:
        def f(z):
            return -(z ** (d + 1)) - z + 1.0

    lam = bisect_root(f, 1e-12, 1.0 - 1e-12)
    return math.log2(1.0 / lam)
