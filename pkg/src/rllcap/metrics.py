"""Edge metrics, walk/cycle metrics, KKT residuals and the finite-N oracle.

The metric of the edge leaving vertex x_1..x_mu with label x_{mu+1} is
the channel-likelihood-weighted relative entropy between the channel row
for x_{mu+1} and the conditional test row, summed over every length-mu
output history (zero-probability histories contribute 0 by the 0*log
convention).  All values in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .channels import DiscreteChannel, relative_entropy
from .constraints import Cycle, StateDiagram, decompose_walk, is_valid_word
from .families import DiscreteMarkovFamily, conditional_row

__all__ = [
    "EdgeMetricTable",
    "KktResidual",
    "TooLarge",
    "edge_metric",
    "metric_table",
    "walk_metric",
    "cycle_metric",
    "kkt_residuals",
    "finite_n_divergence",
]

ENUMERATION_BUDGET = 10**7


class TooLarge(ValueError):
    pass


def edge_metric(
    fam: DiscreteMarkovFamily,
    params: dict,
    channel: DiscreteChannel,
    edge_word: str,
) -> float:
    """T(x_1 .. x_{mu+1}) in bits; +inf when a needed test entry is zero."""
    mu = fam.mu
    if len(edge_word) != mu + 1:
        raise ValueError(f"edge word {edge_word!r} must have length mu+1={mu + 1}")
    x_hist = [int(b) for b in edge_word[:mu]]
    x_next = int(edge_word[mu])
    p_next = channel.row(x_next)
    total = 0.0
    for hist in product(fam.outputs, repeat=mu):
        w = 1.0
        for y, x in zip(hist, x_hist):
            w *= channel.prob(y, x)
            if w == 0.0:
                break
        if w == 0.0:
            continue
        q_row = conditional_row(fam, params, "".join(hist))
        d = relative_entropy(p_next, q_row)
        if math.isinf(d):
            return math.inf
        total += w * d
    return total


@dataclass(frozen=True)
class EdgeMetricTable:
    """Metric values for every edge word of one diagram."""

    mu: int
    values: dict[str, float] = field(repr=False)

    def __getitem__(self, edge_word: str) -> float:
        return self.values[edge_word]


def metric_table(
    fam: DiscreteMarkovFamily,
    params: dict,
    channel: DiscreteChannel,
    g: StateDiagram,
) -> EdgeMetricTable:
    if fam.mu != g.mu:
        raise ValueError(f"family mu={fam.mu} does not match diagram mu={g.mu}")
    return EdgeMetricTable(
        mu=g.mu,
        values={w: edge_metric(fam, params, channel, w) for w in g.edge_words()},
    )


def walk_metric(table: EdgeMetricTable, word: str) -> float:
    """Sum of edge metrics along the walk of `word` (0 for empty walks)."""
    mu = table.mu
    return sum(
        table[word[i : i + mu + 1]] for i in range(len(word) - mu)
    )


def cycle_metric(table: EdgeMetricTable, c: Cycle) -> float:
    return walk_metric(table, c.word)


@dataclass(frozen=True)
class KktResidual:
    """Length-normalized cycle metrics against the first (canonical) cycle."""

    normalized: tuple[float, ...]
    residuals: tuple[float, ...]
    common_value: float

    @property
    def max_abs(self) -> float:
        return max((abs(r) for r in self.residuals), default=0.0)


def kkt_residuals(table: EdgeMetricTable, cycles: list[Cycle]) -> KktResidual:
    if not cycles:
        raise ValueError("need at least one cycle")
    norm = tuple(cycle_metric(table, c) / c.length for c in cycles)
    return KktResidual(
        normalized=norm,
        residuals=tuple(t - norm[0] for t in norm),
        common_value=norm[0],
    )


def _initial_conditionals(init: dict[str, float], outputs, mu: int):
    """q(y_n | y^{n-1}) for n = 1..mu from the initial distribution."""
    marg = {"": 1.0}
    for n in range(1, mu + 1):
        nxt = {}
        for hist in product(outputs, repeat=n):
            h = "".join(hist)
            nxt[h] = sum(
                init["".join(hist) + "".join(rest)]
                for rest in product(outputs, repeat=mu - n)
            )
        marg.update(nxt)
    def cond(prefix: str, y: str) -> float:
        denom = marg[prefix]
        return marg[prefix + y] / denom if denom > 0 else 0.0
    return cond


def finite_n_divergence(
    fam: DiscreteMarkovFamily,
    params: dict,
    channel: DiscreteChannel,
    word: str,
    init: dict[str, float] | None = None,
    check: bool = True,
) -> float:
    """Exact D(p_{Y^N|X^N}(.|x^N) || q_{Y^N}) in bits, computed two ways.

    (a) direct sum over Y^N and (b) the chain-rule decomposition into
    initial terms plus edge metrics along the walk; asserts both agree
    to 1e-10 when `check` is set.  Deliberately exhaustive: this is an
    oracle for small N only.
    """
    mu = fam.mu
    outputs = fam.outputs
    n = len(word)
    n_out = len(outputs)
    if n < mu:
        raise TooLarge(f"word shorter than mu={mu}")
    if check and n_out**n > ENUMERATION_BUDGET:
        raise TooLarge(f"|Y|^N = {n_out**n} exceeds budget {ENUMERATION_BUDGET}")
    if init is None:
        init = {
            "".join(h): n_out**-mu for h in product(outputs, repeat=mu)
        }
    x = [int(b) for b in word]

    # (b) initial terms + edge metrics
    cond = _initial_conditionals(init, outputs, mu)
    decomposed = 0.0
    for step in range(mu):
        for hist in product(outputs, repeat=step):
            w = 1.0
            for y, xi in zip(hist, x):
                w *= channel.prob(y, xi)
            if w == 0.0:
                continue
            prefix = "".join(hist)
            inner = 0.0
            for y in outputs:
                py = channel.prob(y, x[step])
                if py == 0.0:
                    continue
                qy = cond(prefix, y)
                if qy == 0.0:
                    return math.inf
                inner += py * math.log2(py / qy)
            decomposed += w * inner
    for i in range(n - mu):
        t = edge_metric(fam, params, channel, word[i : i + mu + 1])
        if math.isinf(t):
            return math.inf
        decomposed += t

    if not check:
        return decomposed

    # (a) direct sum over Y^N with running products
    rows = {
        h: conditional_row(fam, params, "".join(h))
        for h in product(outputs, repeat=mu)
    }
    direct = 0.0
    for ys in product(range(n_out), repeat=n):
        p = 1.0
        for yi, xi in zip(ys, x):
            p *= channel.rows[xi][yi]
            if p == 0.0:
                break
        if p == 0.0:
            continue
        q = init["".join(outputs[yi] for yi in ys[:mu])]
        for i in range(mu, n):
            hist = tuple(outputs[yi] for yi in ys[i - mu : i])
            q *= rows[hist][ys[i]]
            if q == 0.0:
                break
        if q == 0.0:
            direct = math.inf
            break
        direct += p * math.log2(p / q)

    assert abs(direct - decomposed) <= 1e-10, (direct, decomposed)
    return decomposed
