"""Parameterized Markov test-distribution families on channel outputs.

Discrete families are tables mapping each length-mu output history to a
class whose conditional row is either pinned by the channel/constraint
or carries one named free parameter.  The erasure column of every BEC
row is pinned to eps (complementary slackness makes that optimal, so no
free erasure mass is exposed).  The BIAWGN family is the three-piece
density with tanh-like shape functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .channels import gaussian_pdf, gaussian_mass
from .constraints import INF, ConstraintSpec

__all__ = [
    "RowSpec",
    "DiscreteMarkovFamily",
    "MissingParameter",
    "ParameterOutOfRange",
    "UnsupportedCombination",
    "InvalidShapeParameters",
    "family_for",
    "conditional_row",
    "PARAM_LO",
    "PARAM_HI",
    "params_to_text",
    "params_from_text",
    "AWGN_PARAM_NAMES",
    "shape_functions",
    "class_f_value",
    "check_class_f",
    "pdf_value",
]

# open parameter box keeping all metrics finite during optimization
PARAM_LO = 1e-9
PARAM_HI = 1.0 - 1e-9


class MissingParameter(KeyError):
    pass


class ParameterOutOfRange(ValueError):
    pass


class UnsupportedCombination(ValueError):
    pass


class InvalidShapeParameters(ValueError):
    pass


@dataclass(frozen=True)
class RowSpec:
    """Conditional-row template for one history class.

    kind 'bec0'      -> [1-eps, eps, 0]
    kind 'bec1'      -> [0, eps, 1-eps]
    kind 'bec'       -> [t(1-eps), eps, (1-t)(1-eps)], t = params[ref]
    kind 'bec_chain' -> same with 1-t = (1-a0)/(1 + ref*(1-a0)), a0 = params['alpha0']
    kind 'bsc'       -> [t, 1-t], t = params[ref]
    """

    kind: str
    ref: str | int | None = None


@dataclass(frozen=True)
class DiscreteMarkovFamily:
    mu: int
    outputs: tuple[str, ...]
    class_of: dict[str, str]          # history -> class id
    rules: dict[str, RowSpec]         # class id -> row template
    free_params: tuple[str, ...]      # ordered free parameter names
    label: str = ""

    def histories(self) -> list[str]:
        return ["".join(t) for t in product(self.outputs, repeat=self.mu)]


def _free_param(params, name):
    # boundary values are legal rows (limit points); the optimizer box
    # (PARAM_LO, PARAM_HI) is what keeps metrics finite during search
    try:
        v = float(params[name])
    except KeyError as exc:
        raise MissingParameter(name) from exc
    if not 0.0 <= v <= 1.0:
        raise ParameterOutOfRange(f"{name}={v} outside [0, 1]")
    return v


def conditional_row(
    fam: DiscreteMarkovFamily, params: dict, history: str
) -> np.ndarray:
    """Instantiate the conditional PMF row q(.|history)."""
    rule = fam.rules[fam.class_of[history]]
    if rule.kind in ("bec0", "bec1", "bec", "bec_chain"):
        try:
            eps = float(params["eps"])
        except KeyError as exc:
            raise MissingParameter("eps") from exc
        if not 0.0 <= eps <= 1.0:
            raise ParameterOutOfRange(f"eps={eps} outside [0, 1]")
        if rule.kind == "bec0":
            return np.array([1.0 - eps, eps, 0.0])
        if rule.kind == "bec1":
            return np.array([0.0, eps, 1.0 - eps])
        if rule.kind == "bec":
            t = _free_param(params, rule.ref)
        else:
            # a_k = (a0 + k a0bar)/(1 + k a0bar); this form keeps tiny a0
            # alive where 1 - a0bar/(1 + k a0bar) would cancel to zero
            a0 = _free_param(params, "alpha0")
            a0bar = 1.0 - a0
            t = (a0 + rule.ref * a0bar) / (1.0 + rule.ref * a0bar)
        return np.array([t * (1.0 - eps), eps, (1.0 - t) * (1.0 - eps)])
    if rule.kind == "bsc":
        t = _free_param(params, rule.ref)
        return np.array([t, 1.0 - t])
    raise ValueError(f"unknown rule kind {rule.kind}")


def _bec_1inf_mu1() -> DiscreteMarkovFamily:
    return DiscreteMarkovFamily(
        mu=1,
        outputs=("0", "?", "1"),
        class_of={"0": "0", "?": "?", "1": "1"},
        rules={
            "0": RowSpec("bec", "beta"),
            "?": RowSpec("bec", "alpha"),
            "1": RowSpec("bec0"),
        },
        free_params=("beta", "alpha"),
        label="bec-(1,inf)-mu1",
    )


def _bec_1inf_mu2() -> DiscreteMarkovFamily:
    class_of = {}
    rules = {"fix0": RowSpec("bec0")}
    names = []
    for h in ("".join(t) for t in product("0?1", repeat=2)):
        if h[1] == "1":
            # y2 = 1 forces x3 = 0 under (1,inf); includes the
            # channel-unreachable history 11 (zero weight)
            class_of[h] = "fix0"
        else:
            name = "a" + h
            class_of[h] = name
            rules[name] = RowSpec("bec", name)
            names.append(name)
    return DiscreteMarkovFamily(
        mu=2, outputs=("0", "?", "1"), class_of=class_of, rules=rules,
        free_params=tuple(names), label="bec-(1,inf)-mu2",
    )


def _bec_12_mu2() -> DiscreteMarkovFamily:
    class_of = {}
    rules = {"fix0": RowSpec("bec0"), "fix1": RowSpec("bec1")}
    names = []
    for h in ("".join(t) for t in product("0?1", repeat=2)):
        if h == "00":
            class_of[h] = "fix1"  # two zeros seen, x3 = 1 under k = 2
        elif h[1] == "1":
            class_of[h] = "fix0"
        else:
            name = "a" + h
            class_of[h] = name
            rules[name] = RowSpec("bec", name)
            names.append(name)
    return DiscreteMarkovFamily(
        mu=2, outputs=("0", "?", "1"), class_of=class_of, rules=rules,
        free_params=tuple(names), label="bec-(1,2)-mu2",
    )


def _bec_12_mu3() -> DiscreteMarkovFamily:
    force_one = {"1?0", "?00", "100", "000"}       # trailing zeros pin x4 = 1
    shared = {"?10", "01?", "0?0", "?1?", "010"}   # all imply x^3 = 010
    free = ("10?", "0??", "?0?", "??0", "1??", "???")
    class_of = {}
    rules = {
        "fix0": RowSpec("bec0"),
        "fix1": RowSpec("bec1"),
        "a010": RowSpec("bec", "a010"),
    }
    names = ["a010"]
    for h in ("".join(t) for t in product("0?1", repeat=3)):
        if h in force_one:
            class_of[h] = "fix1"
        elif h in shared:
            class_of[h] = "a010"
        elif h in free:
            name = "a" + h
            class_of[h] = name
            rules[name] = RowSpec("bec", name)
            names.append(name)
        else:
            # y3 = 1 (or a history containing 11, unreachable) pins x4 = 0
            class_of[h] = "fix0"
    return DiscreteMarkovFamily(
        mu=3, outputs=("0", "?", "1"), class_of=class_of, rules=rules,
        free_params=tuple(names), label="bec-(1,2)-mu3",
    )


def _bec_dinf(d: int) -> DiscreteMarkovFamily:
    """Memory-d family for (d, inf): one parameter, rows chained by erasure
    count k via (1-a_k) = (1-a_0)/(1 + k(1-a_0))."""
    class_of = {}
    rules = {"fix0": RowSpec("bec0")}
    for h in ("".join(t) for t in product("0?1", repeat=d)):
        if "1" in h:
            class_of[h] = "fix0"
        else:
            k = h.count("?")
            cid = f"w{k}"
            class_of[h] = cid
            rules.setdefault(cid, RowSpec("bec_chain", k))
    return DiscreteMarkovFamily(
        mu=d, outputs=("0", "?", "1"), class_of=class_of, rules=rules,
        free_params=("alpha0",), label=f"bec-({d},inf)-mu{d}",
    )


def _bsc_1inf_mu1() -> DiscreteMarkovFamily:
    return DiscreteMarkovFamily(
        mu=1,
        outputs=("0", "1"),
        class_of={"0": "0", "1": "1"},
        rules={"0": RowSpec("bsc", "a"), "1": RowSpec("bsc", "b")},
        free_params=("a", "b"),
        label="bsc-(1,inf)-mu1",
    )


def family_for(
    channel_kind: str, spec: ConstraintSpec, mu: int
) -> DiscreteMarkovFamily:
    """The paper-covered family for (channel kind, constraint, memory)."""
    kind = channel_kind.lower()
    if kind == "bec":
        if spec.d == 1 and spec.k == INF and mu == 1:
            return _bec_1inf_mu1()
        if spec.d == 1 and spec.k == INF and mu == 2:
            return _bec_1inf_mu2()
        if spec.d == 1 and spec.k == 2 and mu == 2:
            return _bec_12_mu2()
        if spec.d == 1 and spec.k == 2 and mu == 3:
            return _bec_12_mu3()
        if spec.k == INF and spec.d >= 1 and mu == spec.d:
            return _bec_dinf(spec.d)
    elif kind == "bsc":
        if spec.d == 1 and spec.k == INF and mu == 1:
            return _bsc_1inf_mu1()
    raise UnsupportedCombination(f"({channel_kind}, {spec}, mu={mu})")


def params_to_text(params: dict) -> str:
    """Flat name=value serialization (one entry per line, repr floats)."""
    return "".join(f"{k}={params[k]!r}\n" for k in sorted(params))


def params_from_text(text: str) -> dict:
    params = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, value = line.partition("=")
        params[name.strip()] = float(value)
    return params


# ---------------------------------------------------------------------------
# BIAWGN memory-1 family: three-piece conditional density
# ---------------------------------------------------------------------------

AWGN_PARAM_NAMES = tuple(
    f"{g}{i}" for g in ("d", "w", "a", "b") for i in range(1, 5)
)


def class_f_value(p1, p2, p3, p4, y1, sigma):
    """(p1 e^t + p2 e^-t) / (p3 e^t + p4 e^-t) at t = y1/sigma^2, overflow-safe."""
    t = np.asarray(y1, dtype=float) / (sigma * sigma)
    e = np.exp(-2.0 * np.abs(t))
    pos = t >= 0
    num = np.where(pos, p1 + p2 * e, p1 * e + p2)
    den = np.where(pos, p3 + p4 * e, p3 * e + p4)
    out = num / den
    return float(out) if np.isscalar(y1) else out


def check_class_f(params: dict) -> None:
    """Feasibility of the 16-parameter shape box.

    d-numerators: d1 in [0,1], d2 in [-1,1]; all other parameters in
    [0,1]; denominators positive; and the weight budget
    max(a1/a3, a2/a4) + max(b1/b3, b2/b4) <= 1 which keeps a + b <= 1
    for every y1.
    """
    p = {k: float(params[k]) for k in AWGN_PARAM_NAMES}
    if not -1.0 <= p["d2"] <= 1.0:
        raise InvalidShapeParameters(f"d2={p['d2']} outside [-1, 1]")
    for k in AWGN_PARAM_NAMES:
        if k == "d2":
            continue
        if not 0.0 <= p[k] <= 1.0:
            raise InvalidShapeParameters(f"{k}={p[k]} outside [0, 1]")
    for g in ("d", "w", "a", "b"):
        if p[f"{g}3"] <= 0 or p[f"{g}4"] <= 0:
            raise InvalidShapeParameters(f"{g}3/{g}4 must be positive")
    if p["w1"] <= 0 or p["w2"] <= 0:
        raise InvalidShapeParameters("width numerators must be positive")
    budget = max(p["a1"] / p["a3"], p["a2"] / p["a4"]) + max(
        p["b1"] / p["b3"], p["b2"] / p["b4"]
    )
    if budget > 1.0 + 1e-12:
        raise InvalidShapeParameters(f"weight budget {budget} exceeds 1")


def shape_functions(params: dict, y1, sigma: float):
    """(d1, d2, a, b, c, width) of the conditional density at y1."""
    d1 = class_f_value(params["d1"], params["d2"], params["d3"], params["d4"], y1, sigma)
    width = class_f_value(params["w1"], params["w2"], params["w3"], params["w4"], y1, sigma)
    a = class_f_value(params["a1"], params["a2"], params["a3"], params["a4"], y1, sigma)
    b = class_f_value(params["b1"], params["b2"], params["b3"], params["b4"], y1, sigma)
    return d1, d1 - width, a, b, 1.0 - a - b, width


def pdf_value(sigma: float, params: dict, y1: float, y2: float) -> float:
    """Three-branch conditional density q(y2 | y1)."""
    check_class_f(params)
    d1, d2, a, b, c, width = shape_functions(params, y1, sigma)
    if y2 < d2:
        return a * gaussian_pdf(-1.0, sigma, y2) / gaussian_mass(-1.0, sigma, -math.inf, d2)
    if y2 <= d1:
        return b / width
    return c * gaussian_pdf(1.0, sigma, y2) / gaussian_mass(1.0, sigma, d1, math.inf)
