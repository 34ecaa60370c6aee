import math
from itertools import product

import numpy as np
import pytest
from scipy.integrate import quad

from rllcap.constraints import INF, ConstraintSpec
from rllcap.families import (
    AWGN_PARAM_NAMES,
    InvalidShapeParameters,
    MissingParameter,
    ParameterOutOfRange,
    UnsupportedCombination,
    check_class_f,
    class_f_value,
    conditional_row,
    family_for,
    params_from_text,
    params_to_text,
    pdf_value,
    shape_functions,
)

S1INF = ConstraintSpec(1, INF)
S12 = ConstraintSpec(1, 2)


def test_eq4_family_structure():
    fam = family_for("bec", S1INF, 1)
    assert fam.mu == 1
    assert set(fam.histories()) == {"0", "?", "1"}
    row = conditional_row(fam, {"eps": 0.2, "alpha": 0.5, "beta": 0.9}, "?")
    assert np.allclose(row, [0.4, 0.2, 0.4])
    fixed = conditional_row(fam, {"eps": 0.2, "alpha": 0.1, "beta": 0.1}, "1")
    assert np.allclose(fixed, [0.8, 0.2, 0.0])


def test_fixed_rows_ignore_parameters():
    fam = family_for("bec", S12, 2)
    rows = [conditional_row(fam, {"eps": 0.3, **{k: v for k in fam.free_params}}, "00")
            for v in (0.1, 0.9)]
    assert np.allclose(rows[0], rows[1])
    assert np.allclose(rows[0], [0.0, 0.3, 0.7])


def test_table3_shared_class():
    fam = family_for("bec", S12, 3)
    shared = {"?10", "01?", "0?0", "?1?", "010"}
    assert {h for h, cid in fam.class_of.items() if cid == "a010"} == shared
    assert set(fam.free_params) == {
        "a010", "a10?", "a0??", "a?0?", "a??0", "a1??", "a???"
    }
    # every history classified exactly once
    assert set(fam.class_of) == set(fam.histories())


def test_bsc_family():
    fam = family_for("bsc", S1INF, 1)
    row = conditional_row(fam, {"a": 0.7, "b": 0.2}, "0")
    assert np.allclose(row, [0.7, 0.3])
    row = conditional_row(fam, {"a": 0.7, "b": 0.2}, "1")
    assert np.allclose(row, [0.2, 0.8])


def test_dk_infinity_chain():
    fam = family_for("bec", ConstraintSpec(2, INF), 2)
    eps = 0.4
    row = conditional_row(fam, {"eps": eps, "alpha0": 0.5}, "??")
    # (1-a2) = (1-a0)/(1 + 2(1-a0)) = 0.25
    assert np.allclose(row, [0.75 * (1 - eps), eps, 0.25 * (1 - eps)])
    fixed = conditional_row(fam, {"eps": eps, "alpha0": 0.5}, "1?")
    assert np.allclose(fixed, [1 - eps, eps, 0.0])


def test_unsupported_combination():
    with pytest.raises(UnsupportedCombination):
        family_for("bec", ConstraintSpec(1, 3), 3)
    with pytest.raises(UnsupportedCombination):
        family_for("bsc", S12, 2)


def test_parameter_errors():
    fam = family_for("bec", S1INF, 1)
    with pytest.raises(MissingParameter):
        conditional_row(fam, {"eps": 0.2, "beta": 0.5}, "?")
    with pytest.raises(ParameterOutOfRange):
        conditional_row(fam, {"eps": 0.2, "alpha": 1.4, "beta": 0.5}, "?")
    with pytest.raises(MissingParameter):
        conditional_row(fam, {"alpha": 0.5, "beta": 0.5}, "?")


@pytest.mark.parametrize("kind,spec,mu", [
    ("bec", S1INF, 1),
    ("bec", S1INF, 2),
    ("bec", S12, 2),
    ("bec", S12, 3),
    ("bec", ConstraintSpec(2, INF), 2),
    ("bec", ConstraintSpec(3, INF), 3),
    ("bsc", S1INF, 1),
])
def test_rows_are_pmfs_for_random_parameters(kind, spec, mu):
    fam = family_for(kind, spec, mu)
    rng = np.random.default_rng(7)
    for _ in range(1000 // len(fam.histories()) + 1):
        params = {k: float(rng.uniform(1e-6, 1 - 1e-6))
                  for k in fam.free_params}
        params["eps"] = float(rng.uniform(0, 1))
        for h in fam.histories():
            row = conditional_row(fam, params, h)
            assert np.all(row >= 0)
            assert abs(row.sum() - 1.0) <= 1e-12


def test_params_text_roundtrip():
    params = {"alpha": 0.25, "beta": 1 / 3, "eps": 0.125}
    assert params_from_text(params_to_text(params)) == params


# ---------------------------------------------------------------------------
# piecewise-Gaussian family
# ---------------------------------------------------------------------------

def _feasible_shape(rng):
    p = {
        "d1": rng.uniform(0.0, 1.0), "d2": rng.uniform(-1.0, 1.0),
        "d3": 1.0, "d4": 1.0,
        "w1": rng.uniform(0.1, 1.0), "w2": rng.uniform(0.1, 1.0),
        "w3": 1.0, "w4": 1.0,
        "a1": rng.uniform(0.02, 0.45), "a2": rng.uniform(0.02, 0.45),
        "a3": 1.0, "a4": 1.0,
        "b1": rng.uniform(0.02, 0.45), "b2": rng.uniform(0.02, 0.45),
        "b3": 1.0, "b4": 1.0,
    }
    return p


def test_pdf_normalizes():
    rng = np.random.default_rng(3)
    for _ in range(5):
        sigma = rng.uniform(0.4, 1.2)
        p = _feasible_shape(rng)
        y1 = rng.uniform(-2, 2)
        d1, d2, *_ = shape_functions(p, y1, sigma)
        lo, hi = -1 - 12 * sigma, 1 + 12 * sigma
        total = sum(
            quad(lambda t: pdf_value(sigma, p, y1, t), u, v, limit=200)[0]
            for u, v in ((lo, d2), (d2, d1), (d1, hi))
        )
        assert abs(total - 1.0) <= 1e-6


def test_degenerate_weights_truncated_gaussian():
    sigma = 0.8
    p = _feasible_shape(np.random.default_rng(4))
    p["a1"] = p["a2"] = 0.0
    p["b1"] = p["b2"] = 1e-12
    d1, d2, a, b, c, _ = shape_functions(p, 0.3, sigma)
    assert a == 0.0 and c == pytest.approx(1.0)
    assert pdf_value(sigma, p, 0.3, d2 - 0.5) == 0.0
    from rllcap.channels import gaussian_mass, gaussian_pdf
    y2 = d1 + 0.7
    expected = c * gaussian_pdf(1, sigma, y2) / gaussian_mass(1, sigma, d1, math.inf)
    assert pdf_value(sigma, p, 0.3, y2) == pytest.approx(expected, rel=1e-12)


def test_constant_shape_independent_of_y1():
    p = {k: 1.0 for k in AWGN_PARAM_NAMES}
    p.update({"a1": 0.3, "a2": 0.3, "b1": 0.4, "b2": 0.4,
              "d1": 0.2, "d2": 0.2, "w1": 0.6, "w2": 0.6})
    vals = [pdf_value(0.9, p, y1, 0.37) for y1 in (-5.0, 0.0, 3.0)]
    assert max(vals) - min(vals) <= 1e-14


def test_class_f_budget_keeps_weights_valid():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = _feasible_shape(rng)
        check_class_f(p)
        for y1 in np.linspace(-10, 10, 81):
            _, _, a, b, c, width = shape_functions(p, y1, 0.7)
            assert 0.0 <= a <= 1.0 and 0.0 <= b <= 1.0
            assert -1e-12 <= c <= 1.0
            assert width > 0


def test_class_f_budget_violation_rejected():
    p = _feasible_shape(np.random.default_rng(6))
    p["a1"] = 0.8
    p["b1"] = 0.8
    with pytest.raises(InvalidShapeParameters):
        check_class_f(p)


def test_class_f_value_overflow_safe():
    assert math.isfinite(class_f_value(0.3, 0.1, 1.0, 1.0, 500.0, 0.5))
    assert math.isfinite(class_f_value(0.3, 0.1, 1.0, 1.0, -500.0, 0.5))
