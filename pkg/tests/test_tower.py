from decimal import Decimal

import numpy as np
import pytest

from cstarincl.algebra import SubalgebraEmbedding
from cstarincl.matcore import haar_unitary, random_positive
from cstarincl.fullness import verify_certificate
from cstarincl.tower import (
    Tower,
    build_uhf_tower,
    christensen_budget,
    degenerate_tower,
    non_regular_example,
    propagate_fullness,
    regroup_sequences,
    regularity_check,
    regularity_details,
    verify_commuting_squares,
    verify_corollary_conditions,
)
from oracles import budget_recursion_decimal


@pytest.fixture(scope="module")
def uhf2():
    return build_uhf_tower((2, 2), (6, 6), 2)


def test_regrouping_arithmetic():
    assert regroup_sequences((2, 2), (6, 6), 2) == ([2, 4], [6, 36])
    assert regroup_sequences((2,), (4,), 3) == ([2, 2, 4], [4, 4, 16])
    assert regroup_sequences((2,), (4,), 2, strict=True) == ([2, 4], [4, 16])
    with pytest.raises(ValueError):
        regroup_sequences((2,), (2,), 1)
    with pytest.raises(ValueError):
        regroup_sequences((2,), (5,), 1)
    with pytest.raises(ValueError):
        regroup_sequences((2,), (6,), 3, max_ambient=4096)


def test_depth_one_tower():
    t = build_uhf_tower((2, 2), (6, 6), 1)
    assert [lv.ambient_dim for lv in t.levels] == [6]
    assert t.level(1).B_emb.blocks == (2,) and t.level(1).B_emb.multiplicities == (3,)
    assert verify_commuting_squares(t)["ok"]


def test_uhf_depth_two(uhf2):
    assert [lv.ambient_dim for lv in uhf2.levels] == [6, 216]
    assert uhf2.level(2).B_emb.blocks == (8,)
    rep = verify_commuting_squares(uhf2)
    assert rep["ok"] and rep["max_residual"] <= 1e-9
    assert regularity_check(uhf2, 1, 2)
    assert verify_corollary_conditions(uhf2)["status"] == "certified"


def test_expectation_compatibility_is_reported_not_required(uhf2):
    rep = verify_commuting_squares(uhf2, expectations=True)
    assert rep["ok"]
    assert "max_expectation_residual" in rep
    # the construction does not make the expectation squares commute
    assert rep["expectations_compatible"] is False


def test_twisted_iota_is_flagged(uhf2):
    t = Tower.from_json(uhf2.to_json())
    lv = t.level(2)
    lv.B_emb = lv.B_emb.conjugate(haar_unitary(216, 0))
    rep = verify_commuting_squares(t)
    assert not rep["ok"] and rep["max_residual"] > 0.1


def test_tower_json_round_trip(uhf2):
    t = Tower.from_json(uhf2.to_json())
    assert verify_commuting_squares(t)["max_residual"] <= 1e-9
    assert np.allclose(t.level(2).level_unitary, uhf2.level(2).level_unitary)


def test_equality_regrouping_breaks_regularity_but_strict_restores_it():
    eq = build_uhf_tower((2,), (4,), 2)
    details = regularity_details(eq, 1, 2)
    assert not details["regular"] and details["intersection_dim"] > details["target_dim"]
    assert verify_corollary_conditions(eq)["status"] == "certified"
    strict = build_uhf_tower((2,), (4,), 2, strict=True)
    assert regularity_check(strict, 1, 2)


def test_non_regular_example():
    t = non_regular_example()
    assert verify_commuting_squares(t)["ok"]
    assert regularity_check(t, 1, 2) is False


def test_corollary_refuted_for_identity_unitary(uhf2):
    t = Tower.from_json(uhf2.to_json())
    t.level(2).level_unitary = np.eye(12, dtype=complex)
    assert verify_corollary_conditions(t, budget=512)["status"] == "refuted"


def test_corollary_without_unitaries_is_unknown(uhf2):
    t = Tower.from_json(uhf2.to_json())
    t.level(2).level_unitary = None
    assert verify_corollary_conditions(t, samples=20)["status"] == "unknown"


def test_propagation_in_degenerate_tower():
    t = degenerate_tower((2, 2), depth=3)
    central = np.diag([1, 1, 0, 0]).astype(complex)
    res = propagate_fullness(t, 1, central)
    assert not res.found and len(res.spectra) == 3
    spread = np.diag([1, 0, 1, 0]).astype(complex)
    assert propagate_fullness(t, 1, spread).level == 1


def test_propagation_rejects_bad_input(uhf2):
    with pytest.raises(ValueError):
        propagate_fullness(uhf2, 1, np.zeros((6, 6)))
    with pytest.raises(ValueError):
        propagate_fullness(uhf2, 1, np.eye(5))


def test_propagation_depth_three(rng):
    t = build_uhf_tower((2,), (4,), 3)
    assert [lv.ambient_dim for lv in t.levels] == [4, 16, 256]
    assert verify_corollary_conditions(t)["status"] == "certified"
    for _ in range(3):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        a = np.outer(v, v.conj())
        res = propagate_fullness(t, 1, a, rng_seed=0)
        assert res.found
        x = t.push(a, 1, res.level)
        assert verify_certificate(x, res.certificate, t.level(res.level).B_emb).ok


def test_rank_one_level_one_is_not_full_yet(uhf2, rng):
    v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    res = propagate_fullness(uhf2, 1, np.outer(v, v.conj()), rng_seed=1)
    assert res.level == 2 and res.spectra[0]["min_eig_expectation"] < 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("eps", [0.1, 0.01, 0.001])
def test_budget_constraints_against_decimal_oracle(n, eps):
    table = christensen_budget(n, eps)
    gam, _ = budget_recursion_decimal(n, Decimal(10) ** (-Decimal(str(table.exponent))))
    assert gam[1] <= Decimal(str(eps))
    assert all(2 * gam[j] < Decimal("1e-4") for j in range(2, n + 1))
    assert table.delta < 1e-4
    assert all(a > b for a, b in zip(table.gammas, table.gammas[1:]))
    # a quarter step larger delta must violate some constraint (maximality)
    if table.exponent > 4.25:
        gam2, _ = budget_recursion_decimal(n, Decimal(10) ** (-Decimal(str(table.exponent - 0.25))))
        assert gam2[1] > Decimal(str(eps)) or any(2 * gam2[j] >= Decimal("1e-4") for j in range(2, n + 1))


def test_budget_monotone_in_eps():
    deltas = [christensen_budget(2, e).delta for e in (0.1, 0.01, 0.001)]
    assert deltas[0] > deltas[1] > deltas[2]


def test_budget_reports_unsatisfiable():
    with pytest.raises(ValueError, match="binding"):
        christensen_budget(3, 0.01, q_max=5)
    with pytest.raises(ValueError):
        christensen_budget(0, 0.1)
