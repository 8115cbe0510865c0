"""Variant bookkeeping and the loss-combination rules."""

import numpy as np
import pytest

from diskmda.errors import DegenerateWeightsError, ParameterError
from diskmda.weighting import (
    DEFAULT_GAMMA,
    VARIANTS,
    dynamic_weights,
    is_adaptive,
    total_loss,
    validate_variant,
    variant_layers,
    variant_uses_coral,
    variant_uses_mmd,
)


def test_variant_table_is_complete():
    assert len(VARIANTS) == 8
    assert variant_layers("target_only") == ()
    assert variant_layers("source_only") == ()
    assert variant_layers("single_coral") == (1,)
    assert variant_layers("single_mmd") == (1,)
    assert variant_layers("single_coral_mmd") == (1,)
    assert variant_layers("double_coral") == (1, 2)
    assert variant_layers("double_mmd") == (1, 2)
    assert variant_layers("double_coral_mmd") == (1, 2)


def test_variant_metric_flags():
    assert not variant_uses_mmd("source_only")
    assert not variant_uses_coral("target_only")
    assert variant_uses_mmd("double_mmd") and not variant_uses_coral("double_mmd")
    assert variant_uses_coral("single_coral") and not variant_uses_mmd("single_coral")
    assert variant_uses_mmd("double_coral_mmd") and variant_uses_coral("double_coral_mmd")
    assert [is_adaptive(v) for v in VARIANTS] == [False, False] + [True] * 6


def test_unknown_variant_rejected_with_list():
    with pytest.raises(ParameterError, match="single_mmd"):
        validate_variant("triple_mmd")


def test_dynamic_weights_sum_to_one():
    rng = np.random.default_rng(50)
    for _ in range(200):
        losses = rng.uniform(0.0, 5.0, size=4)
        losses[rng.integers(0, 4)] += 1e-9  # keep at least one term positive
        n, x, y = dynamic_weights(losses[0], losses[1:3], losses[3:])
        assert n + sum(x) + sum(y) == pytest.approx(1.0, abs=1e-12)


def test_dynamic_weights_proportional_to_losses():
    n, x, y = dynamic_weights(2.0, (1.0,), (1.0,))
    assert n == pytest.approx(0.5)
    assert x[0] == pytest.approx(0.25)
    assert y[0] == pytest.approx(0.25)


def test_dynamic_weights_scale_invariant():
    rng = np.random.default_rng(51)
    for _ in range(50):
        losses = rng.uniform(0.1, 3.0, size=5)
        base = dynamic_weights(losses[0], losses[1:3], losses[3:])
        scaled = dynamic_weights(7.3 * losses[0], 7.3 * losses[1:3], 7.3 * losses[3:])
        for a, b in zip(np.hstack(base[1:] + (base[0],)), np.hstack(scaled[1:] + (scaled[0],))):
            assert a == pytest.approx(b, abs=1e-12)


def test_dynamic_weights_all_zero_raises():
    with pytest.raises(DegenerateWeightsError):
        dynamic_weights(0.0, (0.0, 0.0), (0.0, 0.0))


def test_dynamic_weights_reject_negative_or_nonfinite():
    with pytest.raises(ParameterError):
        dynamic_weights(-0.1, (1.0,), ())
    with pytest.raises(ParameterError):
        dynamic_weights(float("nan"), (), ())
    with pytest.raises(ParameterError):
        dynamic_weights(float("inf"), (1.0,), ())


def test_total_loss_collapses_to_sum_of_squares_over_sum():
    rng = np.random.default_rng(52)
    for _ in range(1000):
        l_class = float(rng.uniform(0.001, 4.0))
        l_mmd = tuple(rng.uniform(0.001, 4.0, size=2))
        l_coral = tuple(rng.uniform(0.001, 4.0, size=2))
        bd = total_loss("double_coral_mmd", l_class, l_mmd, l_coral)
        terms = np.array([l_class, *l_mmd, *l_coral])
        expected = float(np.sum(terms**2) / np.sum(terms))
        assert bd.total == pytest.approx(expected, rel=1e-12)


def test_total_loss_weight_identity_holds():
    bd = total_loss("single_coral_mmd", 0.9, (0.2,), (0.1,))
    recombined = bd.n * bd.l_class
    recombined += sum(w * v for w, v in zip(bd.x, bd.l_mmd))
    recombined += sum(w * v for w, v in zip(bd.y, bd.l_coral))
    assert bd.total == pytest.approx(recombined, abs=1e-15)
    assert bd.n + sum(bd.x) + sum(bd.y) == pytest.approx(1.0, abs=1e-12)


def test_total_loss_baselines_take_class_term_only():
    for variant in ("target_only", "source_only"):
        bd = total_loss(variant, 1.7)
        assert bd.total == pytest.approx(1.7)
        assert bd.n == pytest.approx(1.0)
        assert bd.x == () and bd.y == ()
        with pytest.raises(ParameterError):
            total_loss(variant, 1.7, (0.5,), ())


def test_total_loss_term_count_enforced_per_variant():
    with pytest.raises(ParameterError):
        total_loss("single_mmd", 1.0, (0.1, 0.2), ())
    with pytest.raises(ParameterError):
        total_loss("double_coral", 1.0, (), (0.1,))
    with pytest.raises(ParameterError):
        total_loss("single_coral_mmd", 1.0, (0.1,), ())
    bd = total_loss("double_mmd", 1.0, (0.1, 0.2), ())
    assert bd.y == ()


def test_total_loss_all_zero_falls_back_to_uniform():
    bd = total_loss("double_coral_mmd", 0.0, (0.0, 0.0), (0.0, 0.0))
    assert bd.total == 0.0
    assert bd.n == pytest.approx(0.2)
    assert bd.x == pytest.approx((0.2, 0.2))
    assert bd.y == pytest.approx((0.2, 0.2))


def test_gamma_mode_fixed_coefficients():
    bd = total_loss("single_coral_mmd", 0.5, (0.2,), (0.3,),
                    weighting="gamma", gamma=10.0)
    assert bd.total == pytest.approx(0.5 + 10.0 * 0.2 + 10.0 * 0.3)
    assert bd.n == 1.0
    assert bd.x == (10.0,)
    assert bd.y == (10.0,)
    assert bd.gamma == 10.0


def test_gamma_mode_default_coefficient_is_ten():
    assert DEFAULT_GAMMA == 10.0
    bd = total_loss("single_mmd", 1.0, (0.5,), (), weighting="gamma")
    assert bd.total == pytest.approx(1.0 + 10.0 * 0.5)


def test_gamma_mode_restricted_to_single_layer_variants():
    for variant in ("double_mmd", "double_coral", "double_coral_mmd",
                    "source_only", "target_only"):
        with pytest.raises(ParameterError):
            total_loss(variant, 1.0,
                       (0.1, 0.2) if variant_uses_mmd(variant) else (),
                       (0.1, 0.2) if variant_uses_coral(variant) else (),
                       weighting="gamma")
    with pytest.raises(ParameterError):
        total_loss("single_mmd", 1.0, (0.1,), (), weighting="gamma", gamma=0.0)


def test_total_loss_rejects_unknown_weighting():
    with pytest.raises(ParameterError):
        total_loss("single_mmd", 1.0, (0.1,), (), weighting="static")


def test_breakdown_identity_same_in_both_modes():
    # total == n*l_class + sum(x*l_mmd) + sum(y*l_coral) regardless of mode
    for kwargs in ({"weighting": "dynamic"}, {"weighting": "gamma", "gamma": 3.5}):
        bd = total_loss("single_mmd", 0.8, (0.4,), (), **kwargs)
        assert bd.total == pytest.approx(
            bd.n * bd.l_class + sum(w * v for w, v in zip(bd.x, bd.l_mmd)),
            abs=1e-15)
