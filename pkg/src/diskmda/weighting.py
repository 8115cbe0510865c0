"""Method variants and the combination of their loss terms.

Eight variants cover the benchmark grid: two baselines that train on a
single domain with nothing but the classification loss, and six adaptive
variants that add MMD and/or CORAL penalties at one or both network taps.

Under dynamic weighting each term is weighted by its own share of the
current total,
    weight_i = loss_i / (l_class + sum(l_mmd) + sum(l_coral)),
computed over exactly the terms the variant supplies, so the weights sum
to one and the combined value collapses to sum(l_i^2) / sum(l_i). The
weights are treated as constants by the gradient (recomputed every step,
never differentiated through). If every term is zero the ratios are
undefined and the combination falls back to uniform weights.

Gamma weighting is the fixed-coefficient alternative for single-layer
variants: total = l_class + GAMMA * (metric terms), default GAMMA = 10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateWeightsError, ParameterError

VARIANTS = (
    "target_only",
    "source_only",
    "single_coral",
    "double_coral",
    "single_mmd",
    "double_mmd",
    "single_coral_mmd",
    "double_coral_mmd",
)

_USES_MMD = frozenset({"single_mmd", "double_mmd", "single_coral_mmd", "double_coral_mmd"})
_USES_CORAL = frozenset({"single_coral", "double_coral", "single_coral_mmd", "double_coral_mmd"})

DEFAULT_GAMMA = 10.0


def validate_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ParameterError(
            f"unknown variant {variant!r}; valid names: {', '.join(VARIANTS)}")
    return variant


def variant_layers(variant: str) -> tuple[int, ...]:
    """Which network taps the variant adapts: none, (1,), or (1, 2)."""
    validate_variant(variant)
    if variant in ("target_only", "source_only"):
        return ()
    return (1,) if variant.startswith("single") else (1, 2)


def variant_uses_mmd(variant: str) -> bool:
    return validate_variant(variant) in _USES_MMD


def variant_uses_coral(variant: str) -> bool:
    return validate_variant(variant) in _USES_CORAL


def is_adaptive(variant: str) -> bool:
    return bool(variant_layers(variant))


@dataclass(frozen=True)
class LossBreakdown:
    """One step's loss terms, the weights applied, and the combined value.

    ``n`` weights the classification term, ``x``/``y`` weight the per-layer
    MMD/CORAL terms. In gamma mode the recorded weights are the effective
    multipliers (1 for the class term, gamma for each metric term), so
    total == n*l_class + sum(x*l_mmd) + sum(y*l_coral) holds in both modes.
    """

    l_class: float
    l_mmd: tuple[float, ...]
    l_coral: tuple[float, ...]
    n: float
    x: tuple[float, ...]
    y: tuple[float, ...]
    total: float
    gamma: float | None = None


def dynamic_weights(l_class: float, l_mmd=(), l_coral=()):
    """Each loss's share of the sum of all supplied losses.

    Returns (n, x, y) with n + sum(x) + sum(y) == 1 up to rounding.
    Raises DegenerateWeightsError when every supplied loss is zero.
    """
    terms = [l_class, *l_mmd, *l_coral]
    for value in terms:
        if not math.isfinite(value) or value < 0.0:
            raise ParameterError(f"losses must be finite and >= 0, got {value}")
    denom = sum(terms)
    if denom <= 0.0:
        raise DegenerateWeightsError("all loss components are zero")
    n = l_class / denom
    x = tuple(v / denom for v in l_mmd)
    y = tuple(v / denom for v in l_coral)
    return n, x, y


def _check_terms(variant: str, l_mmd, l_coral) -> None:
    t = len(variant_layers(variant))
    want_mmd = t if variant in _USES_MMD else 0
    want_coral = t if variant in _USES_CORAL else 0
    if len(l_mmd) != want_mmd:
        raise ParameterError(
            f"variant {variant!r} expects {want_mmd} mmd terms, got {len(l_mmd)}")
    if len(l_coral) != want_coral:
        raise ParameterError(
            f"variant {variant!r} expects {want_coral} coral terms, got {len(l_coral)}")


def total_loss(variant: str, l_class: float, l_mmd=(), l_coral=(),
               weighting: str = "dynamic", gamma: float = DEFAULT_GAMMA) -> LossBreakdown:
    """Combine the supplied loss terms according to the variant.

    Dynamic mode self-weights every term; gamma mode (single-layer
    adaptive variants only) uses the fixed coefficient instead. The
    returned weights are the ones a training step should apply to the
    corresponding gradients, already frozen.
    """
    validate_variant(variant)
    l_mmd = tuple(float(v) for v in l_mmd)
    l_coral = tuple(float(v) for v in l_coral)
    l_class = float(l_class)
    _check_terms(variant, l_mmd, l_coral)
    for value in (l_class, *l_mmd, *l_coral):
        if not math.isfinite(value) or value < 0.0:
            raise ParameterError(f"losses must be finite and >= 0, got {value}")
    if weighting not in ("dynamic", "gamma"):
        raise ParameterError(f"weighting must be 'dynamic' or 'gamma', got {weighting!r}")

    if weighting == "gamma":
        if variant not in ("single_coral", "single_mmd", "single_coral_mmd"):
            raise ParameterError(
                f"gamma weighting applies to single-layer adaptive variants only, "
                f"got {variant!r}")
        if not gamma > 0.0:
            raise ParameterError(f"gamma must be positive, got {gamma}")
        n = 1.0
        x = tuple(gamma for _ in l_mmd)
        y = tuple(gamma for _ in l_coral)
    else:
        try:
            n, x, y = dynamic_weights(l_class, l_mmd, l_coral)
        except DegenerateWeightsError:
            k = 1 + len(l_mmd) + len(l_coral)
            n = 1.0 / k
            x = tuple(1.0 / k for _ in l_mmd)
            y = tuple(1.0 / k for _ in l_coral)

    total = n * l_class
    total += sum(w * v for w, v in zip(x, l_mmd))
    total += sum(w * v for w, v in zip(y, l_coral))
    return LossBreakdown(
        l_class=l_class, l_mmd=l_mmd, l_coral=l_coral,
        n=n, x=x, y=y, total=total,
        gamma=gamma if weighting == "gamma" else None,
    )
