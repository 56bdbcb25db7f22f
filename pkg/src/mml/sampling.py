"""Seeded sampling of latent values and preference profiles.

Latent values follow the logit model: man i's value for woman j is
``X[i, j] ~ Exp(A[i, j])`` with A the balanced scores, drawn from the per-cell
stream keyed by (seed, "X", i, j); lower values are better.  Sorting a row of
values yields exactly the sequential choice distribution of the multinomial
logit, which `logit_sample_prefs` implements directly as a cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DuplicateValue, ShapeMismatch
from .market import BalancedMarket
from .rng import exponentials, stream_key, unit_uniforms


@dataclass(frozen=True)
class LatentValues:
    """Realized values for one market draw; X is men's, Y is women's.

    ``X[i, j]`` is man i's value for woman j (rate ``A[i, j]``), ``Y[j, i]``
    woman j's value for man i (rate ``B[j, i]``).  Man i prefers j1 to j2 iff
    ``X[i, j1] < X[i, j2]``.
    """

    X: np.ndarray
    Y: np.ndarray
    seed: int


@dataclass(frozen=True)
class PreferenceProfile:
    """Strict preference lists, best partner first, 0-based indices."""

    men_prefs: np.ndarray
    women_prefs: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.men_prefs, dtype=np.int64)
        w = np.asarray(self.women_prefs, dtype=np.int64)
        if m.ndim != 2 or w.ndim != 2 or w.shape != (m.shape[1], m.shape[0]):
            raise ShapeMismatch(
                f"preference arrays must have transposed shapes, got {m.shape} and {w.shape}"
            )
        object.__setattr__(self, "men_prefs", m)
        object.__setattr__(self, "women_prefs", w)

    @property
    def n_men(self) -> int:
        return self.men_prefs.shape[0]

    @property
    def n_women(self) -> int:
        return self.women_prefs.shape[0]


def _check_rows_tie_free(name: str, values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        raise DuplicateValue(f"non-finite or non-positive {name} value drawn; reseed")
    ordered = np.sort(values, axis=1)
    if values.shape[1] > 1 and np.any(np.diff(ordered, axis=1) == 0.0):
        raise DuplicateValue(f"tied {name} values drawn (probability-zero event); reseed")


def sample_latent(bal: BalancedMarket, seed: int) -> LatentValues:
    """Draw one matrix of values per side from per-cell streams of ``seed``."""
    x = exponentials(stream_key(seed, "X"), bal.A)
    y = exponentials(stream_key(seed, "Y"), bal.B)
    _check_rows_tie_free("X", x)
    _check_rows_tie_free("Y", y)
    return LatentValues(X=x, Y=y, seed=seed)


def prefs_from_latent(values: LatentValues) -> PreferenceProfile:
    """Sort each agent's values ascending into a strict preference list."""
    _check_rows_tie_free("X", values.X)
    _check_rows_tie_free("Y", values.Y)
    return PreferenceProfile(
        men_prefs=np.argsort(values.X, axis=1),
        women_prefs=np.argsort(values.Y, axis=1),
    )


def _sequential_order(scores: np.ndarray, uniforms: np.ndarray) -> list[int]:
    # Sample without replacement, picking proportionally to the remaining scores.
    remaining = list(range(scores.size))
    order: list[int] = []
    for u in uniforms:
        weights = np.cumsum(scores[remaining])
        pick = int(np.searchsorted(weights, u * weights[-1], side="right"))
        pick = min(pick, len(remaining) - 1)
        order.append(remaining.pop(pick))
    return order


def logit_sample_prefs(bal: BalancedMarket, seed: int) -> PreferenceProfile:
    """Sample preference lists by sequential logit choice over canonical scores.

    Distributionally identical to ``prefs_from_latent(sample_latent(bal, seed))``
    (an exponential race realizes the same choice law), but drawn through a
    different route and different streams; useful as an independent check.
    """
    n = bal.n
    a_hat = bal.A / bal.phi[:, None]
    b_hat = bal.B / bal.psi[:, None]
    men = np.empty((n, n), dtype=np.int64)
    women = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        u = unit_uniforms(stream_key(seed, "logit_men", i), n)
        men[i] = _sequential_order(a_hat[i], u)
    for j in range(n):
        u = unit_uniforms(stream_key(seed, "logit_women", j), n)
        women[j] = _sequential_order(b_hat[j], u)
    return PreferenceProfile(men_prefs=men, women_prefs=women)
