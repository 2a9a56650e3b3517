"""Value-aware model loss calculus on finite MDPs.

Covers the pointwise model error of a fixed value function, its Holder
and Pinsker relaxations, the worst-case squared error over a Lipschitz
ball of value functions (computed exactly as a transport dual LP), the
certified Lipschitz radius of value functions produced by generalized
value iteration, and the verification that the worst-case loss equals
the squared scaled Wasserstein distance cell by cell.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .mdp import FiniteMdp, kernel_lipschitz, reward_lipschitz
from .metric import ScalarField, field_values, lipschitz_constant, uniform_lipschitz_constant
from .planner import BackupOperator, gvi
from .transport import (
    Distribution,
    SupportViolationError,
    kl_divergence,
    wasserstein_dual,
    wasserstein_primal,
)


class ContractionPreconditionError(ValueError):
    """gamma * K_W >= 1, so the geometric value-smoothness series diverges."""


@dataclass(frozen=True)
class ValueClassBound:
    """Lipschitz radius of the admissible value-function ball.

    Zero is allowed: constant rewards certify a radius of zero, and the
    worst-case loss over constant functions vanishes.
    """

    c: float

    def __post_init__(self):
        if not np.isfinite(self.c) or self.c < 0.0:
            raise ValueError(f"class bound must be finite and >= 0, got {self.c!r}")


def _bound_value(c) -> float:
    return float(c.c if isinstance(c, ValueClassBound) else c)


def _model_row(mdp, that, s, a):
    that = np.asarray(that, dtype=float)
    if that.shape != mdp.transition.shape:
        raise ValueError(
            f"model tensor shape {that.shape} does not match {mdp.transition.shape}"
        )
    return that[s, a]


def pointwise_model_error(mdp: FiniteMdp, that, v, s: int, a: int) -> float:
    """Signed discounted expectation gap of v under true vs model kernels.

    Computed against the field re-centered at its first value; both rows
    sum to one, so this is the same number but constant fields come out
    exactly zero.
    """
    row_true = mdp.transition[s, a]
    row_model = _model_row(mdp, that, s, a)
    Distribution(row_model)
    values = field_values(v, mdp.n_states)
    centered = values - values[0]
    return float(mdp.gamma * np.dot(row_true - row_model, centered))


class HolderPinskerBounds(NamedTuple):
    error: float
    l1_bound: float
    kl_bound: float


def holder_pinsker_bounds(mdp: FiniteMdp, that, v, s: int, a: int) -> HolderPinskerBounds:
    """|error| and its L1 (Holder) and KL (Pinsker) relaxations.

    The chain |error| <= l1_bound <= kl_bound is what justifies fitting a
    model by maximum likelihood; a support violation makes the KL bound
    infinite rather than failing.
    """
    err = abs(pointwise_model_error(mdp, that, v, s, a))
    row_true = mdp.transition[s, a]
    row_model = _model_row(mdp, that, s, a)
    values = field_values(v, mdp.n_states)
    v_inf = float(np.abs(values).max())
    l1 = float(mdp.gamma * np.abs(row_true - row_model).sum() * v_inf)
    try:
        kl = kl_divergence(Distribution(row_true), Distribution(row_model))
        kl_bound = float(mdp.gamma * math.sqrt(2.0 * kl) * v_inf)
    except SupportViolationError:
        kl_bound = math.inf
    return HolderPinskerBounds(err, l1, kl_bound)


def vaml_loss(mdp: FiniteMdp, that, c, s: int, a: int):
    """Worst squared expectation gap over the c-Lipschitz value ball.

    The supremum is a transport dual LP with Lipschitz bound c applied to
    the pair of next-state distributions; its square is the loss and the
    maximizing potential is returned as the worst-case value function.
    """
    bound = _bound_value(c)
    n = mdp.n_states
    if bound == 0.0:
        return 0.0, ScalarField(np.zeros(n))
    row_true = Distribution(mdp.transition[s, a])
    row_model = Distribution(_model_row(mdp, that, s, a))
    value, potential = wasserstein_dual(row_true, row_model, mdp.space, bound)
    return float(value * value), potential.f


def value_lipschitz_bound(mdp: FiniteMdp) -> ValueClassBound:
    """Certified Lipschitz radius K(R) / (1 - gamma K_W) from measured constants."""
    kr = mdp.measured_reward_constant
    if kr is None:
        kr = reward_lipschitz(mdp).constant
    kw = mdp.measured_kernel_constant
    if kw is None:
        kw = kernel_lipschitz(mdp).constant
    if mdp.gamma * kw >= 1.0:
        raise ContractionPreconditionError(
            f"gamma * K_W = {mdp.gamma * kw!r} >= 1; no finite value class bound"
        )
    return ValueClassBound(kr / (1.0 - mdp.gamma * kw))


@dataclass(frozen=True)
class ValueLipschitzCheck:
    measured_kq: float
    measured_kv: float
    bound: float
    passed: bool


def verify_value_lipschitz(
    mdp: FiniteMdp, op: BackupOperator, delta: float = 1e-10
) -> ValueLipschitzCheck:
    """Run GVI and compare the fixed point's measured smoothness to the bound."""
    bound = value_lipschitz_bound(mdp).c
    result = gvi(mdp, op, delta=delta)
    fields = [ScalarField(result.q.q[:, a]) for a in range(mdp.n_actions)]
    kq = uniform_lipschitz_constant(fields, mdp.space).constant
    kv = lipschitz_constant(result.v, mdp.space).constant
    slack = 1e-8 * (1.0 + bound)
    passed = kq <= bound + slack and kv <= bound + slack
    return ValueLipschitzCheck(kq, kv, bound, passed)


@dataclass(frozen=True)
class EquivalenceCell:
    s: int
    a: int
    vaml: float
    wasserstein: float
    c: float
    gap: float


@dataclass(frozen=True)
class EquivalenceReport:
    """Per state-action comparison of the two loss routes.

    ``vaml`` comes from the dual LP over the Lipschitz ball, ``wasserstein``
    from the primal coupling LP; ``gap`` is |vaml - (c W)^2|.
    """

    cells: tuple[EquivalenceCell, ...]
    max_gap: float

    def to_json_dict(self) -> dict:
        return {
            "max_gap": self.max_gap,
            "cells": [
                {
                    "s": cell.s,
                    "a": cell.a,
                    "vaml": cell.vaml,
                    "wasserstein": cell.wasserstein,
                    "c": cell.c,
                    "gap": cell.gap,
                }
                for cell in self.cells
            ],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "a", "vaml", "wasserstein", "c", "gap"])
            for cell in self.cells:
                writer.writerow([cell.s, cell.a, cell.vaml, cell.wasserstein, cell.c, cell.gap])


def verify_equivalence(mdp: FiniteMdp, that, c) -> EquivalenceReport:
    """Exercise the loss identity at every (s, a) of the model pair.

    For each cell the worst-case loss is computed through the dual LP and
    the transport distance through the primal LP; the two solvers are
    independent formulations, so a small max_gap certifies the identity
    rather than restating one computation.
    """
    bound = _bound_value(c)
    that = np.asarray(that, dtype=float)
    cells = []
    max_gap = 0.0
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            loss, _ = vaml_loss(mdp, that, bound, s, a)
            w, _ = wasserstein_primal(
                Distribution(mdp.transition[s, a]), Distribution(that[s, a]), mdp.space
            )
            gap = abs(loss - (bound * w) ** 2)
            max_gap = max(max_gap, gap)
            cells.append(EquivalenceCell(s, a, loss, w, bound, gap))
    return EquivalenceReport(tuple(cells), max_gap)
