"""LP relaxation of a probing instance and dual feasibility checks.

The relaxation has one variable y_e per element with positive probability
(the chance e is probed), x_e = p_e * y_e (the chance e is chosen), and
requires x to satisfy the inner system's rank constraints and y the outer
system's. Rather than enumerating exponentially many rank constraints we
alternate: solve with the cuts found so far, separate at the optimum, repeat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import simplex
from .instance import ProbingInstance

RELATIVE_TOL = 1e-7
DUAL_FEASIBILITY_TOL = 1e-9
MAX_CUT_ROUNDS = 200


class LpEngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class Cut:
    side: str  # "inner" or "outer"
    members: frozenset[int]
    rank: int


@dataclass(frozen=True)
class FractionalSolution:
    x: tuple[float, ...]
    y: tuple[float, ...]
    objective: float
    cuts: tuple[Cut, ...]


def solve_probing_lp(instance: ProbingInstance) -> FractionalSolution:
    """Maximize sum w_e x_e subject to x in P(inner), y in P(outer), y <= 1.

    Elements with p_e = 0 contribute nothing and are dropped from the LP
    (their y is reported as 0).
    """
    n = instance.n
    weights = instance.weights()
    probs = instance.probabilities()
    active = [e for e in range(n) if probs[e] > 0]
    if not active:
        return FractionalSolution(
            x=(0.0,) * n, y=(0.0,) * n, objective=0.0, cuts=()
        )
    col_of = {e: j for j, e in enumerate(active)}
    m = len(active)

    c = np.array([weights[e] * probs[e] for e in active])
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    cuts: list[Cut] = []
    for j in range(m):
        box = np.zeros(m)
        box[j] = 1.0
        rows.append(box)
        rhs.append(1.0)

    y_full = np.zeros(n)
    objective = 0.0
    for _ in range(MAX_CUT_ROUNDS):
        result = simplex.maximize(c, np.array(rows), np.array(rhs))
        y = result.x
        objective = result.objective
        y_full = np.zeros(n)
        for e, j in col_of.items():
            y_full[e] = min(1.0, max(0.0, y[j]))
        x_full = probs * y_full

        violated = False
        inner_w = instance.inner.separate(x_full)
        if inner_w is not None:
            rank = instance.inner.rank(inner_w.members)
            row = np.zeros(m)
            for e in inner_w.members:
                if e in col_of:
                    row[col_of[e]] = probs[e]
            rows.append(row)
            rhs.append(float(rank))
            cuts.append(Cut("inner", inner_w.members, rank))
            violated = True
        outer_w = instance.outer.separate(y_full)
        if outer_w is not None:
            rank = instance.outer.rank(outer_w.members)
            row = np.zeros(m)
            for e in outer_w.members:
                if e in col_of:
                    row[col_of[e]] = 1.0
            rows.append(row)
            rhs.append(float(rank))
            cuts.append(Cut("outer", outer_w.members, rank))
            violated = True
        if not violated:
            return FractionalSolution(
                x=tuple(float(v) for v in x_full),
                y=tuple(float(v) for v in y_full),
                objective=float(objective),
                cuts=tuple(cuts),
            )
    raise LpEngineError(f"cut generation failed to converge in {MAX_CUT_ROUNDS} rounds")


# ---------------------------------------------------------------------------
# dual certificates for the unweighted LP
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualCertificate:
    """Weights on rank constraints: alpha over inner sets, beta over outer.

    Feasibility for the unweighted relaxation requires, for every element e,
        p_e * sum(alpha[S] for S containing e) + sum(beta[S] for S containing e) >= p_e.
    The certificate's value is sum alpha[S] * rank_in(S) + beta[S] * rank_out(S).
    """

    alpha: tuple[tuple[frozenset[int], float], ...]
    beta: tuple[tuple[frozenset[int], float], ...]
    value: float

    @staticmethod
    def build(instance: ProbingInstance, alpha: dict, beta: dict) -> "DualCertificate":
        value = sum(instance.inner.rank(s) * a for s, a in alpha.items())
        value += sum(instance.outer.rank(s) * b for s, b in beta.items())
        return DualCertificate(
            alpha=tuple(sorted(alpha.items(), key=lambda kv: sorted(kv[0]))),
            beta=tuple(sorted(beta.items(), key=lambda kv: sorted(kv[0]))),
            value=float(value),
        )


@dataclass(frozen=True)
class DualCheck:
    feasible: bool
    value: float
    worst_slack: float


def check_dual(
    certificate: DualCertificate,
    instance: ProbingInstance,
    tol: float = DUAL_FEASIBILITY_TOL,
) -> DualCheck:
    """Verify non-negativity and per-element covering of a dual certificate."""
    probs = instance.probabilities()
    for _, a in certificate.alpha:
        if a < -tol:
            return DualCheck(False, certificate.value, float(a))
    for _, b in certificate.beta:
        if b < -tol:
            return DualCheck(False, certificate.value, float(b))
    worst = np.inf
    feasible = True
    for e in range(instance.n):
        alpha_sum = sum(a for s, a in certificate.alpha if e in s)
        beta_sum = sum(b for s, b in certificate.beta if e in s)
        slack = probs[e] * alpha_sum + beta_sum - probs[e]
        worst = min(worst, slack)
        if slack < -tol:
            feasible = False
    if instance.n == 0:
        worst = 0.0
    return DualCheck(feasible, certificate.value, float(worst))


def check_claim_lp_opt(
    lp_objective: float, adaptive_optimum: float, tol: float = 1e-6
) -> bool:
    """The relaxation upper-bounds the optimal adaptive policy."""
    return lp_objective >= adaptive_optimum - tol
