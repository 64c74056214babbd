"""Tabular variable elimination.

Factors are dense tables; eliminating a variable multiplies the factors that
involve it and sums the variable out.  The last pairwise product is fused
with the sum, so the table recorded as created for an elimination is the
summed result, not the transient full product (multiplication counts are
unaffected by the fusion: a pairwise product always costs one multiplication
per entry of its result).
"""

from __future__ import annotations

from typing import Optional, Sequence

from .counters import CostCounters
from .errors import InvariantError, ZeroEvidenceError
from .network import ContextualBeliefNetwork
from .orders import check_order, min_size_order
from .posterior import Posterior, normalize_posterior
from .tables import (
    Context,
    Table,
    VariableId,
    multiply_all_sum_out,
    product,
    set_table,
)


def multiply_factors(
    factors: Sequence[Table], policy: str | Sequence[int] = "left"
) -> tuple[Table, int]:
    """Product of a factor list under an explicit multiplication policy.

    Policies: ``"left"`` folds in list order, ``"right"`` folds from the end,
    ``"recompute"`` recomputes every partial product instead of saving
    intermediates (costing ``(k-1)`` multiplications per entry of the final
    product), and a sequence of indices multiplies in that order, left-fold.
    The product itself does not depend on the policy; the multiplication
    count does.
    """
    if not factors:
        raise ValueError("nothing to multiply")
    if isinstance(policy, str):
        if policy == "left":
            ordered = list(factors)
        elif policy == "right":
            ordered = list(reversed(factors))
        elif policy == "recompute":
            acc = factors[0]
            for t in factors[1:]:
                acc = product(acc, t)
            return acc, (len(factors) - 1) * acc.size
        else:
            raise ValueError(f"unknown policy: {policy!r}")
    else:
        perm = list(policy)
        if sorted(perm) != list(range(len(factors))):
            raise ValueError("permutation must cover the factor list")
        ordered = [factors[i] for i in perm]
    count = 0
    acc = ordered[0]
    for t in ordered[1:]:
        acc = product(acc, t)
        count += acc.size
    return acc, count


class TabularVE:
    """One engine instance per query; the network is shared and immutable."""

    def __init__(self, net: ContextualBeliefNetwork, mult_order: str = "ascending"):
        if mult_order not in ("ascending", "insertion"):
            raise ValueError(f"unknown multiplication order: {mult_order!r}")
        self.net = net
        self.mult_order = mult_order
        self.counters = CostCounters()
        self.factors: list[Table] = []
        self._obs = Context()

    def begin(self, obs: Optional[Context] = None) -> None:
        """Expand the network to tables and substitute the evidence."""
        self.counters = CostCounters()
        self._obs = obs or Context()
        self.factors = []
        for x in range(self.net.n_vars()):
            factor = set_table(self.net.tabular_factor(x), self._obs)
            if factor.vars:
                self.factors.append(factor)
            elif float(factor.array) == 0.0:
                # A fully observed factor is a constant of proportionality
                # and cancels in the renormalization, unless it is zero.
                raise ZeroEvidenceError("evidence has probability zero")

    def eliminate(self, y: VariableId) -> None:
        involved = [f for f in self.factors if f.involves(y)]
        if not involved:
            self.counters.record_elimination(y, (), 0)
            return
        rest = [f for f in self.factors if not f.involves(y)]
        if self.mult_order == "ascending":
            involved.sort(key=lambda t: t.size)
        result, created = multiply_all_sum_out(involved, y, self.counters)
        if result.vars:
            rest.append(result)
        self.factors = rest
        self.counters.record_elimination(y, created, sum(created))

    def finish(self, query_vars: Sequence[VariableId]) -> Posterior:
        query = tuple(sorted(query_vars))
        for f in self.factors:
            if not set(f.vars) <= set(query):
                raise InvariantError("factor mentions uneliminated variables")
        if not self.factors:
            raise InvariantError("no factors mention the query variables")
        ordered = sorted(self.factors, key=lambda t: t.size)
        acc = ordered[0]
        for t in ordered[1:]:
            acc = product(acc, t, self.counters)
        covered = set(acc.vars)
        if covered != set(query):
            missing = sorted(set(query) - covered)
            raise InvariantError(f"no factor mentions query variables: {missing}")
        return normalize_posterior(acc, query, self.net.catalog)

    def query(
        self,
        query_vars: Sequence[VariableId],
        obs: Optional[Context] = None,
        order: Optional[Sequence[VariableId]] = None,
    ) -> Posterior:
        obs = obs or Context()
        if order is None:
            order = min_size_order(self.net, query_vars, obs)
        else:
            order = check_order(self.net, order, query_vars, obs)
        self.begin(obs)
        for y in order:
            self.eliminate(y)
        return self.finish(query_vars)


def ve_query(
    net: ContextualBeliefNetwork,
    query_vars: Sequence[VariableId],
    obs: Optional[Context] = None,
    order: Optional[Sequence[VariableId]] = None,
    mult_order: str = "ascending",
) -> tuple[Posterior, CostCounters]:
    engine = TabularVE(net, mult_order=mult_order)
    posterior = engine.query(query_vars, obs, order)
    return posterior, engine.counters
