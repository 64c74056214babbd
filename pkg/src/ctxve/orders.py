"""Elimination-order construction shared by all engines.

The default heuristic is greedy min-size: repeatedly eliminate the variable
whose elimination builds the smallest factor, measured as the product of the
domain sizes of the union of the variables of all factors involving it.
Scopes are simulated on the tabular factor structure so that every engine
given the same (network, query, evidence) gets the same order.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .network import ContextualBeliefNetwork
from .tables import Context, VariableId


def min_size_order(
    net: ContextualBeliefNetwork,
    query_vars: Sequence[VariableId],
    obs: Optional[Context] = None,
) -> list[VariableId]:
    obs = obs or Context()
    cat = net.catalog
    scopes = []
    for x in range(net.n_vars()):
        scope = {v for r in net.families[x] for v in r.variables()} - set(obs.vars())
        if scope:
            scopes.append(scope)
    remaining = [
        v
        for v in range(net.n_vars())
        if v not in set(query_vars) and v not in obs
    ]
    order: list[VariableId] = []
    while remaining:
        best = None
        best_cost = None
        for y in remaining:
            union: set[int] = {y}
            for scope in scopes:
                if y in scope:
                    union |= scope
            cost = math.prod(cat.size(v) for v in union)
            if best_cost is None or cost < best_cost:
                best, best_cost = y, cost
        assert best is not None
        order.append(best)
        involved = [s for s in scopes if best in s]
        scopes = [s for s in scopes if best not in s]
        if involved:
            merged = set().union(*involved) - {best}
            if merged:
                scopes.append(merged)
        remaining.remove(best)
    return order


def check_order(
    net: ContextualBeliefNetwork,
    order: Sequence[VariableId],
    query_vars: Sequence[VariableId],
    obs: Context,
) -> list[VariableId]:
    """Validate a user-supplied elimination order and return it as a list."""
    order = list(order)
    if len(set(order)) != len(order):
        raise ValueError("elimination order contains duplicates")
    qset, oset = set(query_vars), set(obs.vars())
    for v in order:
        if v in qset:
            raise ValueError(f"order eliminates query variable {net.catalog.names[v]}")
        if v in oset:
            raise ValueError(f"order eliminates observed variable {net.catalog.names[v]}")
    required = {
        v for v in range(net.n_vars()) if v not in qset and v not in oset
    }
    missing = required - set(order)
    if missing:
        names = [net.catalog.names[v] for v in sorted(missing)]
        raise ValueError(f"order does not cover variables: {names}")
    return order
