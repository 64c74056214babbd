"""Shared fixtures: small reference networks and brute-force helpers."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from ctxve import (
    Confactor,
    Context,
    ContextualBeliefNetwork,
    DomainCatalog,
    SplitMix64,
    Table,
)

BOOL = ("true", "false")
T, F = 0, 1


def ctx(catalog: DomainCatalog, text: str) -> Context:
    return catalog.parse_context(text)


def table(catalog: DomainCatalog, names: list[str], values) -> Table:
    vars = tuple(catalog.index(n) for n in names)
    return catalog.table(vars, values)


def tree_catalog() -> DomainCatalog:
    return DomainCatalog([(n, BOOL) for n in ["y", "z", "a", "b", "c", "d", "e"]])


def tree_network() -> ContextualBeliefNetwork:
    """Seven binary variables; b, d and e have tree-structured conditionals.

    The dense conditional for e (16 parent rows) collapses to four
    confactors with bodies {a}, {a=f,c}, {a=f,c=f,d}, {a=f,c=f,d=f}.
    """
    cat = tree_catalog()

    def conf(body: str, names: list[str], values) -> Confactor:
        return Confactor(ctx(cat, body), table(cat, names, values))

    families = [
        [conf("", ["y"], [0.6, 0.4])],
        [conf("", ["z"], [0.35, 0.65])],
        [conf("", ["y", "z", "a"], [0.9, 0.1, 0.25, 0.75, 0.4, 0.6, 0.7, 0.3])],
        [
            conf("y=true", ["b", "z"], [0.77, 0.17, 0.23, 0.83]),
            conf("y=false", ["b"], [0.27, 0.73]),
        ],
        [conf("", ["y", "z", "c"], [0.2, 0.8, 0.55, 0.45, 0.6, 0.4, 0.3, 0.7])],
        [
            conf("z=true", ["d"], [0.29, 0.71]),
            conf("z=false", ["d", "y"], [0.79, 0.59, 0.21, 0.41]),
        ],
        [
            conf("a=true", ["b", "e"], [0.55, 0.45, 0.3, 0.7]),
            conf("a=false,c=true", ["e"], [0.08, 0.92]),
            conf("a=false,c=false,d=true", ["b", "e"], [0.025, 0.975, 0.85, 0.15]),
            conf("a=false,c=false,d=false", ["e"], [0.5, 0.5]),
        ],
    ]
    return ContextualBeliefNetwork(cat, families)


def dense_e_rows() -> dict[tuple[int, int, int, int], float]:
    """P(e=true | a, b, c, d) for all sixteen parent rows."""
    rows = {}
    for a, b, c, d in itertools.product((T, F), repeat=4):
        if a == T:
            p = 0.55 if b == T else 0.3
        elif c == T:
            p = 0.08
        elif d == T:
            p = 0.025 if b == T else 0.85
        else:
            p = 0.5
        rows[(a, b, c, d)] = p
    return rows


def hvac_catalog() -> DomainCatalog:
    names = ["fb", "ft", "mb", "mt", "s", "ot", "fh", "mh"]
    return DomainCatalog([(n, BOOL) for n in names])


HVAC_P = dict(
    p1=0.9, p2=0.3, p3=0.8, p4=0.2, p5=0.85,
    p6=0.25, p7=0.75, p8=0.15, p9=0.65, p10=0.35,
)


def hvac_network() -> ContextualBeliefNetwork:
    """Two houses whose inside temperature depends on the outside only when
    the air conditioning is broken; the houses couple only through ot."""
    cat = hvac_catalog()
    p = HVAC_P

    def conf(body: str, names: list[str], values) -> Confactor:
        return Confactor(ctx(cat, body), table(cat, names, values))

    def binary(p_true: float) -> list[float]:
        return [p_true, 1.0 - p_true]

    families = [
        [conf("", ["fb"], binary(0.3))],
        [conf("", ["ft"], binary(0.55))],
        [conf("", ["mb"], binary(0.4))],
        [conf("", ["mt"], binary(0.45))],
        [conf("", ["s"], binary(0.5))],
        [
            conf(
                "",
                ["s", "ot"],
                [p["p9"], 1 - p["p9"], p["p10"], 1 - p["p10"]],
            )
        ],
        [
            conf("fb=true", ["ot", "fh"], [p["p1"], 1 - p["p1"], p["p2"], 1 - p["p2"]]),
            conf("fb=false", ["ft", "fh"], [p["p3"], 1 - p["p3"], p["p4"], 1 - p["p4"]]),
        ],
        [
            conf("mb=true", ["ot", "mh"], [p["p5"], 1 - p["p5"], p["p6"], 1 - p["p6"]]),
            conf("mb=false", ["mt", "mh"], [p["p7"], 1 - p["p7"], p["p8"], 1 - p["p8"]]),
        ],
    ]
    return ContextualBeliefNetwork(cat, families)


def wide_catalog(w_size: int = 1000) -> DomainCatalog:
    entries = [("w", tuple(f"v{i}" for i in range(w_size)))]
    entries += [(n, BOOL) for n in ["x", "a", "b", "c", "s", "t"]]
    return DomainCatalog(entries)


def wide_network(w_size: int = 1000, seed: int = 7) -> ContextualBeliefNetwork:
    """One huge-domain root feeding a small chain; s and t switch their
    parent sets on x."""
    cat = wide_catalog(w_size)
    rng = SplitMix64(seed)

    def rand_cpt(names: list[str]) -> Table:
        vars = tuple(cat.index(n) for n in names)
        shape = cat.shape(vars)
        arr = np.array([0.1 + rng.uniform() for _ in range(int(np.prod(shape)))])
        arr = arr.reshape(shape)
        arr = arr / arr.sum(axis=len(shape) - 1, keepdims=True)
        return Table(vars, arr)

    def conf(body: str, t: Table) -> Confactor:
        return Confactor(ctx(cat, body), t)

    families = [
        [conf("", rand_cpt(["w"]))],
        [conf("", rand_cpt(["x"]))],
        [conf("", rand_cpt(["a"]))],
        [conf("", rand_cpt(["w", "b"]))],
        [conf("", rand_cpt(["b", "c"]))],
        [
            conf("x=true", rand_cpt(["a", "b", "c", "s"])),
            conf("x=false", rand_cpt(["b", "c", "s"])),
        ],
        [
            conf("x=true", rand_cpt(["a", "b", "c", "t"])),
            conf("x=false", rand_cpt(["c", "t"])),
        ],
    ]
    return ContextualBeliefNetwork(cat, families)


def brute_posterior(net: ContextualBeliefNetwork, query, obs=None) -> np.ndarray:
    """Posterior over the query variables by explicit enumeration of every
    full assignment, straight from the per-family conditional values."""
    cat = net.catalog
    obs = obs or Context()
    query = tuple(sorted(query))
    out = np.zeros(cat.shape(query))
    n = net.n_vars()
    for combo in itertools.product(*(range(cat.size(v)) for v in range(n))):
        if any(combo[v] != val for v, val in obs.items()):
            continue
        full = Context(list(enumerate(combo)))
        prob = 1.0
        for x in range(n):
            applicable = [
                r for r in net.families[x]
                if all(full.get(v) == val for v, val in r.body.items())
            ]
            assert len(applicable) == 1
            r = applicable[0]
            prob *= r.table.lookup({v: combo[v] for v in r.table.vars})
        out[tuple(combo[v] for v in query)] += prob
    return out / out.sum()


def find_confactor(items, catalog, body_text):
    """The unique confactor in ``items`` whose body equals the given text."""
    target = ctx(catalog, body_text)
    hits = [r for r in items if r.body == target]
    assert len(hits) == 1, f"expected one confactor with body {body_text!r}, got {len(hits)}"
    return hits[0]


@pytest.fixture
def tree_net():
    return tree_network()


@pytest.fixture
def hvac_net():
    return hvac_network()


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {status}")
