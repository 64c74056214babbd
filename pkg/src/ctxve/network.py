"""Contextual belief networks: model, validation, construction and file I/O.

A network holds, for every variable, a family of confactors representing the
conditional probability of that variable given its predecessors.  Family
bodies must be mutually exclusive and exhaustive, mention only predecessors,
and every member's table must be normalized over the child.

The on-disk format is a JSON document::

    {"variables": [{"name": ..., "values": [...]}, ...],
     "families": [{"child": ...,
                   "confactors": [{"context": {var: value, ...},
                                   "vars": [...], "table": [...]}, ...]},
                  ...]}

Table arrays use the last-listed-variable-fastest layout.  Variable
declaration order fixes the total ordering.
"""

from __future__ import annotations

import itertools
import json
import math
from typing import Optional, Sequence

import numpy as np

from .confactor import Confactor
from .errors import NetworkFormatError
from .tables import (
    Context,
    DomainCatalog,
    Table,
    VariableId,
    compatible,
    product as table_product,
    reorder,
    set_table,
)

NORMALIZATION_TOL = 1e-6


class ParentSkeleton:
    """Mutually exclusive, exhaustive (context, variable-set) pairs for one
    variable; each pair names the predecessors the variable still depends on
    inside that context."""

    def __init__(self, child: VariableId, pairs: Sequence[tuple[Context, Sequence[VariableId]]]):
        self.child = child
        self.pairs = [(ctx, tuple(vs)) for ctx, vs in pairs]


class ContextualBeliefNetwork:
    """Immutable network: a domain catalog plus one confactor family per
    variable, in declaration order."""

    def __init__(self, catalog: DomainCatalog, families: Sequence[Sequence[Confactor]]):
        if len(families) != len(catalog):
            raise ValueError("one family required per variable")
        self.catalog = catalog
        # Family members are stamped as (pure) confactors for their child so
        # engines can track provenance regardless of how they were built.
        self.families: tuple[tuple[Confactor, ...], ...] = tuple(
            tuple(
                r.replace(for_vars=frozenset({x}), pure_for=frozenset({x}))
                for r in fam
            )
            for x, fam in enumerate(families)
        )
        self._tabular_cache: dict[int, Table] = {}

    def family(self, x: VariableId) -> tuple[Confactor, ...]:
        return self.families[x]

    def all_confactors(self) -> list[Confactor]:
        return [r for fam in self.families for r in fam]

    def n_vars(self) -> int:
        return len(self.catalog)

    def total_confactor_size(self) -> int:
        return sum(r.size for r in self.all_confactors())

    def total_tabular_size(self) -> int:
        return sum(self.tabular_factor(x).size for x in range(self.n_vars()))

    def tabular_factor(self, x: VariableId) -> Table:
        """Expand the family of ``x`` into one dense conditional table.

        Variables are in ascending id order.  Exactly one family member is
        applicable per assignment, so the blocks written by the members tile
        the table.
        """
        cached = self._tabular_cache.get(x)
        if cached is not None:
            return cached
        fam = self.families[x]
        scope = sorted({v for r in fam for v in r.variables()})
        shape = self.catalog.shape(scope)
        arr = np.zeros(shape)
        for r in fam:
            indexer = tuple(
                r.body.get(v) if v in r.body else slice(None) for v in scope
            )
            sub_vars = [v for v in scope if v not in r.body]
            block = _table_over(r.table, sub_vars, self.catalog)
            arr[indexer] = block
        result = Table(tuple(scope), arr)
        self._tabular_cache[x] = result
        return result

    def validate(self) -> list[str]:
        """All family-invariant violations, as human-readable strings.

        Returns an empty list iff the network is well formed.
        """
        return validate(self)


def _table_over(table: Table, vars: Sequence[VariableId], catalog: DomainCatalog) -> np.ndarray:
    """Array of ``table`` broadcast over the axes of ``vars`` (a superset)."""
    pos = [vars.index(v) for v in table.vars]
    order = np.argsort(pos) if len(pos) > 1 else range(len(pos))
    arr = np.transpose(table.array, order)
    shape = [1] * len(vars)
    for p, dim in zip(sorted(pos), arr.shape):
        shape[p] = dim
    return np.broadcast_to(arr.reshape(shape), catalog.shape(vars))


def validate(net: ContextualBeliefNetwork) -> list[str]:
    cat = net.catalog
    violations: list[str] = []
    for x in range(net.n_vars()):
        name = cat.names[x]
        fam = net.families[x]
        if not fam:
            violations.append(f"{name}: empty family")
            continue
        mentioned: set[int] = set()
        for i, r in enumerate(fam):
            if x not in r.table.vars:
                violations.append(f"{name}: confactor {i} has no {name} in its table")
            for v in r.body.vars():
                if v >= x:
                    violations.append(
                        f"{name}: confactor {i} body mentions non-predecessor {cat.names[v]}"
                    )
                val = r.body.get(v)
                if val is not None and val >= cat.size(v):
                    violations.append(
                        f"{name}: confactor {i} assigns out-of-domain value to {cat.names[v]}"
                    )
            for v in r.table.vars:
                if v != x and v >= x:
                    violations.append(
                        f"{name}: confactor {i} table mentions non-predecessor {cat.names[v]}"
                    )
                if r.table.domain_size(v) != cat.size(v):
                    violations.append(
                        f"{name}: confactor {i} table dimension mismatch for {cat.names[v]}"
                    )
            if not np.all(np.isfinite(r.table.array)) or np.any(r.table.array < 0):
                violations.append(f"{name}: confactor {i} has negative or non-finite entries")
            elif x in r.table.vars:
                sums = r.table.array.sum(axis=r.table.vars.index(x))
                if not np.allclose(sums, 1.0, atol=NORMALIZATION_TOL, rtol=0.0):
                    violations.append(f"{name}: confactor {i} not normalized over {name}")
            mentioned.update(r.body.vars())
        for i, j in itertools.combinations(range(len(fam)), 2):
            if compatible(fam[i].body, fam[j].body):
                violations.append(
                    f"{name}: confactor bodies {i} and {j} are compatible (overlapping cover)"
                )
        # Exhaustiveness by exact counting over the mentioned variables: each
        # body covers one cell per assignment of the mentioned-but-unassigned
        # variables, and the disjoint covers must fill the whole space.
        space = 1
        for v in mentioned:
            space *= cat.size(v)
        covered = 0
        for r in fam:
            cells = 1
            for v in mentioned:
                if v not in r.body:
                    cells *= cat.size(v)
            covered += cells
        if covered != space:
            violations.append(
                f"{name}: bodies cover {covered} of {space} parent-context cells"
            )
    return violations


def from_tabular_cpt(
    catalog: DomainCatalog, x: VariableId, parents: Sequence[VariableId], table: Table
) -> list[Confactor]:
    """Family for a plain conditional probability table: one confactor with
    an empty body."""
    expected = set(parents) | {x}
    if set(table.vars) != expected:
        raise ValueError("table must range over the parents plus the child")
    sums = table.array.sum(axis=table.vars.index(x))
    if not np.allclose(sums, 1.0, atol=NORMALIZATION_TOL, rtol=0.0):
        raise ValueError(f"table not normalized over {catalog.names[x]}")
    return [Confactor(Context(), table, frozenset({x}), frozenset({x}))]


def from_skeleton(
    catalog: DomainCatalog, skeleton: ParentSkeleton, distributions: Sequence[Table]
) -> list[Confactor]:
    """Family from a parent skeleton: one confactor per skeletal pair."""
    x = skeleton.child
    if len(distributions) != len(skeleton.pairs):
        raise ValueError("one distribution required per skeletal pair")
    for ci, cj in itertools.combinations([c for c, _ in skeleton.pairs], 2):
        if compatible(ci, cj):
            raise ValueError("skeleton contexts must be mutually exclusive")
    mentioned = {v for c, _ in skeleton.pairs for v in c.vars()}
    space = math.prod(catalog.size(v) for v in mentioned)
    covered = sum(
        math.prod(catalog.size(v) for v in mentioned if v not in c)
        for c, _ in skeleton.pairs
    )
    if covered != space:
        raise ValueError("skeleton contexts are not exhaustive")
    fam = []
    for (ctx, vs), table in zip(skeleton.pairs, distributions):
        if set(table.vars) != set(vs) | {x}:
            raise ValueError("distribution variables must match the skeletal pair")
        sums = table.array.sum(axis=table.vars.index(x))
        if not np.allclose(sums, 1.0, atol=NORMALIZATION_TOL, rtol=0.0):
            raise ValueError(f"distribution not normalized over {catalog.names[x]}")
        fam.append(Confactor(ctx, table, frozenset({x}), frozenset({x})))
    return fam


def to_document(net: ContextualBeliefNetwork) -> dict:
    cat = net.catalog
    doc: dict = {
        "variables": [
            {"name": cat.names[v], "values": list(cat.domains[v])}
            for v in range(len(cat))
        ],
        "families": [],
    }
    for x in range(net.n_vars()):
        entry = {"child": cat.names[x], "confactors": []}
        for r in net.families[x]:
            entry["confactors"].append(
                {
                    "context": {
                        cat.names[v]: cat.domains[v][val] for v, val in r.body.items()
                    },
                    "vars": [cat.names[v] for v in r.table.vars],
                    "table": [float(v) for v in r.table.flat],
                }
            )
        doc["families"].append(entry)
    return doc


def from_document(doc: dict, force: bool = False) -> ContextualBeliefNetwork:
    try:
        var_entries = doc["variables"]
        fam_entries = doc["families"]
    except (KeyError, TypeError) as exc:
        raise NetworkFormatError(f"missing top-level field: {exc}") from None
    try:
        catalog = DomainCatalog([(e["name"], e["values"]) for e in var_entries])
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkFormatError(f"bad variable declaration: {exc}") from None
    families: list[list[Confactor]] = [[] for _ in range(len(catalog))]
    seen_children: set[int] = set()
    for entry in fam_entries:
        try:
            child = catalog.index(entry["child"])
        except KeyError as exc:
            raise NetworkFormatError(str(exc)) from None
        if child in seen_children:
            raise NetworkFormatError(
                f"duplicate family for variable {catalog.names[child]!r}"
            )
        seen_children.add(child)
        for i, c_entry in enumerate(entry.get("confactors", [])):
            where = f"family of {catalog.names[child]!r}, confactor {i}"
            try:
                body = catalog.context(c_entry.get("context", {}))
                vars = tuple(catalog.index(n) for n in c_entry["vars"])
                table = catalog.table(vars, c_entry["table"])
            except (KeyError, TypeError, ValueError) as exc:
                raise NetworkFormatError(f"{where}: {exc}") from None
            families[child].append(
                Confactor(body, table, frozenset({child}), frozenset({child}))
            )
    missing = [catalog.names[x] for x in range(len(catalog)) if x not in seen_children]
    if missing:
        raise NetworkFormatError(f"variables without families: {missing}")
    net = ContextualBeliefNetwork(catalog, families)
    if not force:
        violations = net.validate()
        if violations:
            raise NetworkFormatError(
                "network failed validation:\n" + "\n".join(violations)
            )
    return net


def save(net: ContextualBeliefNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_document(net), fh, indent=1)
        fh.write("\n")


def load(path, force: bool = False) -> ContextualBeliefNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkFormatError(
                f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None
    return from_document(doc, force=force)


def joint_table(
    net: ContextualBeliefNetwork,
    obs: Optional[Context] = None,
    cap: int = 1 << 22,
) -> Table:
    """Unnormalized joint over the unobserved variables, with the evidence
    substituted in.  Entry = product of the per-family conditional values."""
    obs = obs or Context()
    remaining = [v for v in range(net.n_vars()) if v not in obs]
    space = math.prod(net.catalog.size(v) for v in remaining) if remaining else 1
    if space > cap:
        raise ValueError(f"state space {space} exceeds cap {cap}")
    acc = Table((), np.ones(()))
    for x in range(net.n_vars()):
        factor = set_table(net.tabular_factor(x), obs)
        if not factor.vars:
            acc = Table(acc.vars, acc.array * float(factor.array))
        else:
            acc = table_product(acc, factor)
    return reorder(acc, tuple(sorted(acc.vars)))
