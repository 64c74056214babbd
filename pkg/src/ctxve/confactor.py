"""Contextual factors and the context-aware splitting primitives.

A confactor pairs a body context with a table over disjoint variables; it is
a partial function that only has a value where its body holds.  Engines track
two bookkeeping sets per confactor: ``for_vars``, the variables whose
conditional-probability family this confactor descends from, and
``pure_for``, the subset for which summing the variable out of the table is
guaranteed to produce an all-ones table (so the confactor can be dropped
when that variable is eliminated).
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .tables import (
    Context,
    DomainCatalog,
    Table,
    VariableId,
    compatible,
    set_table,
)

EMPTY: frozenset[int] = frozenset()


class Confactor:
    """Pair of a body context and a table over disjoint variable sets."""

    __slots__ = ("body", "table", "for_vars", "pure_for")

    def __init__(
        self,
        body: Context,
        table: Table,
        for_vars: frozenset[int] = EMPTY,
        pure_for: frozenset[int] = EMPTY,
    ):
        overlap = set(body.vars()) & set(table.vars)
        if overlap:
            raise ValueError(f"body and table share variables: {sorted(overlap)}")
        if not pure_for <= for_vars:
            raise ValueError("pure_for must be a subset of for_vars")
        self.body = body
        self.table = table
        self.for_vars = for_vars
        self.pure_for = pure_for

    def variables(self) -> frozenset[int]:
        return frozenset(self.body.vars()) | frozenset(self.table.vars)

    def involves(self, var: VariableId) -> bool:
        return var in self.table.vars or var in self.body

    @property
    def size(self) -> int:
        return self.table.size

    def replace(self, body=None, table=None, for_vars=None, pure_for=None) -> "Confactor":
        return Confactor(
            self.body if body is None else body,
            self.table if table is None else table,
            self.for_vars if for_vars is None else for_vars,
            self.pure_for if pure_for is None else pure_for,
        )

    def __repr__(self) -> str:
        return f"Confactor(body={self.body!r}, table={self.table!r})"


def applicable(r: Confactor, c: Context) -> bool:
    """True iff the body of ``r`` is compatible with ``c``."""
    return compatible(r.body, c)


def value_at(r: Confactor, c: Context) -> float:
    """Value of context ``c`` with respect to ``r``.

    ``c`` must be compatible with the body and assign every table variable.
    """
    if not applicable(r, c):
        raise ValueError("confactor not applicable on context")
    idx = []
    for v in r.table.vars:
        val = c.get(v)
        if val is None:
            raise ValueError("context does not determine table")
        idx.append(val)
    return float(r.table.array[tuple(idx)])


def split_on_variable(
    catalog: DomainCatalog, r: Confactor, y: VariableId, counters=None
) -> list[Confactor]:
    """Replace ``r`` by one confactor per value of ``y``.

    If ``y`` occurs in the table, each piece selects the matching slice;
    otherwise the table is shared unchanged.  Bookkeeping sets are copied to
    every piece.
    """
    if y in r.body:
        raise ValueError("split on assigned variable")
    dom = catalog.size(y)
    if counters is not None:
        counters.splits += dom - 1
    pieces = []
    for val in range(dom):
        body = r.body.with_assignment(y, val)
        table = set_table(r.table, Context([(y, val)]))
        pieces.append(Confactor(body, table, r.for_vars, r.pure_for))
    return pieces


def split_variable_order(
    r_body: Context, table_vars: Iterable[VariableId], c: Context
) -> list[VariableId]:
    """Order in which a confactor is split on the variables of ``c``.

    Variables appearing in the table come first (splitting them shrinks the
    tables that later splits copy), then the remaining ones; both groups in
    ascending variable id.
    """
    in_table = set(table_vars)
    todo = [v for v in c.vars() if v not in r_body]
    first = [v for v in todo if v in in_table]
    rest = [v for v in todo if v not in in_table]
    return first + rest


def _split_on_context(
    catalog: DomainCatalog,
    r: Confactor,
    c: Context,
    counters=None,
    split_order: Optional[Sequence[VariableId]] = None,
) -> tuple[list[Confactor], Confactor]:
    if not compatible(r.body, c):
        raise ValueError("incompatible contexts")
    order = (
        list(split_order)
        if split_order is not None
        else split_variable_order(r.body, r.table.vars, c)
    )
    expected = {v for v in c.vars() if v not in r.body}
    if set(order) != expected:
        raise ValueError("split order must cover exactly the new variables of the context")
    residuals: list[Confactor] = []
    keep = r
    for v in order:
        target = c.get(v)
        dom = catalog.size(v)
        if counters is not None:
            counters.splits += dom - 1
        for val in range(dom):
            piece = Confactor(
                keep.body.with_assignment(v, val),
                set_table(keep.table, Context([(v, val)])),
                keep.for_vars,
                keep.pure_for,
            )
            if val == target:
                next_keep = piece
            else:
                residuals.append(piece)
        keep = next_keep
    return residuals, keep


def residual(
    catalog: DomainCatalog,
    r: Confactor,
    c: Context,
    counters=None,
    split_order: Optional[Sequence[VariableId]] = None,
) -> list[Confactor]:
    """The split pieces of ``r`` whose bodies are incompatible with ``c``.

    Produced by splitting sequentially on each variable of ``c`` not yet
    assigned in the body; together with :func:`split_keep` the pieces
    partition the coverage of ``r``.
    """
    residuals, _ = _split_on_context(catalog, r, c, counters, split_order)
    return residuals


def split_keep(catalog: DomainCatalog, r: Confactor, c: Context) -> Confactor:
    """The unique non-residual piece of splitting ``r`` on ``c``."""
    _, keep = _split_on_context(catalog, r, c, counters=None)
    return keep


def count_split_pieces(catalog: DomainCatalog, r: Confactor, c: Context) -> int:
    """Number of residual pieces created by splitting ``r`` on ``c``:
    the sum of (domain size - 1) over the new variables, whatever order the
    splits are performed in."""
    if not compatible(r.body, c):
        raise ValueError("incompatible contexts")
    return sum(catalog.size(v) - 1 for v in c.vars() if v not in r.body)


def split(
    catalog: DomainCatalog, r: Confactor, c: Context, counters=None
) -> list[Confactor]:
    """Full split of ``r`` on ``c``: residual pieces plus the kept piece."""
    residuals, keep = _split_on_context(catalog, r, c, counters)
    return residuals + [keep]


