"""Discrete variables, contexts and the dense-table algebra shared by all engines.

A table stores a non-negative binary64 value for every joint assignment of an
ordered variable list.  The flat layout is lexicographic with the *last*
listed variable varying fastest, which is exactly C order over the
per-variable axes, so tables are held as numpy arrays shaped by their
domain sizes.

The four primitives (``set_table``, ``product``, ``sum_out``, ``add_tables``)
accept an optional :class:`~ctxve.counters.CostCounters`; cost accounting is
owned by the calling engine, never by this module.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import IncompatibleContextsError

VariableId = int


class DomainCatalog:
    """Named discrete variables with finite, ordered value lists.

    Declaration order is the total variable ordering used everywhere else:
    variable ``i`` may only depend on variables with a smaller index.
    """

    __slots__ = ("names", "domains", "_by_name")

    def __init__(self, variables: Sequence[tuple[str, Sequence[str]]]):
        names = []
        domains = []
        by_name: dict[str, int] = {}
        for name, values in variables:
            if name in by_name:
                raise ValueError(f"duplicate variable name: {name!r}")
            values = tuple(values)
            if not values:
                raise ValueError(f"variable {name!r} has an empty domain")
            if len(set(values)) != len(values):
                raise ValueError(f"variable {name!r} has duplicate value labels")
            by_name[name] = len(names)
            names.append(name)
            domains.append(values)
        self.names: tuple[str, ...] = tuple(names)
        self.domains: tuple[tuple[str, ...], ...] = tuple(domains)
        self._by_name = by_name

    def __len__(self) -> int:
        return len(self.names)

    def size(self, var: VariableId) -> int:
        return len(self.domains[var])

    def index(self, name: str) -> VariableId:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown variable: {name!r}") from None

    def value_index(self, var: VariableId, label: str) -> int:
        try:
            return self.domains[var].index(label)
        except ValueError:
            raise KeyError(
                f"unknown value {label!r} for variable {self.names[var]!r}"
            ) from None

    def shape(self, vars: Sequence[VariableId]) -> tuple[int, ...]:
        return tuple(self.size(v) for v in vars)

    def table(self, vars: Sequence[VariableId], values: Iterable[float]) -> "Table":
        """Build a table over ``vars`` from flat values in layout order."""
        vars = tuple(vars)
        arr = np.asarray(list(values), dtype=np.float64).reshape(self.shape(vars))
        return Table(vars, arr)

    def context(self, assignments: Mapping[str, str]) -> "Context":
        """Context from a name->label mapping."""
        items = []
        for name, label in assignments.items():
            var = self.index(name)
            items.append((var, self.value_index(var, label)))
        return Context(items)

    def parse_context(self, text: str) -> "Context":
        """Parse ``"a=true,b=false"`` into a context; empty text is the empty context."""
        text = text.strip()
        if not text:
            return Context()
        pairs = {}
        for chunk in text.split(","):
            if "=" not in chunk:
                raise ValueError(f"expected name=value, got {chunk!r}")
            name, label = chunk.split("=", 1)
            pairs[name.strip()] = label.strip()
        return self.context(pairs)

    def format_context(self, context: "Context") -> str:
        return ",".join(
            f"{self.names[v]}={self.domains[v][val]}" for v, val in context.items()
        )

    def assignments(self, vars: Sequence[VariableId]) -> Iterator[tuple[int, ...]]:
        """All joint value-index tuples for ``vars`` in layout order."""
        return np.ndindex(*self.shape(vars))  # type: ignore[return-value]


class Context:
    """Partial assignment of value indices to variables.

    Immutable and hashable; the empty context is valid and compatible with
    everything.  Items are kept sorted by variable id.
    """

    __slots__ = ("_items",)

    def __init__(self, items: Iterable[tuple[VariableId, int]] = ()):
        pairs = sorted(items)
        seen: dict[int, int] = {}
        for var, val in pairs:
            if var in seen and seen[var] != val:
                raise IncompatibleContextsError("incompatible contexts")
            seen[var] = val
        self._items: tuple[tuple[int, int], ...] = tuple(sorted(seen.items()))

    def items(self) -> tuple[tuple[int, int], ...]:
        return self._items

    def vars(self) -> tuple[VariableId, ...]:
        return tuple(v for v, _ in self._items)

    def get(self, var: VariableId) -> Optional[int]:
        for v, val in self._items:
            if v == var:
                return val
            if v > var:
                return None
        return None

    def __contains__(self, var: VariableId) -> bool:
        return self.get(var) is not None

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, Context) and self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        inner = ",".join(f"{v}={val}" for v, val in self._items)
        return f"Context({inner})"

    def with_assignment(self, var: VariableId, value: int) -> "Context":
        return Context(self._items + ((var, value),))

    def without(self, var: VariableId) -> "Context":
        return Context(tuple(p for p in self._items if p[0] != var))

    def restricted_to(self, vars: Iterable[VariableId]) -> "Context":
        keep = set(vars)
        return Context(tuple(p for p in self._items if p[0] in keep))


def compatible(c1: Context, c2: Context) -> bool:
    """False iff some variable is assigned different values in the two contexts."""
    a, b = c1.items(), c2.items()
    i = j = 0
    while i < len(a) and j < len(b):
        va, vb = a[i][0], b[j][0]
        if va == vb:
            if a[i][1] != b[j][1]:
                return False
            i += 1
            j += 1
        elif va < vb:
            i += 1
        else:
            j += 1
    return True


def context_union(c1: Context, c2: Context) -> Context:
    """The context assigning every variable assigned in either input."""
    if not compatible(c1, c2):
        raise IncompatibleContextsError("incompatible contexts")
    return Context(c1.items() + c2.items())


class Table:
    """Dense factor over an ordered variable list.

    ``array.shape`` holds the per-variable domain sizes, so a table is
    self-describing; an empty variable list is a scalar with one entry.
    """

    __slots__ = ("vars", "array")

    def __init__(self, vars: Sequence[VariableId], array: np.ndarray):
        vars = tuple(vars)
        if len(set(vars)) != len(vars):
            raise ValueError("duplicate variables in table")
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != len(vars):
            raise ValueError(
                f"array rank {array.ndim} does not match {len(vars)} variables"
            )
        self.vars = vars
        self.array = array

    @classmethod
    def scalar(cls, value: float) -> "Table":
        return cls((), np.float64(value).reshape(()))

    @property
    def size(self) -> int:
        return int(self.array.size)

    @property
    def flat(self) -> np.ndarray:
        return self.array.reshape(-1)

    def domain_size(self, var: VariableId) -> int:
        return self.array.shape[self.vars.index(var)]

    def involves(self, var: VariableId) -> bool:
        return var in self.vars

    def lookup(self, assignment: Mapping[VariableId, int]) -> float:
        """Entry at a full assignment of this table's variables."""
        idx = tuple(assignment[v] for v in self.vars)
        return float(self.array[idx])

    def __repr__(self) -> str:
        return f"Table(vars={self.vars}, shape={self.array.shape})"


def _broadcast_to(table: Table, out_vars: Sequence[VariableId]) -> np.ndarray:
    """View of ``table`` positioned for broadcasting over ``out_vars`` axes."""
    pos = [out_vars.index(v) for v in table.vars]
    order = np.argsort(pos) if pos else []
    arr = np.transpose(table.array, order) if len(pos) > 1 else table.array
    shape = [1] * len(out_vars)
    for p, dim in zip(sorted(pos), arr.shape):
        shape[p] = dim
    return arr.reshape(shape)


def set_table(f: Table, c: Context, counters=None) -> Table:
    """Fix the variables of ``c`` that occur in ``f``; project onto the rest.

    Variables of ``c`` absent from ``f`` are ignored; the empty context is a
    no-op returning ``f`` itself.
    """
    indexer = []
    out_vars = []
    touched = False
    for v in f.vars:
        val = c.get(v)
        if val is None:
            indexer.append(slice(None))
            out_vars.append(v)
        else:
            indexer.append(val)
            touched = True
    if not touched:
        return f
    return Table(tuple(out_vars), f.array[tuple(indexer)])


def _union_vars(f1: Table, f2: Table) -> tuple[VariableId, ...]:
    return f1.vars + tuple(v for v in f2.vars if v not in f1.vars)


def product(f1: Table, f2: Table, counters=None) -> Table:
    """Pointwise product over the union of the variable lists.

    Result variables are ``f1``'s followed by ``f2``'s novel ones.  The
    multiplication counter grows by the result's entry count.
    """
    out_vars = _union_vars(f1, f2)
    arr = _broadcast_to(f1, out_vars) * _broadcast_to(f2, out_vars)
    result = Table(out_vars, arr)
    if counters is not None:
        counters.multiplications += result.size
    return result


def add_tables(f1: Table, f2: Table, counters=None) -> Table:
    """Pointwise sum with the same variable-union semantics as ``product``."""
    out_vars = _union_vars(f1, f2)
    arr = _broadcast_to(f1, out_vars) + _broadcast_to(f2, out_vars)
    result = Table(out_vars, arr)
    if counters is not None:
        counters.additions += result.size
    return result


def sum_out(f: Table, y: VariableId, counters=None) -> Table:
    """Sum ``y`` out of ``f``; the result drops the ``y`` dimension."""
    if y not in f.vars:
        raise ValueError("variable not in table")
    axis = f.vars.index(y)
    dom = f.array.shape[axis]
    out_vars = tuple(v for v in f.vars if v != y)
    result = Table(out_vars, f.array.sum(axis=axis))
    if counters is not None:
        counters.additions += (dom - 1) * result.size
    return result


def reorder(table: Table, vars: Sequence[VariableId]) -> Table:
    """Same table with its axes permuted into the given variable order."""
    vars = tuple(vars)
    if table.vars == vars:
        return table
    if set(table.vars) != set(vars):
        raise ValueError("reorder must keep the same variable set")
    perm = [table.vars.index(v) for v in vars]
    return Table(vars, np.transpose(table.array, perm))


def multiply_all_sum_out(
    tables: Sequence[Table], y: VariableId, counters=None
) -> tuple[Table, list[int]]:
    """Left-fold product of ``tables`` with the final product fused into the
    sum over ``y``.

    Intermediate pairwise products are materialized; the last product is
    only accounted for (its multiplications equal the virtual product size)
    and never recorded as a created table.  Returns the summed result and
    the sizes of the tables actually materialized (intermediates + result).
    """
    if not tables:
        raise ValueError("nothing to multiply")
    created: list[int] = []
    if len(tables) == 1:
        result = sum_out(tables[0], y, counters)
        created.append(result.size)
        return result, created
    acc = tables[0]
    for t in tables[1:-1]:
        acc = product(acc, t, counters)
        created.append(acc.size)
    last = tables[-1]
    out_vars = _union_vars(acc, last)
    virtual = _broadcast_to(acc, out_vars) * _broadcast_to(last, out_vars)
    if counters is not None:
        counters.multiplications += int(virtual.size)
    axis = out_vars.index(y)
    dom = virtual.shape[axis]
    result = Table(tuple(v for v in out_vars if v != y), virtual.sum(axis=axis))
    if counters is not None:
        counters.additions += (dom - 1) * result.size
    created.append(result.size)
    return result, created
