"""Cost instrumentation shared by the inference engines.

Counters are owned by one engine instance for one query; the table algebra
only increments what it is handed.  ``max_table_size`` tracks the largest
single table materialized while eliminating; ``max_elim_size`` tracks the
largest per-elimination size metric, whose meaning is engine-specific (for
the tabular engine it is the summed size of the tables created during one
elimination, for the contextual engines it is the total size of the factor
multisets produced by one elimination).
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class EliminationRecord:
    """Per-elimination accounting: the sizes of the tables created while
    eliminating ``variable`` and the engine's size metric for the step."""

    variable: int
    created: tuple[int, ...]
    size: int


@dataclass
class CostCounters:
    multiplications: int = 0
    additions: int = 0
    splits: int = 0
    max_table_size: int = 0
    max_elim_size: int = 0
    eliminations: list[EliminationRecord] = field(default_factory=list)

    def note_tables(self, sizes) -> None:
        for s in sizes:
            if s > self.max_table_size:
                self.max_table_size = s

    def record_elimination(self, variable: int, created, size: int) -> None:
        created = tuple(created)
        self.note_tables(created)
        if size > self.max_elim_size:
            self.max_elim_size = size
        self.eliminations.append(EliminationRecord(variable, created, size))

    def elimination_for(self, variable: int) -> EliminationRecord:
        for rec in self.eliminations:
            if rec.variable == variable:
                return rec
        raise KeyError(f"no elimination recorded for variable {variable}")
