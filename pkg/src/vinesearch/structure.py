"""Regular-vine structures in natural-order triangular-array form.

A structure on ``d`` variables is stored as

* ``order``: a permutation of ``0..d-1``. Column ``e`` of the array belongs
  to variable ``order[e]``; inside the array variables are relabelled so
  that ``order[e]`` becomes ``e`` (natural order).
* ``array``: ``array[t][e]`` for tree ``t`` (0-based) and column
  ``e = 0..d-2-t``, holding natural labels strictly larger than ``e``.

Edge ``(t, e)`` has conditioned set ``{e, array[t][e]}`` and conditioning
set ``{array[0][e], ..., array[t-1][e]}``. Only the first ``trunc_level``
rows are stored; trees beyond the truncation level are not represented.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "EdgeLabel",
    "RVineStructure",
    "StructureError",
    "count_structures",
    "cvine",
    "dvine",
    "enumerate_all",
    "simulate_uniform",
    "validate",
]


class StructureError(ValueError):
    """Raised for arrays that do not encode a regular vine.

    ``tree`` and ``edge`` locate the first failing entry (0-based), or are
    ``None`` for shape problems that are not tied to one edge.
    """

    def __init__(self, message, tree=None, edge=None):
        super().__init__(message)
        self.tree = tree
        self.edge = edge


@dataclass(frozen=True, order=True)
class EdgeLabel:
    conditioned: tuple[int, int]
    conditioning: tuple[int, ...]

    @classmethod
    def make(cls, j, k, cond=()):
        if j == k:
            raise ValueError("conditioned variables must differ")
        cond = tuple(sorted(cond))
        if j in cond or k in cond:
            raise ValueError("conditioning set overlaps conditioned pair")
        return cls(tuple(sorted((j, k))), cond)

    def __str__(self):
        pair = ",".join(map(str, self.conditioned))
        if not self.conditioning:
            return pair
        return pair + "|" + ",".join(map(str, self.conditioning))


def _find_violation(d, array, rows):
    """Return ``(tree, edge, message)`` for the first invalid entry, else None."""
    fullsets = {}  # tree -> {frozenset(full set) -> column}
    for t in range(rows):
        if len(array[t]) != d - 1 - t:
            return t, None, f"row {t} has {len(array[t])} entries, expected {d - 1 - t}"
    for e in range(d - 1):
        seen = set()
        for t in range(min(rows, d - 1 - e)):
            x = array[t][e]
            if not (e < x < d):
                return t, e, f"entry {x} in column {e} must lie in ({e}, {d})"
            if x in seen:
                return t, e, f"entry {x} repeated in column {e}"
            seen.add(x)
    for t in range(rows):
        level = {}
        for e in range(d - 1 - t):
            level[frozenset([e, *(array[s][e] for s in range(t + 1))])] = e
        fullsets[t] = level
    for t in range(1, rows):
        for e in range(d - 1 - t):
            target = frozenset(array[s][e] for s in range(t + 1))
            e2 = fullsets[t - 1].get(target)
            if e2 is None or e2 <= e:
                return t, e, (
                    f"proximity fails for tree {t} edge {e}: the nodes it joins "
                    f"in tree {t - 1} share no common node"
                )
    return None


class RVineStructure:
    """Immutable regular-vine tree sequence.

    Two structures compare equal when they describe the same vine (same
    dimension, truncation level and edge labels), regardless of which of
    the equivalent array representations is stored.
    """

    __slots__ = ("d", "order", "array", "trunc_level", "__dict__")

    def __init__(self, order, array, trunc_level=None, check=True):
        order = tuple(int(v) for v in order)
        d = len(order)
        if d < 2:
            raise StructureError("a vine needs at least two variables")
        if sorted(order) != list(range(d)):
            raise StructureError(f"order {order} is not a permutation of 0..{d - 1}")
        if trunc_level is None:
            trunc_level = d - 1
        trunc_level = int(trunc_level)
        if not 1 <= trunc_level <= d - 1:
            raise StructureError(f"trunc_level must lie in 1..{d - 1}")
        if len(array) < trunc_level:
            raise StructureError(f"array has {len(array)} rows, need {trunc_level}")
        self.d = d
        self.order = order
        self.array = tuple(tuple(int(v) for v in row) for row in array[:trunc_level])
        self.trunc_level = trunc_level
        if check:
            validate(self)

    # -- views -----------------------------------------------------------
    def entry(self, t, e):
        """Original label of the partner variable of edge ``(t, e)``."""
        return self.order[self.array[t][e]]

    def edge_label(self, t, e):
        cond = [self.order[self.array[s][e]] for s in range(t)]
        return EdgeLabel.make(self.order[e], self.order[self.array[t][e]], cond)

    def edges(self, t):
        return [self.edge_label(t, e) for e in range(self.d - 1 - t)]

    @cached_property
    def key(self):
        labels = frozenset(
            self.edge_label(t, e)
            for t in range(self.trunc_level)
            for e in range(self.d - 1 - t)
        )
        return (self.d, self.trunc_level, labels)

    def trees(self):
        """Edge lists per tree; nodes of tree t+1 are edge labels of tree t."""
        return [self.edges(t) for t in range(self.trunc_level)]

    @cached_property
    def sources(self):
        """Where the second argument of each edge comes from.

        ``sources[t][e]`` is ``(e2, direct)``: for ``t == 0`` it is
        ``(array[0][e], True)`` (the raw variable); for ``t >= 1`` it names
        the column ``e2`` whose tree ``t-1`` edge produced the needed
        conditional value, and whether it is that column's own variable
        (``direct``) or its partner.
        """
        d = self.d
        out = [[(self.array[0][e], True) for e in range(d - 1)]]
        for t in range(1, self.trunc_level):
            prev = {}
            for e2 in range(d - t):
                prev[frozenset([e2, *(self.array[s][e2] for s in range(t))])] = e2
            row = []
            for e in range(d - 1 - t):
                x = self.array[t][e]
                e2 = prev[frozenset([x, *(self.array[s][e] for s in range(t))])]
                row.append((e2, x == e2))
            out.append(row)
        return out

    def truncate(self, trunc_level):
        trunc_level = min(int(trunc_level), self.trunc_level)
        return RVineStructure(self.order, self.array, trunc_level, check=False)

    # -- text format -----------------------------------------------------
    def to_text(self):
        lines = [f"{self.d} {self.trunc_level}", " ".join(map(str, self.order))]
        for t in range(self.trunc_level):
            lines.append(";".join(str(self.entry(t, e)) for e in range(self.d - 1 - t)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        return cls._from_lines(lines)[0]

    @classmethod
    def _from_lines(cls, lines):
        try:
            d, trunc = (int(v) for v in lines[0].split())
            order = [int(v) for v in lines[1].split()]
            inv = {v: i for i, v in enumerate(order)}
            array = []
            for t in range(trunc):
                row = [int(v) for v in lines[2 + t].replace(";", " ").split()]
                array.append([inv[v] for v in row])
        except (ValueError, IndexError, KeyError) as exc:
            raise StructureError(f"malformed structure text: {exc}") from None
        if len(order) != d:
            raise StructureError(f"order has {len(order)} entries, expected {d}")
        return cls(order, array, trunc), 2 + trunc

    # -- dunder ----------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, RVineStructure):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"RVineStructure(order={list(self.order)}, array={[list(r) for r in self.array]}, trunc_level={self.trunc_level})"


def validate(s):
    """Check the structure invariants; raise :class:`StructureError` if any fail."""
    if s.d < 2:
        raise StructureError("a vine needs at least two variables")
    hit = _find_violation(s.d, s.array, s.trunc_level)
    if hit is not None:
        t, e, msg = hit
        raise StructureError(msg, tree=t, edge=e)
    return True


def count_structures(d):
    """Number of regular vines on ``d`` labelled variables."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if d == 2:
        return 1
    return math.factorial(d) // 2 * 2 ** ((d - 3) * (d - 2) // 2)


def _check_perm(order):
    order = [int(v) for v in order]
    if sorted(order) != list(range(len(order))) or len(order) < 2:
        raise ValueError(f"{order} is not a permutation of 0..{len(order) - 1}")
    return order


def dvine(order):
    """Path-shaped vine visiting the variables in ``order``."""
    order = _check_perm(order)
    d = len(order)
    array = [[e + 1 + t for e in range(d - 1 - t)] for t in range(d - 1)]
    return RVineStructure(order, array)


def cvine(order):
    """Star-shaped vine; ``order[t]`` is the root of tree ``t``."""
    order = _check_perm(order)
    d = len(order)
    array = [[d - 1 - t] * (d - 1 - t) for t in range(d - 1)]
    return RVineStructure(order[::-1], array)


# -- uniform sampling ----------------------------------------------------

def _subvine_fullsets(d, columns, first):
    """Full sets of edges of the sub-vine on columns ``first..d-2``, by tree."""
    levels = {}
    for e2 in range(first, d - 1):
        col = columns[e2]
        acc = {e2}
        for t, x in enumerate(col):
            acc = acc | {x}
            levels.setdefault(t, set()).add(frozenset(acc))
    return levels


def _column_choices(d, e, levels):
    """Valid column extensions for variable ``e`` with completion counts.

    Returns ``(counts, k)`` where ``counts[D]`` is the number of valid
    completions of a column whose first ``|D|`` entries form the set D.
    """
    k = d - 1 - e
    pool = range(e + 1, d)
    counts = {}

    def nxt(D):
        t = len(D)
        if t == 0:
            return [x for x in pool]
        lv = levels.get(t - 1, ())
        return [x for x in pool if x not in D and (D | {x}) in lv]

    def count(D):
        c = counts.get(D)
        if c is not None:
            return c
        if len(D) == k:
            c = 1
        else:
            c = sum(count(D | {x}) for x in nxt(D))
        counts[D] = c
        return c

    count(frozenset())
    return counts, nxt


def _sample_column(d, e, columns, rng):
    levels = _subvine_fullsets(d, columns, e + 1)
    counts, nxt = _column_choices(d, e, levels)
    D = frozenset()
    col = []
    k = d - 1 - e
    while len(col) < k:
        opts = [x for x in nxt(D) if counts.get(D | {x}, 0) > 0]
        total = sum(counts[D | {x}] for x in opts)
        r = int(rng.integers(0, total))
        for x in opts:
            c = counts[D | {x}]
            if r < c:
                break
            r -= c
        col.append(x)
        D = D | {x}
    return col


def _columns_to_array(d, columns):
    return [[columns[e][t] for e in range(d - 1 - t)] for t in range(d - 1)]


def simulate_uniform(d, rng=None, trunc_level=None):
    """Draw a vine uniformly from all ``count_structures(d)`` vines.

    ``rng`` is a :class:`numpy.random.Generator` (or a seed for one).
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = np.random.default_rng(rng)
    order = rng.permutation(d)
    columns = {d - 2: [d - 1]}
    for e in range(d - 3, -1, -1):
        columns[e] = _sample_column(d, e, columns, rng)
    return RVineStructure(order, _columns_to_array(d, columns), trunc_level, check=False)


def _all_columns(d, e, columns):
    levels = _subvine_fullsets(d, columns, e + 1)
    counts, nxt = _column_choices(d, e, levels)
    k = d - 1 - e

    def walk(D, prefix):
        if len(prefix) == k:
            yield list(prefix)
            return
        for x in nxt(D):
            if counts.get(D | {x}, 0):
                yield from walk(D | {x}, prefix + [x])

    return list(walk(frozenset(), []))


def natural_arrays(d):
    """All valid natural-order arrays on ``d`` variables."""
    out = []

    def rec(e, columns):
        if e < 0:
            out.append(_columns_to_array(d, columns))
            return
        for col in _all_columns(d, e, columns):
            columns[e] = col
            rec(e - 1, columns)
        columns.pop(e, None)

    rec(d - 3, {d - 2: [d - 1]})
    return out


def _natural_arrays_bruteforce(d):
    """All arrays passing the validity check, by trying every column permutation."""
    per_col = [list(itertools.permutations(range(e + 1, d))) for e in range(d - 1)]
    out = []
    for cols in itertools.product(*per_col):
        array = [[cols[e][t] for e in range(d - 1 - t)] for t in range(d - 1)]
        if _find_violation(d, array, d - 1) is None:
            out.append(array)
    return out


def enumerate_all(d):
    """Every vine on ``d <= 5`` variables, one representative each."""
    if d > 5:
        raise ValueError("enumeration is limited to d <= 5")
    if d < 2:
        raise ValueError("d must be at least 2")
    arrays = _natural_arrays_bruteforce(d)
    seen = {}
    for order in itertools.permutations(range(d)):
        for array in arrays:
            s = RVineStructure(order, array, check=False)
            seen.setdefault(s.key, s)
    return sorted(seen.values(), key=lambda s: s.to_text())
