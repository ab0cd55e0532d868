"""Instances as set-valued functors with typed attributes.

Rows are opaque string ids scoped to one node of one instance.  Attribute
values are strings, integers, or labelled nulls (equal only to the same
label).  Union is disjoint union followed by relationalization, the quotient
by observational equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .core import (
    ConstPath,
    Path,
    Schema,
    attr_table,
    attrs_of,
    edge_table,
    edges_from,
)
from .errors import LimitExceeded, SchemaError, ValidationError


@dataclass(frozen=True)
class LabelledNull:
    """A Skolem value; compares equal only to a null with the same label."""

    label: str

    def __str__(self):
        return f"?{self.label}"


Value = Union[str, int, LabelledNull]


def value_type(v: Value) -> str:
    if isinstance(v, str):
        return "string"
    if isinstance(v, bool):
        raise ValidationError("boolean is not an attribute value")
    if isinstance(v, int):
        return "integer"
    raise ValidationError(f"not an attribute value: {v!r}")


class Instance:
    """A set-valued functor: row sets per node, total functions per edge/attribute.

    Treated as immutable after construction.
    """

    def __init__(self, schema: Schema, rows, edge_fn, attr_fn):
        self.schema = schema
        self.rows = {n: tuple(sorted(rows.get(n, ()))) for n in schema.nodes}
        self.edge_fn = {k: dict(v) for k, v in edge_fn.items()}
        self.attr_fn = {k: dict(v) for k, v in attr_fn.items()}

    def node_rows(self, node):
        return self.rows[node]

    def edge(self, node, name):
        return self.edge_fn.get((node, name), {})

    def attr(self, node, name):
        return self.attr_fn.get((node, name), {})

    def attr_tuple(self, node, row):
        return tuple(self.attr(node, name)[row] for (name, _ty) in attrs_of(self.schema, node))

    def total_rows(self):
        return sum(len(r) for r in self.rows.values())


def empty_instance(schema: Schema) -> Instance:
    return Instance(schema, {}, {}, {})


def eval_path(I: Instance, p, r):
    """Apply the edge/attribute functions along a path starting from row r."""
    if isinstance(p, ConstPath):
        return p.value
    et = edge_table(I.schema)
    node = p.source
    cur = r
    for step in p.steps:
        cur = I.edge(node, step)[cur]
        node = et[(node, step)]
    if p.attr is not None:
        return I.attr(node, p.attr)[cur]
    return cur


def validate_instance(I: Instance):
    """Totality of edge/attribute functions, typing, and pointwise equations."""
    s = I.schema
    for (name, src, tgt) in s.edges:
        fn = I.edge(src, name)
        if set(fn) != set(I.rows[src]):
            raise ValidationError(
                f"edge {name!r} on {src!r} is not total on the declared row set"
            )
        targets = set(I.rows[tgt])
        for r, v in fn.items():
            if v not in targets:
                raise ValidationError(
                    f"edge {name!r} sends row {r!r} to dangling target {v!r}"
                )
    for (name, src, ty) in s.attributes:
        fn = I.attr(src, name)
        if set(fn) != set(I.rows[src]):
            raise ValidationError(
                f"attribute {name!r} on {src!r} is not total on the declared row set"
            )
        for r, v in fn.items():
            if not isinstance(v, LabelledNull) and value_type(v) != ty:
                raise ValidationError(
                    f"attribute {name!r}: row {r!r} has {value_type(v)} value, expected {ty}"
                )
    for eq in s.equations:
        for r in I.rows[eq.lhs.source]:
            lv = eval_path(I, eq.lhs, r)
            rv = eval_path(I, eq.rhs, r)
            if lv != rv:
                raise ValidationError(
                    f"equation {eq} violated at node {eq.lhs.source!r}, row {r!r}: "
                    f"{lv!r} != {rv!r}"
                )


def disjoint_union(I: Instance, J: Instance) -> Instance:
    if I.schema != J.schema:
        raise SchemaError("disjoint_union requires instances on the same schema")
    s = I.schema

    def tag(side, r):
        return f"{side}.{r}"

    rows = {
        n: [tag("L", r) for r in I.rows[n]] + [tag("R", r) for r in J.rows[n]]
        for n in s.nodes
    }
    edge_fn = {}
    for (name, src, _tgt) in s.edges:
        m = {}
        for r, v in I.edge(src, name).items():
            m[tag("L", r)] = tag("L", v)
        for r, v in J.edge(src, name).items():
            m[tag("R", r)] = tag("R", v)
        edge_fn[(src, name)] = m
    attr_fn = {}
    for (name, src, _ty) in s.attributes:
        m = {}
        for r, v in I.attr(src, name).items():
            m[tag("L", r)] = v
        for r, v in J.attr(src, name).items():
            m[tag("R", r)] = v
        attr_fn[(src, name)] = m
    return Instance(s, rows, edge_fn, attr_fn)


def disjoint_union_many(instances) -> Instance:
    """n-ary disjoint union with flat index tags (avoids nested re-tagging)."""
    instances = list(instances)
    if not instances:
        raise SchemaError("disjoint_union_many needs at least one instance")
    s = instances[0].schema
    if any(inst.schema != s for inst in instances):
        raise SchemaError("disjoint_union requires instances on the same schema")
    rows = {n: [] for n in s.nodes}
    edge_fn = {(src, name): {} for (name, src, _t) in s.edges}
    attr_fn = {(src, name): {} for (name, src, _t) in s.attributes}
    for i, inst in enumerate(instances):
        for n in s.nodes:
            rows[n].extend(f"{i}.{r}" for r in inst.rows[n])
        for (name, src, _tgt) in s.edges:
            m = edge_fn[(src, name)]
            for r, v in inst.edge(src, name).items():
                m[f"{i}.{r}"] = f"{i}.{v}"
        for (name, src, _ty) in s.attributes:
            m = attr_fn[(src, name)]
            for r, v in inst.attr(src, name).items():
                m[f"{i}.{r}"] = v
    return Instance(s, rows, edge_fn, attr_fn)


def relationalize(I: Instance) -> Instance:
    """Quotient by observational equivalence (partition refinement to fixpoint).

    Initial blocks key on (node, direct attribute tuple); refinement splits by
    the vector of edge-target blocks.  Rows merge iff every attribute-valued
    path agrees on them.
    """
    s = I.schema
    block: dict[tuple[str, str], int] = {}
    keys: dict = {}
    next_id = 0
    for n in sorted(s.nodes):
        for r in I.rows[n]:
            k = (n, I.attr_tuple(n, r))
            if k not in keys:
                keys[k] = next_id
                next_id = next_id + 1
            block[(n, r)] = keys[k]
    changed = True
    while changed:
        changed = False
        keys = {}
        new_block = {}
        next_id = 0
        for n in sorted(s.nodes):
            outgoing = edges_from(s, n)
            for r in I.rows[n]:
                k = (
                    block[(n, r)],
                    tuple(block[(tgt, I.edge(n, name)[r])] for (name, tgt) in outgoing),
                )
                if k not in keys:
                    keys[k] = next_id
                    next_id = next_id + 1
                new_block[(n, r)] = keys[k]
        if new_block != block:
            changed = True
            block = new_block
    # representative per block: smallest row id
    rep: dict[tuple[str, int], str] = {}
    for n in sorted(s.nodes):
        for r in I.rows[n]:
            b = (n, block[(n, r)])
            if b not in rep or r < rep[b]:
                rep[b] = r
    new_id = {(n, r): rep[(n, block[(n, r)])] for n in s.nodes for r in I.rows[n]}
    rows = {n: sorted({new_id[(n, r)] for r in I.rows[n]}) for n in s.nodes}
    edge_fn = {}
    for (name, src, tgt) in s.edges:
        edge_fn[(src, name)] = {
            new_id[(src, r)]: new_id[(tgt, I.edge(src, name)[r])] for r in I.rows[src]
        }
    attr_fn = {}
    for (name, src, _ty) in s.attributes:
        attr_fn[(src, name)] = {
            new_id[(src, r)]: I.attr(src, name)[r] for r in I.rows[src]
        }
    return Instance(s, rows, edge_fn, attr_fn)


def union(I: Instance, J: Instance) -> Instance:
    """Disjoint union followed by relationalization."""
    return relationalize(disjoint_union(I, J))


def _color_refine(I: Instance, J: Instance):
    """Joint color refinement; returns per-instance coloring or None on mismatch."""
    s = I.schema
    colors: dict = {}

    def key0(inst, n, r):
        return (n, inst.attr_tuple(n, r))

    cI = {}
    cJ = {}
    for n in sorted(s.nodes):
        for r in I.rows[n]:
            cI[(n, r)] = colors.setdefault(key0(I, n, r), len(colors))
        for r in J.rows[n]:
            cJ[(n, r)] = colors.setdefault(key0(J, n, r), len(colors))
    for _ in range(I.total_rows() + J.total_rows() + 1):
        colors = {}
        nI, nJ = {}, {}
        for n in sorted(s.nodes):
            outgoing = edges_from(s, n)
            for r in I.rows[n]:
                k = (cI[(n, r)], tuple(cI[(tgt, I.edge(n, e)[r])] for (e, tgt) in outgoing))
                nI[(n, r)] = colors.setdefault(k, len(colors))
            for r in J.rows[n]:
                k = (cJ[(n, r)], tuple(cJ[(tgt, J.edge(n, e)[r])] for (e, tgt) in outgoing))
                nJ[(n, r)] = colors.setdefault(k, len(colors))
        if nI == cI and nJ == cJ:
            break
        cI, cJ = nI, nJ
    return cI, cJ


def iso_check(I: Instance, J: Instance) -> bool:
    """True iff a schema-preserving bijective natural transformation exists."""
    if I.schema != J.schema:
        return False
    s = I.schema
    for n in s.nodes:
        if len(I.rows[n]) != len(J.rows[n]):
            return False
    cI, cJ = _color_refine(I, J)
    from collections import Counter

    if Counter(cI.values()) != Counter(cJ.values()):
        return False
    pairs = [(n, r) for n in sorted(s.nodes) for r in I.rows[n]]
    assignment: dict[tuple[str, str], str] = {}
    used: set[tuple[str, str]] = set()

    def consistent(n, r, t):
        for (e, tgt) in edges_from(s, n):
            img = I.edge(n, e)[r]
            if (tgt, img) in assignment and assignment[(tgt, img)] != J.edge(n, e)[t]:
                return False
        # incoming edges from already-assigned rows
        for (e, src, tgt) in s.edges:
            if tgt != n:
                continue
            for r2 in I.rows[src]:
                if (src, r2) in assignment and I.edge(src, e)[r2] == r:
                    if J.edge(src, e)[assignment[(src, r2)]] != t:
                        return False
        return True

    def search(i):
        if i == len(pairs):
            return True
        n, r = pairs[i]
        for t in J.rows[n]:
            if (n, t) in used or cJ[(n, t)] != cI[(n, r)]:
                continue
            if not consistent(n, r, t):
                continue
            assignment[(n, r)] = t
            used.add((n, t))
            if search(i + 1):
                return True
            del assignment[(n, r)]
            used.discard((n, t))
        return False

    return search(0)


def enumerate_homs(I: Instance, J: Instance, limit: int = 1_000_000) -> int:
    """Number of natural transformations I -> J (exact attribute preservation)."""
    if I.schema != J.schema:
        raise SchemaError("enumerate_homs requires instances on the same schema")
    s = I.schema
    pairs = [(n, r) for n in sorted(s.nodes) for r in I.rows[n]]
    assignment: dict[tuple[str, str], str] = {}
    count = 0

    incoming = {n: [(e, src) for (e, src, tgt) in s.edges if tgt == n] for n in s.nodes}

    def consistent(n, r, t):
        if I.attr_tuple(n, r) != J.attr_tuple(n, t):
            return False
        for (e, tgt) in edges_from(s, n):
            img = I.edge(n, e)[r]
            if (tgt, img) in assignment and assignment[(tgt, img)] != J.edge(n, e)[t]:
                return False
        for (e, src) in incoming[n]:
            for r2 in I.rows[src]:
                if (src, r2) in assignment and I.edge(src, e)[r2] == r:
                    if J.edge(src, e)[assignment[(src, r2)]] != t:
                        return False
        return True

    def search(i):
        nonlocal count
        if i == len(pairs):
            count += 1
            if count > limit:
                raise LimitExceeded(f"more than {limit} homomorphisms")
            return
        n, r = pairs[i]
        for t in J.rows[n]:
            if consistent(n, r, t):
                assignment[(n, r)] = t
                search(i + 1)
                del assignment[(n, r)]

    search(0)
    return count


def attributeless_nodes(s: Schema) -> list[str]:
    """Nodes with no attribute-valued path out of them; such rows collapse under relationalize."""
    at = attr_table(s)
    has = {n for n in s.nodes if any(src == n for (src, _a) in at)}
    changed = True
    while changed:
        changed = False
        for (_name, src, tgt) in s.edges:
            if tgt in has and src not in has:
                has.add(src)
                changed = True
    return sorted(set(s.nodes) - has)
