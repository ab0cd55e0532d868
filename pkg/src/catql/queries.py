"""select/from/where queries: typechecking, direct evaluation by joins, and
desugaring into a sigma . pi . delta migration.

Direct evaluation uses ascending-cardinality binding order with hash joins on
applicable equalities, then relationalizes (set semantics).  Desugaring only
accepts conjunctive queries; disjunction is handled by splitting into
conjunctive subqueries and unioning their results.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

from .core import (
    DEFAULT_BOUND,
    ConstPath,
    Mapping,
    Path,
    PathEquation,
    Schema,
    attr_table,
    edge_table,
    make_schema,
)
from .errors import DesugarError, TypecheckError
from .instances import Instance, eval_path, relationalize, union
from .migration import delta, pi, sigma


@dataclass(frozen=True)
class PathExpr:
    """A variable followed by edge steps, possibly ending in an attribute."""

    var: str
    steps: tuple[str, ...] = ()

    def __str__(self):
        return ".".join((self.var,) + self.steps)


@dataclass(frozen=True)
class Literal:
    value: Union[str, int]

    def __str__(self):
        return '"%s"' % self.value if isinstance(self.value, str) else str(self.value)


Term = Union[PathExpr, Literal]


@dataclass(frozen=True)
class Clause:
    lhs: Term
    rhs: Term

    def __str__(self):
        return f"{self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class Group:
    """A disjunction of clauses; a singleton group is a plain conjunct."""

    alternatives: tuple[Clause, ...]

    def __str__(self):
        if len(self.alternatives) == 1:
            return str(self.alternatives[0])
        return "(" + " or ".join(str(c) for c in self.alternatives) + ")"


@dataclass(frozen=True)
class SelectItem:
    alias: str
    expr: PathExpr


@dataclass(frozen=True)
class Query:
    bindings: tuple[tuple[str, str], ...]  # (variable, node)
    where: tuple[Group, ...]
    selects: tuple[SelectItem, ...]

    def is_conjunctive(self):
        return all(len(g.alternatives) == 1 for g in self.where)


@dataclass
class Resolution:
    """Typechecking result: sort of every term occurrence."""

    expr_sort: dict  # PathExpr -> ("row", node) | ("attr", node-path Path, base type)
    select_types: list  # [(alias, base type)] in select order


def _resolve_expr(s: Schema, bindings: dict, e: PathExpr):
    if e.var not in bindings:
        raise TypecheckError(f"unbound variable {e.var!r}")
    node = bindings[e.var]
    et, at = edge_table(s), attr_table(s)
    for i, step in enumerate(e.steps):
        if (node, step) in et:
            node = et[(node, step)]
        elif (node, step) in at and i == len(e.steps) - 1:
            return ("attr", Path(bindings[e.var], e.steps[:-1], step), at[(node, step)])
        else:
            raise TypecheckError(f"unknown edge or attribute {step!r} on node {node!r} in {e}")
    return ("row", node, Path(bindings[e.var], e.steps))


def typecheck_query(q: Query, s: Schema) -> Resolution:
    bindings = {}
    for (var, node) in q.bindings:
        if var in bindings:
            raise TypecheckError(f"variable {var!r} bound more than once")
        if node not in s.nodes:
            raise TypecheckError(f"unknown table {node!r}")
        bindings[var] = node
    expr_sort = {}

    def sort_of(term):
        if isinstance(term, Literal):
            return ("const", "string" if isinstance(term.value, str) else "integer")
        r = _resolve_expr(s, bindings, term)
        expr_sort[term] = r
        return r

    for g in q.where:
        for c in g.alternatives:
            ls, rs = sort_of(c.lhs), sort_of(c.rhs)
            if ls[0] == "const" and rs[0] == "const":
                raise TypecheckError(f"clause {c} relates two constants")
            if "row" in (ls[0], rs[0]):
                if ls[0] != "row" or rs[0] != "row":
                    raise TypecheckError(f"clause {c} mixes rows and values")
                if ls[1] != rs[1]:
                    raise TypecheckError(
                        f"clause {c} equates rows of different nodes {ls[1]!r}, {rs[1]!r}"
                    )
            else:
                lt = ls[1] if ls[0] == "const" else ls[2]
                rt = rs[1] if rs[0] == "const" else rs[2]
                if lt != rt:
                    raise TypecheckError(f"clause {c} compares {lt} with {rt}")
    aliases = set()
    select_types = []
    for item in q.selects:
        if item.alias in aliases:
            raise TypecheckError(f"duplicate alias {item.alias!r}")
        aliases.add(item.alias)
        r = sort_of(item.expr)
        if r[0] != "attr":
            raise TypecheckError(f"select item {item.expr} is not attribute-valued")
        select_types.append((item.alias, r[2]))
    return Resolution(expr_sort, select_types)


def result_schema(select_types) -> Schema:
    """Single-node schema of a query result: one attribute per alias."""
    return make_schema(
        "result",
        ["row"],
        [],
        [(alias, "row", ty) for (alias, ty) in select_types],
    )


def _term_vars(term):
    return {term.var} if isinstance(term, PathExpr) else set()


def _group_vars(g: Group):
    vs = set()
    for c in g.alternatives:
        vs |= _term_vars(c.lhs) | _term_vars(c.rhs)
    return vs


def eval_query_direct(q: Query, I: Instance) -> Instance:
    """Enumerate satisfying assignments, project, relationalize (set semantics)."""
    s = I.schema
    res = typecheck_query(q, s)

    def eval_term(term, asg):
        if isinstance(term, Literal):
            return term.value
        sort = res.expr_sort[term]
        p = sort[1] if sort[0] == "attr" else sort[2]
        return eval_path(I, p, asg[term.var])

    def group_holds(g, asg):
        return any(eval_term(c.lhs, asg) == eval_term(c.rhs, asg) for c in g.alternatives)

    bindings = dict(q.bindings)
    order = sorted(q.bindings, key=lambda b: (len(I.rows[b[1]]), q.bindings.index(b)))
    groups = list(q.where)
    assignments = [{}]
    bound: set[str] = set()
    pending = list(groups)
    for (var, node) in order:
        bound.add(var)
        applicable = [g for g in pending if _group_vars(g) <= bound]
        pending = [g for g in pending if g not in applicable]
        # hash join: first conjunctive equality with one side on var only,
        # the other side fully bound earlier
        hash_clause = None
        for g in applicable:
            if len(g.alternatives) != 1:
                continue
            c = g.alternatives[0]
            lv, rv = _term_vars(c.lhs), _term_vars(c.rhs)
            if lv == {var} and var not in rv:
                hash_clause = (c.lhs, c.rhs)
                break
            if rv == {var} and var not in lv:
                hash_clause = (c.rhs, c.lhs)
                break
        new_assignments = []
        if hash_clause is not None:
            var_side, bound_side = hash_clause
            index: dict = {}
            for r in I.rows[node]:
                index.setdefault(eval_term(var_side, {var: r}), []).append(r)
            for asg in assignments:
                key = eval_term(bound_side, asg)
                for r in index.get(key, ()):
                    a2 = dict(asg)
                    a2[var] = r
                    if all(group_holds(g, a2) for g in applicable):
                        new_assignments.append(a2)
        else:
            for asg in assignments:
                for r in I.rows[node]:
                    a2 = dict(asg)
                    a2[var] = r
                    if all(group_holds(g, a2) for g in applicable):
                        new_assignments.append(a2)
        assignments = new_assignments
    del bindings

    rs = result_schema(res.select_types)
    rows = []
    attr_fn = {(alias, "row"): {} for (alias, _ty) in res.select_types}
    for i, asg in enumerate(assignments):
        rid = f"q{i}"
        rows.append(rid)
        for item, (alias, _ty) in zip(q.selects, res.select_types):
            attr_fn[(alias, "row")][rid] = eval_term(item.expr, asg)
    out = Instance(
        rs,
        {"row": rows},
        {},
        {("row", alias): attr_fn[(alias, "row")] for (alias, _ty) in res.select_types},
    )
    return relationalize(out)


@dataclass
class Desugared:
    """The query as a migration: sigma(f_sigma, pi(f_pi, delta(f_delta, I)))."""

    f_delta: Mapping  # B -> S
    f_pi: Mapping  # B -> C
    f_sigma: Mapping  # C -> R
    binding_schema: Schema
    filter_schema: Schema
    result: Schema


class _ExprUF:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        while self.parent[x] != x:
            x = self.parent[x]
        return x

    def union(self, x, y):
        self.add(x)
        self.add(y)
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx


def desugar_query(q: Query, s: Schema) -> Desugared:
    """Construct the three mappings realizing a conjunctive query.

    B has one node per binding plus one shared node per joined row-expression
    class; C is a single node carrying one attribute per select alias and per
    where-side occurrence, with the where clauses as attribute equations.
    """
    if not q.is_conjunctive():
        raise DesugarError("query has disjunctive where-clauses; not desugarable "
                           "(use direct evaluation or split into subqueries)")
    res = typecheck_query(q, s)
    bindings = dict(q.bindings)

    row_clauses = []
    attr_clauses = []
    for g in q.where:
        c = g.alternatives[0]
        ls = res.expr_sort.get(c.lhs) if isinstance(c.lhs, PathExpr) else None
        if ls is not None and ls[0] == "row":
            row_clauses.append(c)
        else:
            attr_clauses.append(c)

    def bnode(var):
        return f"b_{var}"

    nodes = [bnode(var) for (var, _n) in q.bindings]
    edges = []
    attrs = []
    fd_nodes = {bnode(var): node for (var, node) in q.bindings}
    fd_edges = {}
    fd_attrs = {}

    # joined row-expression classes -> shared target nodes
    uf = _ExprUF()
    for c in row_clauses:
        uf.union(c.lhs, c.rhs)
    classes: dict = {}
    for e in uf.parent:
        classes.setdefault(uf.find(e), []).append(e)
    eidx = 0
    for k, (rep, members) in enumerate(sorted(classes.items(), key=lambda kv: str(kv[0]))):
        jnode = f"j{k}"
        target = res.expr_sort[rep][1]
        nodes.append(jnode)
        fd_nodes[jnode] = target
        for e in sorted(members, key=str):
            ename = f"e{eidx}"
            eidx += 1
            edges.append((ename, bnode(e.var), jnode))
            fd_edges[(bnode(e.var), ename)] = res.expr_sort[e][2]

    # attributes: one per select item and per where-side occurrence
    c_attrs = []
    fp_attrs = {}
    fs_attr_images = {}
    for i, (item, (alias, ty)) in enumerate(zip(q.selects, res.select_types)):
        aname = f"sel{i}"
        attrs.append((aname, bnode(item.expr.var), ty))
        fd_attrs[(bnode(item.expr.var), aname)] = res.expr_sort[item.expr][1]
        c_attrs.append((alias, "r", ty))
        fp_attrs[(bnode(item.expr.var), aname)] = Path("r", (), alias)
        fs_attr_images[alias] = Path("row", (), alias)

    c_equations = []
    wuf = _ExprUF()  # classes of where attributes and constants, for f_sigma images
    widx = 0

    def add_where_attr(term):
        nonlocal widx
        if isinstance(term, Literal):
            return ConstPath(term.value)
        sort = res.expr_sort[term]
        aname = f"w{widx}"
        cname = f"_w{widx}"
        widx += 1
        attrs.append((aname, bnode(term.var), sort[2]))
        fd_attrs[(bnode(term.var), aname)] = sort[1]
        c_attrs.append((cname, "r", sort[2]))
        fp_attrs[(bnode(term.var), aname)] = Path("r", (), cname)
        return Path("r", (), cname)

    for c in attr_clauses:
        lp = add_where_attr(c.lhs)
        rp = add_where_attr(c.rhs)
        if isinstance(lp, ConstPath):
            lp, rp = rp, lp
        assert isinstance(lp, Path)
        c_equations.append(PathEquation(lp, rp))
        lk = lp.attr
        rk = rp.value if isinstance(rp, ConstPath) else rp.attr
        wuf.union(("a", lk), ("c", rk) if isinstance(rp, ConstPath) else ("a", rk))

    B = make_schema("B_query", nodes, edges, attrs, [])
    C = make_schema("C_query", ["r"], [], c_attrs, c_equations)
    R = result_schema(res.select_types)

    f_delta = Mapping(source=B, target=s, nodes=fd_nodes, edges=fd_edges, attrs=fd_attrs)
    f_pi = Mapping(
        source=B,
        target=C,
        nodes={n: "r" for n in nodes},
        edges={k: Path("r") for k in fd_edges},
        attrs=fp_attrs,
    )

    # f_sigma: aliases map to themselves; where attributes map to the constant
    # of their class, or to a dummy constant of the right type (never read back)
    wclass_const = {}
    for x in list(wuf.parent):
        r = wuf.find(x)
        if x[0] == "c":
            wclass_const[r] = x[1]
    fs_attrs = {}
    cat = {name: ty for (name, _n, ty) in c_attrs}
    for (name, _n, ty) in c_attrs:
        if name in fs_attr_images:
            fs_attrs[("r", name)] = fs_attr_images[name]
        else:
            key = ("a", name)
            wuf.add(key)
            root = wuf.find(key)
            if root in wclass_const:
                fs_attrs[("r", name)] = ConstPath(wclass_const[root])
            else:
                fs_attrs[("r", name)] = ConstPath("" if cat[name] == "string" else 0)
    f_sigma = Mapping(
        source=C,
        target=R,
        nodes={"r": "row"},
        edges={},
        attrs=fs_attrs,
    )
    return Desugared(f_delta, f_pi, f_sigma, B, C, R)


def split_disjuncts(q: Query):
    """All conjunctive subqueries obtained by choosing one alternative per group."""
    choices = [g.alternatives for g in q.where]
    out = []
    for combo in itertools.product(*choices):
        out.append(
            Query(
                bindings=q.bindings,
                where=tuple(Group((c,)) for c in combo),
                selects=q.selects,
            )
        )
    return out


def eval_query_via_migration(q: Query, I: Instance, bound: int = DEFAULT_BOUND) -> Instance:
    """Evaluate through sigma . pi . delta; disjunction becomes a union of
    conjunctive subqueries.  Relationalized to match set semantics."""
    parts = split_disjuncts(q) if not q.is_conjunctive() else [q]
    result = None
    for part in parts:
        d = desugar_query(part, I.schema)
        out = sigma(d.f_sigma, pi(d.f_pi, delta(d.f_delta, I), bound), bound)
        result = out if result is None else union(result, out)
    return relationalize(result)
