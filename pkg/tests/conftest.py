"""Shared test helpers: random schema/mapping/instance generators and data
file access.  Random schemas are DAGs so every hom-set is finite, which the
left/right Kan migrations require."""

import importlib.resources as ir
import random

import pytest

from catql.core import (
    Mapping,
    Path,
    PathEquation,
    Schema,
    enumerate_morphisms,
    make_schema,
    validate_mapping,
)
from catql.errors import CatqlError
from catql.instances import Instance, validate_instance


DATA = ir.files("catql") / "data"


@pytest.fixture(autouse=True, scope="module")
def _drop_schema_caches():
    """The per-schema lookup caches are unbounded; random-schema corpora would
    otherwise keep every generated schema alive for the whole session and slow
    later allocation-heavy tests through GC pressure."""
    yield
    import catql.core as core

    for fn in (
        core.edge_table,
        core.attr_table,
        core.edges_from,
        core.attrs_of,
        core.rewrite_rules,
        core.all_morphisms_from,
    ):
        fn.cache_clear()


def read_data(name: str) -> str:
    return (DATA / name).read_text()


def rand_dag_schema(rng: random.Random, name, max_nodes=3, max_edges=4,
                    with_attrs=False, try_equation=False) -> Schema:
    n = rng.randint(1, max_nodes)
    nodes = [f"{name}_n{i}" for i in range(n)]
    edges = []
    n_edges = rng.randint(0, max_edges)
    for i in range(n_edges):
        # edges only go from lower to higher index: acyclic, finite hom-sets
        if n < 2:
            break
        a, b = sorted(rng.sample(range(n), 2))
        edges.append((f"{name}_e{i}", nodes[a], nodes[b]))
    attrs = []
    if with_attrs:
        for i, node in enumerate(nodes):
            for j in range(rng.randint(1, 2)):
                ty = rng.choice(["string", "integer"])
                attrs.append((f"{name}_a{i}_{j}", node, ty))
    s = make_schema(name, nodes, edges, attrs)
    if try_equation:
        eqs = _find_equation(rng, s)
        if eqs:
            s = make_schema(name, nodes, edges, attrs, eqs)
    return s


def _find_equation(rng, s):
    """One equation between two distinct parallel node-valued paths, if any."""
    nodes = sorted(s.nodes)
    rng.shuffle(nodes)
    for a in nodes:
        for b in nodes:
            try:
                ps = enumerate_morphisms(s, a, b)
            except CatqlError:
                continue
            nontrivial = [p for p in ps if p.steps]
            if len(ps) >= 2 and nontrivial:
                q = rng.choice(nontrivial)
                p = rng.choice([x for x in ps if x != q])
                return [PathEquation(q, p)]
    return []


def rand_mapping(rng: random.Random, S: Schema, T: Schema, tries=30):
    """A random functor S -> T, or None when the shapes don't allow one."""
    s_nodes = sorted(S.nodes)
    t_nodes = sorted(T.nodes)
    for _ in range(tries):
        nm = {n: rng.choice(t_nodes) for n in s_nodes}
        em = {}
        ok = True
        for (ename, src, tgt) in sorted(S.edges):
            try:
                choices = enumerate_morphisms(T, nm[src], nm[tgt])
            except CatqlError:
                ok = False
                break
            if not choices:
                ok = False
                break
            em[(src, ename)] = rng.choice(choices)
        if not ok:
            continue
        F = Mapping(source=S, target=T, nodes=nm, edges=em, attrs={})
        try:
            validate_mapping(F)
        except CatqlError:
            continue
        return F
    return None


def rand_instance(rng: random.Random, s: Schema, max_rows=3, allow_empty=True,
                  tries=50) -> Instance:
    """A random valid instance; retries edge functions until equations hold."""
    lo = 0 if allow_empty else 1
    str_pool = ["red", "blue", "green"]
    int_pool = [0, 1, 7]
    for attempt in range(tries):
        rows = {n: [f"r{i}" for i in range(rng.randint(lo, max_rows))]
                for n in sorted(s.nodes)}
        edge_fn = {}
        ok = True
        for (ename, src, tgt) in sorted(s.edges):
            if rows[src] and not rows[tgt]:
                ok = False
                break
            edge_fn[(src, ename)] = {r: rng.choice(rows[tgt]) for r in rows[src]}
        if not ok:
            continue
        attr_fn = {}
        for (aname, src, ty) in sorted(s.attributes):
            pool = str_pool if ty == "string" else int_pool
            attr_fn[(src, aname)] = {r: rng.choice(pool) for r in rows[src]}
        inst = Instance(s, rows, edge_fn, attr_fn)
        try:
            validate_instance(inst)
        except CatqlError:
            continue
        return inst
    # fall back to the empty instance, which always validates
    return Instance(s, {n: [] for n in s.nodes}, {}, {})


def rand_adjunction_triple(rng: random.Random):
    """(F: S->T, I on S, J on T), attribute-free, all finite hom-sets."""
    while True:
        T = rand_dag_schema(rng, "T", try_equation=rng.random() < 0.4)
        S = rand_dag_schema(rng, "S", try_equation=rng.random() < 0.4)
        F = rand_mapping(rng, S, T)
        if F is None:
            continue
        I = rand_instance(rng, S)
        J = rand_instance(rng, T)
        return F, I, J


@pytest.fixture(scope="session")
def portal():
    from catql.sqlbridge import import_sql

    schema, inst = import_sql(read_data("portal_a.sql"))
    return schema, inst
