"""The semantic-enrichment scenario: reflexive transitive closure of a
parenthood function via the F_n mapping family, relation algebra over the
span schema, synonym translation, and schema-driven enrichment of imported
relational data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Mapping, Path, Schema, attrs_of, edge_table, edges_from, make_schema
from .errors import CatqlError, SchemaError
from .instances import (
    Instance,
    LabelledNull,
    disjoint_union_many,
    relationalize,
    validate_instance,
)
from .migration import delta
from .queries import Group, Clause, PathExpr, Query, SelectItem, eval_query_direct


def function_schema() -> Schema:
    """One node with a parenthood loop and a name attribute."""
    return make_schema(
        "S",
        ["Material"],
        [("parent", "Material", "Material")],
        [("name", "Material", "string")],
    )


def relation_schema() -> Schema:
    """The span encoding of a binary relation over named elements."""
    return make_schema(
        "T",
        ["isa", "Material"],
        [("left", "isa", "Material"), ("right", "isa", "Material")],
        [("name", "Material", "string")],
    )


def function_shape(s: Schema):
    """(node, loop edge, name attribute) when s is a one-node function schema."""
    if len(s.nodes) != 1 or len(s.edges) != 1 or len(s.attributes) != 1:
        return None
    node = next(iter(s.nodes))
    (ename, src, tgt) = next(iter(s.edges))
    (aname, asrc, ty) = next(iter(s.attributes))
    if src == tgt == node and asrc == node and ty == "string":
        return (node, ename, aname)
    return None


def relation_shape(s: Schema):
    """(relation node, left, right, element node, name attr) for span schemas."""
    if len(s.nodes) != 2 or len(s.edges) != 2 or len(s.attributes) != 1:
        return None
    (aname, asrc, ty) = next(iter(s.attributes))
    if ty != "string":
        return None
    elem = asrc
    rels = [e for e in s.edges if e[2] == elem and e[1] != elem]
    if len(rels) != 2 or rels[0][1] != rels[1][1]:
        return None
    rnode = rels[0][1]
    names = sorted(e[0] for e in rels)
    return (rnode, names[0], names[1], elem, aname)


def build_fn(n: int, source: Schema = None, target: Schema = None) -> Mapping:
    """F_n: relation schema -> function schema; right becomes the n-fold parent path."""
    if n < 0:
        raise CatqlError("closure index must be nonnegative")
    T = source or relation_schema()
    S = target or function_schema()
    rt = relation_shape(T)
    ft = function_shape(S)
    if rt is None or ft is None:
        raise SchemaError("build_fn requires a span schema and a function schema")
    (rnode, left, right, elem, rname) = rt
    (fnode, parent, fname) = ft
    return Mapping(
        source=T,
        target=S,
        nodes={rnode: fnode, elem: fnode},
        edges={
            (rnode, left): Path(fnode),
            (rnode, right): Path(fnode, (parent,) * n),
        },
        attrs={(elem, rname): Path(fnode, (), fname)},
    )


def transitive_closure(parent_inst: Instance, n: int) -> Instance:
    """Union of the F_k pullbacks for k = 0..n: the reflexive transitive
    closure of the parenthood function once n is large enough."""
    S = parent_inst.schema
    if function_shape(S) is None:
        raise SchemaError("transitive_closure expects an instance on a function schema")
    T = relation_schema()
    (fnode, parent, fname) = function_shape(S)
    pfn = parent_inst.edge(fnode, parent)
    mats = list(parent_inst.node_rows(fnode))
    names = {("Material", "name"): dict(parent_inst.attr(fnode, fname))}
    # step k is delta(build_fn(k)) — the right leg is the k-fold parent;
    # computed incrementally instead of re-walking the path for every k
    steps = []
    right = {x: x for x in mats}
    for _k in range(n + 1):
        steps.append(
            Instance(
                T,
                {"Material": mats, "isa": mats},
                {("isa", "left"): {x: x for x in mats}, ("isa", "right"): dict(right)},
                names,
            )
        )
        right = {x: pfn[right[x]] for x in mats}
    return relationalize(disjoint_union_many(steps))


def relation_pairs(R: Instance) -> set:
    """The relation as a set of (left name, right name) pairs."""
    shape = relation_shape(R.schema)
    if shape is None:
        raise SchemaError("not a relation instance")
    (rnode, left, right, elem, aname) = shape
    out = set()
    for r in R.node_rows(rnode):
        a = R.attr(elem, aname)[R.edge(rnode, left)[r]]
        b = R.attr(elem, aname)[R.edge(rnode, right)[r]]
        out.add((a, b))
    return out


def relation_from_pairs(pairs) -> Instance:
    """Build a relation instance on the canonical span schema from name pairs."""
    T = relation_schema()
    names = sorted({x for p in pairs for x in p})
    spairs = sorted(pairs)
    rows = {"Material": list(names), "isa": [f"p{i}" for i in range(len(spairs))]}
    edge_fn = {
        ("isa", "left"): {f"p{i}": a for i, (a, b) in enumerate(spairs)},
        ("isa", "right"): {f"p{i}": b for i, (a, b) in enumerate(spairs)},
    }
    attr_fn = {("Material", "name"): {x: x for x in names}}
    return Instance(T, rows, edge_fn, attr_fn)


def op_relation(R: Instance) -> Instance:
    """Swap the left and right legs."""
    shape = relation_shape(R.schema)
    if shape is None:
        raise SchemaError("not a relation instance")
    (rnode, left, right, _elem, _aname) = shape
    edge_fn = dict(R.edge_fn)
    edge_fn[(rnode, left)], edge_fn[(rnode, right)] = (
        R.edge(rnode, right),
        R.edge(rnode, left),
    )
    return Instance(R.schema, R.rows, edge_fn, R.attr_fn)


def compose_relations(R1: Instance, R2: Instance) -> Instance:
    """Relation composition, evaluated as a select/from/where join over the
    two relations placed side by side in one schema."""
    for R in (R1, R2):
        if relation_shape(R.schema) is None:
            raise SchemaError("not a relation instance")
    s1 = relation_shape(R1.schema)
    s2 = relation_shape(R2.schema)
    combined = make_schema(
        "relpair",
        ["isaA", "MatA", "isaB", "MatB"],
        [
            ("left", "isaA", "MatA"),
            ("right", "isaA", "MatA"),
            ("left", "isaB", "MatB"),
            ("right", "isaB", "MatB"),
        ],
        [("name", "MatA", "string"), ("name", "MatB", "string")],
    )

    def side(R, shape, rnode_new, mat_new):
        (rnode, left, right, elem, aname) = shape
        return (
            {rnode_new: list(R.node_rows(rnode)), mat_new: list(R.node_rows(elem))},
            {
                (rnode_new, "left"): R.edge(rnode, left),
                (rnode_new, "right"): R.edge(rnode, right),
            },
            {(mat_new, "name"): R.attr(elem, aname)},
        )

    ra, ea, aa = side(R1, s1, "isaA", "MatA")
    rb, eb, ab = side(R2, s2, "isaB", "MatB")
    inst = Instance(combined, {**ra, **rb}, {**ea, **eb}, {**aa, **ab})
    q = Query(
        bindings=(("a", "isaA"), ("b", "isaB")),
        where=(
            Group((Clause(PathExpr("a", ("right", "name")), PathExpr("b", ("left", "name"))),)),
        ),
        selects=(
            SelectItem("l", PathExpr("a", ("left", "name"))),
            SelectItem("r", PathExpr("b", ("right", "name"))),
        ),
    )
    table = eval_query_direct(q, inst)
    pairs = set()
    for r in table.node_rows("row"):
        pairs.add((table.attr("row", "l")[r], table.attr("row", "r")[r]))
    return relation_from_pairs(pairs)


def diagonal_relation(names) -> Instance:
    return relation_from_pairs({(x, x) for x in names})


def closure_relation(R: Instance, n: int) -> Instance:
    """Reflexive transitive closure of a relation: diagonal seeding plus
    iterated composition up to n-fold."""
    base = relation_pairs(R)
    names = {x for p in base for x in p}
    acc = {(x, x) for x in names} | base
    cur = base
    for _k in range(2, n + 1):
        cur = relation_pairs(compose_relations(relation_from_pairs(cur), R))
        if cur <= acc:
            break
        acc |= cur
    return relation_from_pairs(acc)


def closure_auto(I: Instance, n: int) -> Instance:
    if function_shape(I.schema) is not None:
        return transitive_closure(I, n)
    if relation_shape(I.schema) is not None:
        return closure_relation(I, n)
    raise SchemaError("closure expects a function-shaped or relation-shaped instance")


def translate_isa(isa: Instance, syn: Instance, n: int) -> Instance:
    """op(syn) ; isa ; syn, then the reflexive transitive closure of the result."""
    isa2 = compose_relations(compose_relations(op_relation(syn), isa), syn)
    return closure_relation(isa2, n)


@dataclass
class ScenarioConfig:
    closure_n: int = 3
    path_bound: int = 512
    target_node: str = "material"
    name_attr: str = "material_Material_Name"
    portal_name: str = "portal"
    relation_name: str = "isa_prime"


def generate_enrichment(s: Schema, target_node: str, name_attr: str,
                        portal_name: str = "portal", relation_name: str = "isa_prime") -> str:
    """Script text that enriches an instance along every edge into target_node.

    Each incoming edge contributes an enrich step (a join of the instance with
    the is-a relation on names) whose new rows are unioned with the running
    instance; with no incoming edges, the script degenerates to the identity
    union.
    """
    if (name_attr, target_node) not in {(a, n) for (a, n, _t) in s.attributes}:
        raise SchemaError(
            f"target node {target_node!r} has no attribute {name_attr!r}"
        )
    incoming = sorted(
        (src, ename) for (ename, src, tgt) in s.edges if tgt == target_node
    )
    lines = [
        f"# enrichment generated for schema {s.name}: "
        f"retarget edges into {target_node} along the is-a relation",
    ]
    prev = portal_name
    if not incoming:
        lines.append(f"let enriched = union {prev} {prev};")
        return "\n".join(lines) + "\n"
    for i, (src, ename) in enumerate(incoming):
        last = i == len(incoming) - 1
        new_name = f"new_{i}"
        out_name = "enriched" if last else f"enriched_{i}"
        lines.append(
            f"let {new_name} = enrich {prev} edge {src}.{ename} "
            f"using {relation_name} name {name_attr};"
        )
        lines.append(f"let {out_name} = union {prev} {new_name};")
        prev = out_name
    return "\n".join(lines) + "\n"


def enrich_edge(I: Instance, node: str, edge: str, rel: Instance, name_attr: str) -> Instance:
    """Rows of `node` copied with `edge` retargeted along the is-a relation.

    The matching (row, new target name) pairs are computed by a
    select/from/where join of the instance with the relation; missing target
    rows are created, copying attributes from the old target where possible.
    Returns the instance extended with the new rows.
    """
    s = I.schema
    et = edge_table(s)
    if (node, edge) not in et:
        raise SchemaError(f"no edge {edge!r} on node {node!r}")
    target = et[(node, edge)]
    at = {(a, n): ty for (a, n, ty) in s.attributes}
    if (name_attr, target) not in at:
        raise SchemaError(f"target node {target!r} has no attribute {name_attr!r}")
    rshape = relation_shape(rel.schema)
    if rshape is None:
        raise SchemaError("enrich needs a relation instance")
    (rnode, left, right, elem, rname) = rshape

    # combined schema: the instance, the relation, and a temporary row-id
    # attribute making rows addressable from the query
    combined = make_schema(
        "enrich_join",
        sorted(s.nodes) + ["__rel_isa", "__rel_Material"],
        sorted(s.edges)
        + [("left", "__rel_isa", "__rel_Material"), ("right", "__rel_isa", "__rel_Material")],
        sorted(s.attributes)
        + [("name", "__rel_Material", "string"), ("__rid", node, "string")],
    )
    rows = {n: list(I.node_rows(n)) for n in s.nodes}
    rows["__rel_isa"] = list(rel.node_rows(rnode))
    rows["__rel_Material"] = list(rel.node_rows(elem))
    edge_fn = dict(I.edge_fn)
    edge_fn[("__rel_isa", "left")] = rel.edge(rnode, left)
    edge_fn[("__rel_isa", "right")] = rel.edge(rnode, right)
    attr_fn = dict(I.attr_fn)
    attr_fn[("__rel_Material", "name")] = rel.attr(elem, rname)
    attr_fn[(node, "__rid")] = {r: r for r in I.node_rows(node)}
    joined = Instance(combined, rows, edge_fn, attr_fn)

    q = Query(
        bindings=(("x", node), ("p", "__rel_isa")),
        where=(
            Group((Clause(PathExpr("x", (edge, name_attr)), PathExpr("p", ("left", "name"))),)),
        ),
        selects=(
            SelectItem("xid", PathExpr("x", ("__rid",))),
            SelectItem("aname", PathExpr("p", ("left", "name"))),
            SelectItem("bname", PathExpr("p", ("right", "name"))),
        ),
    )
    table = eval_query_direct(q, joined)
    matches = sorted(
        (table.attr("row", "xid")[r], table.attr("row", "bname")[r])
        for r in table.node_rows("row")
    )

    name_index = {}
    for r in I.node_rows(target):
        v = I.attr(target, name_attr)[r]
        if not isinstance(v, LabelledNull) and v not in name_index:
            name_index[v] = r

    new_rows = {n: list(I.node_rows(n)) for n in s.nodes}
    new_edge = {k: dict(v) for k, v in I.edge_fn.items()}
    new_attr = {k: dict(v) for k, v in I.attr_fn.items()}

    def target_row_named(bname, source_row):
        if bname in name_index:
            return name_index[bname]
        rid = f"mat!{bname}"
        name_index[bname] = rid
        new_rows[target].append(rid)
        for (aname, _ty) in attrs_of(s, target):
            if aname == name_attr:
                new_attr[(target, aname)][rid] = bname
            else:
                # copy from the old target where possible; null otherwise
                v = new_attr[(target, aname)].get(source_row)
                new_attr[(target, aname)][rid] = (
                    v if v is not None else LabelledNull(f"en!{target}!{aname}!{rid}")
                )
        for (ename, _tgt) in edges_from(s, target):
            new_edge[(target, ename)][rid] = new_edge[(target, ename)][source_row]
        return rid

    for (xid, bname) in matches:
        if isinstance(bname, LabelledNull):
            continue
        old_target = I.edge(node, edge)[xid]
        tgt_row = target_row_named(bname, old_target)
        rid = f"enr!{xid}!{bname}"
        if rid in new_rows[node]:
            continue
        new_rows[node].append(rid)
        for (ename, _tgt) in edges_from(s, node):
            new_edge[(node, ename)][rid] = (
                tgt_row if ename == edge else I.edge(node, ename)[xid]
            )
        for (aname, _ty) in attrs_of(s, node):
            new_attr[(node, aname)][rid] = I.attr(node, aname)[xid]

    out = Instance(s, new_rows, new_edge, new_attr)
    validate_instance(out)
    return out


def enrich(I: Instance, isa_prime: Instance, cfg: ScenarioConfig) -> Instance:
    """Run the generated enrichment script against the instance and relation."""
    from .parsing import parse_script
    from .scripts import Environment, run_script

    text = generate_enrichment(
        I.schema, cfg.target_node, cfg.name_attr, cfg.portal_name, cfg.relation_name
    )
    env = Environment()
    env.define(cfg.portal_name, "instance", I, 0)
    env.define(cfg.relation_name, "instance", isa_prime, 0)
    env, _outputs = run_script(parse_script(text), env, cfg.path_bound)
    return env.lookup("enriched", "instance", 0)
