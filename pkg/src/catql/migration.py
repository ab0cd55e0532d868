"""The three adjoint data migrations: delta (pullback), sigma (left Kan
extension by chase/congruence closure), pi (right Kan extension by limits
over comma categories).

sigma and pi require the relevant hom-sets of the target schema to be
finite; enumeration refuses (raises) when it cannot certify that.
"""

from __future__ import annotations

from .core import (
    DEFAULT_BOUND,
    ConstPath,
    Mapping,
    Path,
    all_morphisms_from,
    attrs_of,
    edge_table,
    edges_from,
    identity_path,
    normalize_path,
    path_compose,
    paths_equal,
    _path_key,
)
from .errors import InconsistencyError, NotSaturated, SchemaError, ValidationError
from .instances import Instance, LabelledNull, eval_path


def delta(F: Mapping, I: Instance) -> Instance:
    """Pullback migration: compose the instance with the mapping."""
    if I.schema != F.target:
        raise SchemaError("delta: instance is not on the mapping's target schema")
    s = F.source
    rows = {n: I.rows[F.nodes[n]] for n in s.nodes}
    edge_fn = {}
    for (name, src, _tgt) in s.edges:
        img = F.edges[(src, name)]
        edge_fn[(src, name)] = {r: eval_path(I, img, r) for r in rows[src]}
    attr_fn = {}
    for (name, src, _ty) in s.attributes:
        img = F.attrs[(src, name)]
        attr_fn[(src, name)] = {r: eval_path(I, img, r) for r in rows[src]}
    return Instance(s, rows, edge_fn, attr_fn)


def _paths_between(T, a, bound):
    """target node -> tuple of normal-form paths from a; raises when not saturated."""
    by_target, saturated = all_morphisms_from(T, a, bound)
    if not saturated:
        raise NotSaturated(T.name, a, bound)
    return by_target


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # deterministic: smaller key wins
            if _gen_key(ry) < _gen_key(rx):
                rx, ry = ry, rx
            self.parent[ry] = rx


def _gen_key(g):
    s, x, p = g
    return (s, x, _path_key(p))


def sigma(F: Mapping, I: Instance, bound: int = DEFAULT_BOUND) -> Instance:
    """Left Kan extension via a term model quotiented by congruence closure.

    Generators at target node t are (source node s, row x, path F(s) -> t).
    The congruence identifies (x, F(e);p) with (e(x), p) for each source edge e.
    Attributes take a constant carried by some generator, else a labelled null.
    """
    if I.schema != F.source:
        raise SchemaError("sigma: instance is not on the mapping's source schema")
    S, T = F.source, F.target
    paths_from = {n: _paths_between(T, F.nodes[n], bound) for n in sorted(S.nodes)}

    # generator universe, per target node
    gens: dict[str, list] = {t: [] for t in T.nodes}
    uf = _UnionFind()
    for s_node in sorted(S.nodes):
        for t, ps in paths_from[s_node].items():
            for p in ps:
                for x in I.rows[s_node]:
                    g = (s_node, x, p)
                    gens[t].append(g)
                    uf.add(g)

    for (ename, src, tgt) in sorted(S.edges):
        e_img = F.edges[(src, ename)]  # path F(src) -> F(tgt)
        fn = I.edge(src, ename)
        for _t, ps in paths_from[tgt].items():
            for p in ps:
                pre = normalize_path(T, path_compose(e_img, p), bound)
                for x in I.rows[src]:
                    g1 = (src, x, pre)
                    if g1 not in uf.parent:
                        raise ValidationError(
                            f"sigma: composite path {pre} left the enumerated path universe"
                        )
                    uf.union(g1, (tgt, fn[x], p))

    # classes per target node
    class_of = {}
    classes: dict[str, list] = {t: [] for t in T.nodes}
    for t in sorted(T.nodes):
        reps = {}
        for g in gens[t]:
            r = uf.find(g)
            if r not in reps:
                reps[r] = sorted((m for m in gens[t] if uf.find(m) == r), key=_gen_key)
        for r in sorted(reps, key=_gen_key):
            classes[t].append(reps[r])
        for members in classes[t]:
            for m in members:
                class_of[m] = (t, _row_id(members[0]))

    rows = {t: [_row_id(ms[0]) for ms in classes[t]] for t in T.nodes}

    edge_fn = {}
    for (gname, src, tgt) in T.edges:
        m = {}
        for members in classes[src]:
            images = set()
            for (s_node, x, p) in members:
                q = normalize_path(T, Path(p.source, p.steps + (gname,)), bound)
                img = class_of.get((s_node, x, q))
                if img is None:
                    raise ValidationError(
                        f"sigma: edge image {q} left the enumerated path universe"
                    )
                images.add(img[1])
            if len(images) != 1:
                raise ValidationError(
                    f"sigma: edge {gname!r} action is not well-defined "
                    f"(non-confluent target equations?)"
                )
            m[_row_id(members[0])] = images.pop()
        edge_fn[(src, gname)] = m

    attr_fn = {}
    for (aname, src, _ty) in T.attributes:
        m = {}
        for members in classes[src]:
            rid = _row_id(members[0])
            candidates = []
            for (s_node, x, p) in members:
                composite = Path(p.source, p.steps, aname)
                for (sa, _saty) in attrs_of(S, s_node):
                    img = F.attrs[(s_node, sa)]
                    if isinstance(img, ConstPath):
                        continue
                    if paths_equal(T, composite, img, bound):
                        candidates.append(I.attr(s_node, sa)[x])
            distinct = []
            for c in candidates:
                if c not in distinct:
                    distinct.append(c)
            constants = [c for c in distinct if not isinstance(c, LabelledNull)]
            if len(constants) > 1:
                raise InconsistencyError(
                    f"sigma: attribute {aname!r} on class {rid!r} forced to both "
                    f"{constants[0]!r} and {constants[1]!r}"
                )
            if constants:
                m[rid] = constants[0]
            elif distinct:
                m[rid] = distinct[0]
            else:
                m[rid] = LabelledNull(f"sk!{src}!{aname}!{rid}")
        attr_fn[(src, aname)] = m

    return Instance(T, rows, edge_fn, attr_fn)


def _row_id(gen):
    s, x, p = gen
    return f"{s}:{x}:{p}"


def pi(F: Mapping, I: Instance, bound: int = DEFAULT_BOUND) -> Instance:
    """Right Kan extension: rows at t are edge-compatible families over the
    comma category (t down F), built by backtracking and pruned to a valid
    instance (attribute-valued equations checked pointwise)."""
    if I.schema != F.source:
        raise SchemaError("pi: instance is not on the mapping's source schema")
    S, T = F.source, F.target
    paths_from_t = {t: _paths_between(T, t, bound) for t in sorted(T.nodes)}

    # comma objects per target node: ordered list of (source node, path t -> F(s))
    comma: dict[str, list] = {}
    for t in sorted(T.nodes):
        objs = []
        for s_node in sorted(S.nodes):
            for q in paths_from_t[t].get(F.nodes[s_node], ()):
                objs.append((s_node, q))
        comma[t] = sorted(objs, key=lambda o: (o[0], _path_key(o[1])))

    # comma morphisms induced by source edges: (index, edge fn, index')
    def comma_constraints(t):
        index = {o: i for i, o in enumerate(comma[t])}
        cons = []
        for (ename, src, tgt) in sorted(S.edges):
            e_img = F.edges[(src, ename)]
            for (s_node, q) in comma[t]:
                if s_node != src:
                    continue
                q2 = normalize_path(T, path_compose(q, e_img), bound)
                o2 = (tgt, q2)
                if o2 not in index:
                    raise ValidationError(
                        f"pi: comma path {q2} left the enumerated path universe"
                    )
                cons.append((index[(s_node, q)], I.edge(src, ename), index[o2]))
        return cons

    families: dict[str, list] = {}
    for t in sorted(T.nodes):
        objs = comma[t]
        cons = comma_constraints(t)
        by_slot: dict[int, list] = {}
        for c in cons:
            by_slot.setdefault(c[0], []).append(c)
            by_slot.setdefault(c[2], []).append(c)
        out = []
        assign: list = [None] * len(objs)

        def ok(i):
            for (a, fn, b) in by_slot.get(i, ()):
                if assign[a] is not None and assign[b] is not None:
                    if fn[assign[a]] != assign[b]:
                        return False
            return True

        def search(i):
            if i == len(objs):
                out.append(tuple(assign))
                return
            s_node = objs[i][0]
            for x in I.rows[s_node]:
                assign[i] = x
                if ok(i):
                    search(i + 1)
                assign[i] = None

        search(0)
        families[t] = out

    # attribute readings: for T-attribute A on t, via comma object (s, q) and
    # source attribute a with F(a) == q.A
    readings: dict[tuple[str, str], list] = {}
    for (aname, t, _ty) in T.attributes:
        target_attr = Path(t, (), aname)
        rds = []
        for i, (s_node, q) in enumerate(comma[t]):
            for (sa, _saty) in attrs_of(S, s_node):
                img = F.attrs[(s_node, sa)]
                if isinstance(img, ConstPath):
                    continue
                if paths_equal(T, target_attr, path_compose(q, img), bound):
                    rds.append((i, s_node, sa))
        readings[(t, aname)] = rds

    def read_attr(t, fam, aname):
        """(ok, value or None): common reading, or conflict flag."""
        vals = []
        for (i, s_node, sa) in readings[(t, aname)]:
            v = I.attr(s_node, sa)[fam[i]]
            if v not in vals:
                vals.append(v)
        if len(vals) > 1:
            return False, None
        return True, (vals[0] if vals else None)

    t_et = edge_table(T)

    def edge_image(t, fam, gname):
        """Family at target of g obtained by precomposition with g."""
        t2 = t_et[(t, gname)]
        index_t = {o: i for i, o in enumerate(comma[t])}
        img = []
        for (s_node, q2) in comma[t2]:
            q = normalize_path(T, Path(t, (gname,) + q2.steps), bound)
            j = index_t.get((s_node, q))
            if j is None:
                raise ValidationError("pi: precomposed path left the path universe")
            img.append(fam[j])
        return t2, tuple(img)

    # prune: reading conflicts, attribute-valued equations, missing edge images
    fam_sets = {t: set(families[t]) for t in T.nodes}
    attr_eqs = [eq for eq in T.equations if eq.lhs.attr is not None
                or isinstance(eq.rhs, ConstPath) or (isinstance(eq.rhs, Path) and eq.rhs.attr is not None)]

    def eval_family_attr_path(t, fam, p):
        """Evaluate an attribute-valued path from t on a family (follow edges, read attr)."""
        cur_t, cur = t, fam
        for step in p.steps:
            cur_t, cur = edge_image(cur_t, cur, step)
            if cur not in fam_sets[cur_t]:
                return ("missing",)
        ok, v = read_attr(cur_t, cur, p.attr)
        if not ok:
            return ("conflict",)
        return ("value", v)

    changed = True
    while changed:
        changed = False
        for t in sorted(T.nodes):
            drop = set()
            for fam in fam_sets[t]:
                # attribute readings on t itself must not conflict
                bad = False
                for (aname, _ty) in attrs_of(T, t):
                    ok, _v = read_attr(t, fam, aname)
                    if not ok:
                        bad = True
                        break
                if not bad:
                    for (gname, _tgt) in edges_from(T, t):
                        t2, img = edge_image(t, fam, gname)
                        if img not in fam_sets[t2]:
                            bad = True
                            break
                if not bad:
                    for eq in attr_eqs:
                        if eq.lhs.source != t:
                            continue
                        lv = eval_family_attr_path(t, fam, eq.lhs)
                        if isinstance(eq.rhs, ConstPath):
                            rv = ("value", eq.rhs.value)
                        else:
                            rv = eval_family_attr_path(t, fam, eq.rhs)
                        if lv[0] != "value" or rv[0] != "value":
                            bad = True
                            break
                        lval, rval = lv[1], rv[1]
                        # unread attributes become per-family nulls; a null side
                        # can only match the same unread-null side
                        if lval is None or rval is None:
                            if not (lval is None and rval is None and eq.lhs == eq.rhs):
                                bad = True
                                break
                        elif lval != rval:
                            bad = True
                            break
                if bad:
                    drop.add(fam)
            if drop:
                fam_sets[t] -= drop
                changed = True

    # materialize
    fam_list = {t: sorted(fam_sets[t]) for t in T.nodes}
    fam_id = {}
    for t in sorted(T.nodes):
        for i, fam in enumerate(fam_list[t]):
            fam_id[(t, fam)] = f"pi{i}_{t}"
    rows = {t: [fam_id[(t, fam)] for fam in fam_list[t]] for t in T.nodes}
    edge_fn = {}
    for (gname, src, _tgt) in T.edges:
        edge_fn[(src, gname)] = {}
        for fam in fam_list[src]:
            t2, img = edge_image(src, fam, gname)
            edge_fn[(src, gname)][fam_id[(src, fam)]] = fam_id[(t2, img)]
    attr_fn = {}
    for (aname, src, _ty) in T.attributes:
        attr_fn[(src, aname)] = {}
        for fam in fam_list[src]:
            rid = fam_id[(src, fam)]
            _ok, v = read_attr(src, fam, aname)
            if v is None:
                v = LabelledNull(f"pi!{src}!{aname}!{rid}")
            attr_fn[(src, aname)][rid] = v
    return Instance(T, rows, edge_fn, attr_fn)
