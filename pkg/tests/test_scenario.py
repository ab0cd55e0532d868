"""Scenario operations: F_n, closures, relation algebra, enrichment."""

import random

import pytest

from catql.core import Path, validate_mapping
from catql.errors import SchemaError
from catql.instances import Instance, enumerate_homs, iso_check, relationalize, validate_instance
from catql.parsing import parse_script
from catql.scenario import (
    ScenarioConfig,
    build_fn,
    closure_auto,
    closure_relation,
    compose_relations,
    enrich,
    enrich_edge,
    function_schema,
    generate_enrichment,
    op_relation,
    relation_from_pairs,
    relation_pairs,
    relation_schema,
    transitive_closure,
    translate_isa,
)
from catql.scripts import run_script

from conftest import read_data


def make_parent(pairs):
    """Function instance from {name: parent name}."""
    s = function_schema()
    names = sorted(set(pairs) | set(pairs.values()))
    return Instance(
        s,
        {"Material": names},
        {("Material", "parent"): {n: pairs.get(n, n) for n in names}},
        {("Material", "name"): {n: n for n in names}},
    )


def rt_closure_oracle(parent):
    """Reflexive transitive closure by iterated squaring over the name graph."""
    names = set(parent)
    reach = {(a, a) for a in names} | {(a, parent[a]) for a in names}
    changed = True
    while changed:
        changed = False
        for (a, b) in list(reach):
            c = parent[b]
            if (a, c) not in reach:
                reach.add((a, c))
                changed = True
    return reach


class TestBuildFn:
    def test_f0_both_identity(self):
        F = build_fn(0)
        assert F.edges[("isa", "left")] == Path("Material")
        assert F.edges[("isa", "right")] == Path("Material")
        validate_mapping(F)

    def test_f1_right_is_parent(self):
        F = build_fn(1)
        assert F.edges[("isa", "right")] == Path("Material", ("parent",))

    def test_f3_right_is_parent_cubed(self):
        F = build_fn(3)
        assert F.edges[("isa", "right")] == Path("Material", ("parent",) * 3)
        validate_mapping(F)

    def test_negative_rejected(self):
        with pytest.raises(Exception):
            build_fn(-1)


class TestTransitiveClosure:
    def test_n0_diagonal(self):
        I = make_parent({"iron": "metal", "metal": "matter", "matter": "matter"})
        out = transitive_closure(I, 0)
        assert relation_pairs(out) == {(x, x) for x in ("iron", "metal", "matter")}

    def test_chain_n3(self):
        I = make_parent({"iron": "metal", "metal": "matter", "matter": "matter"})
        out = transitive_closure(I, 3)
        assert relation_pairs(out) == rt_closure_oracle(
            {"iron": "metal", "metal": "matter", "matter": "matter"}
        )

    def test_monotone_in_n(self):
        I = make_parent({"a": "b", "b": "c", "c": "d", "d": "d"})
        prev = transitive_closure(I, 1)
        nxt = transitive_closure(I, 2)
        assert relation_pairs(prev) <= relation_pairs(nxt)
        # containment is witnessed by an injective hom as well
        assert enumerate_homs(relationalize(prev), relationalize(nxt)) >= 1

    def test_output_validates(self):
        I = make_parent({"a": "b", "b": "b"})
        validate_instance(transitive_closure(I, 2))


class TestRelationAlgebra:
    def test_op_involution(self):
        R = relation_from_pairs({("a", "b"), ("b", "c")})
        assert iso_check(op_relation(op_relation(R)), R)

    def test_op_swaps(self):
        R = relation_from_pairs({("a", "b")})
        assert relation_pairs(op_relation(R)) == {("b", "a")}

    def test_compose_single_link(self):
        out = compose_relations(
            relation_from_pairs({("a", "b")}), relation_from_pairs({("b", "c")})
        )
        assert relation_pairs(out) == {("a", "c")}

    def test_compose_matches_nested_loop_oracle(self):
        rng = random.Random(77)
        names = ["u", "v", "w", "x", "y"]
        for _ in range(20):
            r1 = {(rng.choice(names), rng.choice(names)) for _ in range(10)}
            r2 = {(rng.choice(names), rng.choice(names)) for _ in range(10)}
            want = {(a, d) for (a, b) in r1 for (c, d) in r2 if b == c}
            got = relation_pairs(
                compose_relations(relation_from_pairs(r1), relation_from_pairs(r2))
            )
            assert got == want

    def test_compose_associative(self):
        rng = random.Random(78)
        names = ["u", "v", "w"]
        for _ in range(10):
            rs = [
                relation_from_pairs(
                    {(rng.choice(names), rng.choice(names)) for _ in range(4)} or {("u", "u")}
                )
                for _ in range(3)
            ]
            a = compose_relations(compose_relations(rs[0], rs[1]), rs[2])
            b = compose_relations(rs[0], compose_relations(rs[1], rs[2]))
            assert iso_check(a, b)

    def test_closure_relation_diagonal_seeded(self):
        R = relation_from_pairs({("a", "b"), ("b", "c")})
        out = closure_relation(R, 3)
        assert relation_pairs(out) == {
            ("a", "a"), ("b", "b"), ("c", "c"),
            ("a", "b"), ("b", "c"), ("a", "c"),
        }

    def test_closure_auto_dispatches(self):
        fn = make_parent({"a": "a"})
        rel = relation_from_pairs({("a", "b")})
        assert relation_pairs(closure_auto(fn, 1)) == {("a", "a")}
        assert ("a", "b") in relation_pairs(closure_auto(rel, 1))
        from catql.core import make_schema

        other = make_schema("neither", ["a", "b"], [("f", "a", "b")])
        with pytest.raises(SchemaError):
            closure_auto(Instance(other, {"a": [], "b": []}, {}, {}), 1)


class TestTranslate:
    def test_empty_syn_empty_result(self):
        isa = relation_from_pairs({("o1", "o2")})
        syn = relation_from_pairs(set())
        out = translate_isa(isa, syn, 3)
        assert relation_pairs(out) == set()

    def test_identity_syn_restricts_and_closes(self):
        isa = relation_from_pairs({("a", "b"), ("b", "c")})
        syn = relation_from_pairs({("a", "a"), ("b", "b"), ("c", "c")})
        out = translate_isa(isa, syn, 3)
        assert relation_pairs(out) == relation_pairs(closure_relation(isa, 3))

    def test_vocabulary_translation(self):
        isa = relation_from_pairs({("ferrous", "metal")})
        syn = relation_from_pairs({("ferrous", "iron"), ("metal", "metallic")})
        out = translate_isa(isa, syn, 1)
        assert ("iron", "metallic") in relation_pairs(out)


class TestEnrichment:
    def test_script_generation_shape(self, portal):
        schema, _ = portal
        text = generate_enrichment(schema, "material", "material_Material_Name")
        script = parse_script(text)
        # one enrich step for the single linking table, then the final union
        assert len(script.statements) == 2
        assert "capabilitymaterials" in text

    def test_no_incoming_edges_identity_union(self):
        from catql.sqlbridge import import_sql

        schema, inst = import_sql(
            "CREATE TABLE material (id INT PRIMARY KEY, material_Material_Name VARCHAR(9));\n"
            "INSERT INTO material VALUES (1, 'x'), (2, 'x');"
        )
        text = generate_enrichment(schema, "material", "material_Material_Name")
        out = enrich(inst, relation_from_pairs(set()), ScenarioConfig())
        assert iso_check(out, relationalize(inst))

    def test_missing_attribute_rejected(self, portal):
        schema, _ = portal
        with pytest.raises(SchemaError):
            generate_enrichment(schema, "material", "nope")

    def test_empty_relation_is_identity(self, portal):
        _s, inst = portal
        out = enrich(inst, relation_from_pairs(set()), ScenarioConfig())
        assert iso_check(out, relationalize(inst))

    def test_single_link_single_pair(self):
        from catql.sqlbridge import import_sql

        schema, inst = import_sql(
            "CREATE TABLE material (id INT PRIMARY KEY, material_Material_Name VARCHAR(99));\n"
            "CREATE TABLE link (id INT PRIMARY KEY, m INT REFERENCES material);\n"
            "INSERT INTO material VALUES (1, 'steel'), (2, 'metal');\n"
            "INSERT INTO link VALUES (10, 1);\n"
        )
        out = enrich_edge(
            inst, "link", "m", relation_from_pairs({("steel", "metal")}),
            "material_Material_Name",
        )
        validate_instance(out)
        assert len(out.node_rows("link")) == 2
        new = [r for r in out.node_rows("link") if r != "10"]
        assert out.attr("material", "material_Material_Name")[out.edge("link", "m")[new[0]]] == "metal"

    def test_creates_missing_target_row(self):
        from catql.sqlbridge import import_sql

        _schema, inst = import_sql(
            "CREATE TABLE material (id INT PRIMARY KEY, material_Material_Name VARCHAR(99));\n"
            "CREATE TABLE link (id INT PRIMARY KEY, m INT REFERENCES material);\n"
            "INSERT INTO material VALUES (1, 'steel');\n"
            "INSERT INTO link VALUES (10, 1);\n"
        )
        out = enrich_edge(
            inst, "link", "m", relation_from_pairs({("steel", "unobtanium")}),
            "material_Material_Name",
        )
        names = set(out.attr("material", "material_Material_Name").values())
        assert "unobtanium" in names

    def test_monotone_and_idempotent(self, portal):
        _s, inst = portal
        isa_prime = closure_relation(
            relation_from_pairs({("17-4 Stainless Steel", "Pre-hardened Stainless Steel")}), 2
        )
        cfg = ScenarioConfig()
        once = enrich(inst, isa_prime, cfg)
        validate_instance(once)
        # the original instance embeds
        assert enumerate_homs(relationalize(inst), once) >= 1
        twice = enrich(once, isa_prime, cfg)
        assert iso_check(once, twice)
