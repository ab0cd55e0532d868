"""Script AST, evaluator, and pretty printer for the .catql language.

A script is an ordered list of declarations; names must be defined before
use and are never redefined.  Render/export directives produce outputs that
the caller (normally the CLI) prints or writes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import (
    ConstPath,
    Mapping,
    Path,
    PathEquation,
    Schema,
    attr_table,
    edge_table,
    make_schema,
    validate_mapping,
)
from .errors import ScriptError, SchemaError
from .instances import Instance, disjoint_union, relationalize, union, validate_instance
from .migration import delta, pi, sigma
from .queries import Query, eval_query_direct, eval_query_via_migration, typecheck_query


@dataclass
class SchemaDecl:
    name: str
    nodes: list
    edges: list
    attributes: list
    equations: list  # [(raw lhs Path, raw rhs Path|ConstPath)]
    line: int = field(default=0, compare=False)


@dataclass
class InstanceDecl:
    name: str
    schema_name: str
    rows: list  # [(node, [row ids])]
    edges: list  # [(node, edge, [(row, row)])]
    attrs: list  # [(node, attr, [(row, value)])]
    line: int = field(default=0, compare=False)


@dataclass
class MappingDecl:
    name: str
    source_name: str
    target_name: str
    node_maps: list
    edge_maps: list  # [(node, edge, raw Path)]
    attr_maps: list  # [(node, attr, raw Path|ConstPath)]
    line: int = field(default=0, compare=False)


@dataclass
class QueryDecl:
    name: str
    schema_name: str
    query: Query
    line: int = field(default=0, compare=False)


@dataclass
class LetStmt:
    name: str
    expr: tuple
    line: int = field(default=0, compare=False)


@dataclass
class ShowStmt:
    name: str
    format: str = "ascii"
    line: int = field(default=0, compare=False)


@dataclass
class ExportStmt:
    name: str
    filename: str
    line: int = field(default=0, compare=False)


@dataclass
class Script:
    statements: tuple


def resolve_path(s: Schema, raw: Path) -> Path:
    """Attach the attribute terminal of a raw dotted path, validating steps."""
    if isinstance(raw, ConstPath):
        return raw
    if raw.source not in s.nodes:
        raise SchemaError(f"unknown node {raw.source!r} in path {raw}")
    et, at = edge_table(s), attr_table(s)
    node = raw.source
    for i, step in enumerate(raw.steps):
        if (node, step) in et:
            node = et[(node, step)]
        elif (node, step) in at and i == len(raw.steps) - 1:
            return Path(raw.source, raw.steps[:-1], step)
        else:
            raise SchemaError(f"unknown edge or attribute {step!r} on {node!r} in {raw}")
    return raw


class Environment:
    def __init__(self):
        self.entries: dict[str, tuple[str, object]] = {}

    def define(self, name, kind, value, line):
        if name in self.entries:
            raise ScriptError(f"name {name!r} is already defined", line)
        self.entries[name] = (kind, value)

    def lookup(self, name, kind, line):
        if name not in self.entries:
            raise ScriptError(f"undefined name {name!r}", line)
        k, v = self.entries[name]
        if k != kind:
            raise ScriptError(f"{name!r} is a {k}, expected a {kind}", line)
        return v

    def __contains__(self, name):
        return name in self.entries


def run_script(script: Script, env: Optional[Environment] = None, bound: int = 512):
    """Evaluate declarations in order.  Returns (environment, outputs) where
    outputs is a list of ('show'|'export', name-or-filename, text)."""
    from . import render, scenario, sqlbridge

    env = env or Environment()
    outputs = []
    for stmt in script.statements:
        try:
            if isinstance(stmt, SchemaDecl):
                base = make_schema(stmt.name, stmt.nodes, stmt.edges, stmt.attributes)
                eqs = [
                    PathEquation(resolve_path(base, l), resolve_path(base, r))
                    for (l, r) in stmt.equations
                ]
                s = make_schema(stmt.name, stmt.nodes, stmt.edges, stmt.attributes, eqs)
                env.define(stmt.name, "schema", s, stmt.line)
            elif isinstance(stmt, InstanceDecl):
                s = env.lookup(stmt.schema_name, "schema", stmt.line)
                et, at = edge_table(s), attr_table(s)
                for (node, _ids) in stmt.rows:
                    if node not in s.nodes:
                        raise SchemaError(f"unknown node {node!r} in instance {stmt.name!r}")
                for (node, e, _pairs) in stmt.edges:
                    if (node, e) not in et:
                        raise SchemaError(f"unknown edge {node}.{e} in instance {stmt.name!r}")
                for (node, a, _pairs) in stmt.attrs:
                    if (node, a) not in at:
                        raise SchemaError(f"unknown attribute {node}.{a} in instance {stmt.name!r}")
                inst = Instance(
                    s,
                    {node: ids for (node, ids) in stmt.rows},
                    {(node, e): dict(pairs) for (node, e, pairs) in stmt.edges},
                    {(node, a): dict(pairs) for (node, a, pairs) in stmt.attrs},
                )
                validate_instance(inst)
                env.define(stmt.name, "instance", inst, stmt.line)
            elif isinstance(stmt, MappingDecl):
                src = env.lookup(stmt.source_name, "schema", stmt.line)
                tgt = env.lookup(stmt.target_name, "schema", stmt.line)
                F = Mapping(
                    source=src,
                    target=tgt,
                    nodes=dict(stmt.node_maps),
                    edges={
                        (node, e): resolve_path(tgt, p) for (node, e, p) in stmt.edge_maps
                    },
                    attrs={
                        (node, a): resolve_path(tgt, p) for (node, a, p) in stmt.attr_maps
                    },
                )
                validate_mapping(F, bound)
                env.define(stmt.name, "mapping", F, stmt.line)
            elif isinstance(stmt, QueryDecl):
                s = env.lookup(stmt.schema_name, "schema", stmt.line)
                typecheck_query(stmt.query, s)
                env.define(stmt.name, "query", (stmt.query, s), stmt.line)
            elif isinstance(stmt, LetStmt):
                value = _eval_let(stmt, env, bound)
                env.define(stmt.name, "instance", value, stmt.line)
            elif isinstance(stmt, ShowStmt):
                inst = env.lookup(stmt.name, "instance", stmt.line)
                outputs.append(("show", stmt.name, render.render_instance(inst, stmt.format)))
            elif isinstance(stmt, ExportStmt):
                inst = env.lookup(stmt.name, "instance", stmt.line)
                warnings: list[str] = []
                text = sqlbridge.export_sql(inst.schema, inst, warn=warnings.append)
                outputs.append(("export", stmt.filename, text))
                for w in warnings:
                    outputs.append(("warning", stmt.filename, w))
            else:
                raise ScriptError(f"unknown statement {stmt!r}", getattr(stmt, "line", 0))
        except ScriptError:
            raise
        except Exception as exc:  # annotate with source position
            raise ScriptError(str(exc), getattr(stmt, "line", 0)) from exc
    return env, outputs


def _eval_let(stmt: LetStmt, env: Environment, bound: int):
    from . import scenario

    op = stmt.expr[0]
    line = stmt.line
    if op in ("delta", "sigma", "pi"):
        F = env.lookup(stmt.expr[1], "mapping", line)
        I = env.lookup(stmt.expr[2], "instance", line)
        fn = {"delta": delta, "sigma": sigma, "pi": pi}[op]
        return fn(F, I) if op == "delta" else fn(F, I, bound)
    if op in ("union", "disjoint_union"):
        a = env.lookup(stmt.expr[1], "instance", line)
        b = env.lookup(stmt.expr[2], "instance", line)
        return union(a, b) if op == "union" else disjoint_union(a, b)
    if op == "relationalize":
        return relationalize(env.lookup(stmt.expr[1], "instance", line))
    if op == "eval":
        q, _s = env.lookup(stmt.expr[1], "query", line)
        return eval_query_direct(q, env.lookup(stmt.expr[2], "instance", line))
    if op == "eval_migration":
        q, _s = env.lookup(stmt.expr[1], "query", line)
        return eval_query_via_migration(q, env.lookup(stmt.expr[2], "instance", line), bound)
    if op == "closure":
        return scenario.closure_auto(env.lookup(stmt.expr[1], "instance", line), stmt.expr[2])
    if op == "op":
        return scenario.op_relation(env.lookup(stmt.expr[1], "instance", line))
    if op == "compose":
        a = env.lookup(stmt.expr[1], "instance", line)
        b = env.lookup(stmt.expr[2], "instance", line)
        return scenario.compose_relations(a, b)
    if op == "enrich":
        inst = env.lookup(stmt.expr[1], "instance", line)
        rel = env.lookup(stmt.expr[4], "instance", line)
        return scenario.enrich_edge(inst, stmt.expr[2], stmt.expr[3], rel, stmt.expr[5])
    raise ScriptError(f"unknown operation {op!r}", line)


# ---- pretty printing ----------------------------------------------------


def _fmt_value(v):
    if isinstance(v, str):
        return '"%s"' % v.replace("\\", "\\\\").replace('"', '\\"')
    return str(v)


def format_path(p) -> str:
    if isinstance(p, ConstPath):
        return _fmt_value(p.value)
    return str(p)


def format_query(q: Query, indent="  ") -> str:
    lines = ["select"]
    lines.append(
        ",\n".join(f"{indent}{item.expr} as {item.alias}" for item in q.selects)
    )
    lines.append("from")
    lines.append(",\n".join(f"{indent}{node} as {var}" for (var, node) in q.bindings))
    if q.where:
        lines.append("where")
        lines.append(" and\n".join(f"{indent}{g}" for g in q.where))
    return "\n".join(lines)


def format_script(script: Script) -> str:
    out = []
    for stmt in script.statements:
        out.append(_format_statement(stmt))
    return "\n".join(out) + "\n"


def _format_statement(stmt) -> str:
    if isinstance(stmt, SchemaDecl):
        lines = [f"schema {stmt.name} {{"]
        lines.append("  nodes " + ", ".join(stmt.nodes) + ";")
        for (e, src, tgt) in stmt.edges:
            lines.append(f"  edge {e} : {src} -> {tgt};")
        for (a, src, ty) in stmt.attributes:
            lines.append(f"  attribute {a} : {src} -> {ty};")
        for (l, r) in stmt.equations:
            lines.append(f"  equation {format_path(l)} = {format_path(r)};")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(stmt, InstanceDecl):
        lines = [f"instance {stmt.name} : {stmt.schema_name} {{"]
        for (node, ids) in stmt.rows:
            lines.append(f"  node {node} {{ " + " ".join(f"{i};" for i in ids) + " }")
        for (node, e, pairs) in stmt.edges:
            body = " ".join(f"{a} -> {b};" for (a, b) in pairs)
            lines.append(f"  edge {node}.{e} {{ {body} }}")
        for (node, a, pairs) in stmt.attrs:
            body = " ".join(f"{r} = {_fmt_value(v)};" for (r, v) in pairs)
            lines.append(f"  attribute {node}.{a} {{ {body} }}")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(stmt, MappingDecl):
        lines = [f"mapping {stmt.name} : {stmt.source_name} -> {stmt.target_name} {{"]
        for (a, b) in stmt.node_maps:
            lines.append(f"  node {a} -> {b};")
        for (node, e, p) in stmt.edge_maps:
            lines.append(f"  edge {node}.{e} -> {format_path(p)};")
        for (node, a, p) in stmt.attr_maps:
            lines.append(f"  attribute {node}.{a} -> {format_path(p)};")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(stmt, QueryDecl):
        body = format_query(stmt.query, indent="    ")
        indented = "\n".join("  " + ln for ln in body.splitlines())
        return f"query {stmt.name} : {stmt.schema_name} {{\n{indented}\n}}"
    if isinstance(stmt, LetStmt):
        op = stmt.expr[0]
        if op == "enrich":
            (_op, inst, node, ename, rel, attr) = stmt.expr
            rhs = f"enrich {inst} edge {node}.{ename} using {rel} name {attr}"
        else:
            rhs = " ".join(str(x) for x in stmt.expr)
        return f"let {stmt.name} = {rhs};"
    if isinstance(stmt, ShowStmt):
        fmt = "" if stmt.format == "ascii" else f" {stmt.format}"
        return f"show {stmt.name}{fmt};"
    if isinstance(stmt, ExportStmt):
        return f'export {stmt.name} "{stmt.filename}";'
    raise ScriptError(f"cannot format {stmt!r}")
