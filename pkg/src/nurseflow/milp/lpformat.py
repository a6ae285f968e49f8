"""CPLEX LP text format: writer and a reader for the subset the writer emits.

Layout::

    \\* nurseflow <name> *\\
    \\* constant <value> *\\
    Minimize
     obj: + 10 beta_0 + 5 qbar_AM_0 ...
    Subject To
     r0: + 1 x_0_0_AM - 1 beta_0 <= 0
    Bounds
     0 <= x_0_0_AM <= 1
    Generals
     n_1 ...
    Binaries
     beta_0 ...
    End

Rows are named ``r<k>`` by position since system row labels contain characters
the grammar forbids. The objective constant travels in a comment because
several engines reject constants in the objective.
"""

from __future__ import annotations

import math
import re
from typing import TextIO

from .system import ConstraintSystem, Domain, Sense

_SENSE = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}
WRAP = 200


def _num(v: float) -> str:
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    if float(v).is_integer():
        return str(int(v))
    return format(float(v), ".17g")


def _expr(terms, names) -> list[str]:
    out, line = [], ""
    for j, c in terms:
        tok = f"{'-' if c < 0 else '+'} {_num(abs(c))} {names[j]}"
        if len(line) + len(tok) > WRAP:
            out.append(line)
            line = ""
        line = f"{line} {tok}" if line else tok
    out.append(line)
    return out


def write_lp(system: ConstraintSystem, fh: TextIO) -> None:
    names = [v.name for v in system.variables]
    if len(set(names)) != len(names):
        raise ValueError("variable names must be unique for LP export")
    fh.write(f"\\* nurseflow {system.name} *\\\n")
    fh.write(f"\\* constant {_num(system.constant)} *\\\n")
    fh.write("Minimize\n")
    obj = sorted((j, c) for j, c in system.objective.items() if c != 0)
    lines = _expr(obj, names) if obj else [f"0 {names[0]}"] if names else ["0"]
    fh.write(" obj: " + lines[0] + "\n")
    for ln in lines[1:]:
        fh.write("  " + ln + "\n")
    fh.write("Subject To\n")
    for k, con in enumerate(system.constraints):
        lines = _expr(con.terms, names) if con.terms else [f"0 {names[0]}"]
        fh.write(f" r{k}: " + "\n  ".join(lines) + f" {_SENSE[con.sense]} {_num(con.rhs)}\n")
    fh.write("Bounds\n")
    for v in system.variables:
        n = v.name
        if v.lb == v.ub:
            fh.write(f" {n} = {_num(v.lb)}\n")
        elif v.lb == -math.inf and v.ub == math.inf:
            fh.write(f" {n} free\n")
        else:
            fh.write(f" {_num(v.lb)} <= {n} <= {_num(v.ub)}\n")
    gens = [v.name for v in system.variables
            if v.domain is Domain.INTEGER or (v.domain is Domain.BINARY and v.lb == v.ub)]
    bins = [v.name for v in system.variables if v.domain is Domain.BINARY and v.lb != v.ub]
    for title, group in (("Generals", gens), ("Binaries", bins)):
        if group:
            fh.write(title + "\n")
            for k in range(0, len(group), 10):
                fh.write(" " + " ".join(group[k:k + 10]) + "\n")
    fh.write("End\n")


def dumps_lp(system: ConstraintSystem) -> str:
    import io
    buf = io.StringIO()
    write_lp(system, buf)
    return buf.getvalue()


class LPParseError(ValueError):
    pass


_SECTIONS = {
    "minimize": "obj", "minimise": "obj", "min": "obj",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "generals": "gen", "general": "gen", "gen": "gen",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "end": "end",
}
_TERM = re.compile(r"([+-])?\s*(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w.\[\]]*)")


def _parse_terms(text: str) -> list[tuple[str, float]]:
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise LPParseError(f"cannot parse expression near {text[pos:pos + 30]!r}")
        sign, coef, name = m.groups()
        c = float(coef) if coef else 1.0
        out.append((name, -c if sign == "-" else c))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def _value(tok: str) -> float:
    t = tok.lower()
    if t in ("+inf", "inf", "+infinity", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    return float(tok)


def read_lp(text: str) -> ConstraintSystem:
    """Parse LP text (as emitted by :func:`write_lp`) back into a system.

    Variable kinds are recovered as the name itself with an empty index.
    """
    constant = 0.0
    name = ""
    m = re.search(r"\\\*\s*constant\s+(\S+)\s*\*\\", text)
    if m:
        constant = _value(m.group(1))
    m = re.search(r"\\\*\s*nurseflow\s*(.*?)\s*\*\\", text)
    if m:
        name = m.group(1)
    text = re.sub(r"\\\*.*?\*\\", "", text, flags=re.S)
    text = re.sub(r"\\[^\n]*", "", text)

    chunks: dict[str, list[str]] = {k: [] for k in ("obj", "st", "bounds", "gen", "bin")}
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key is not None:
            section = key
            if key == "end":
                break
            continue
        if section is None:
            raise LPParseError(f"content before any section: {line!r}")
        if raw[:1].isspace() and raw[:2] == "  " and chunks[section] and section in ("obj", "st"):
            chunks[section][-1] += " " + line  # continuation
        else:
            chunks[section].append(line)

    order: list[str] = []
    seen = set()

    def note(n):
        if n not in seen:
            seen.add(n)
            order.append(n)

    objective = []
    for ln in chunks["obj"]:
        body = ln.split(":", 1)[1] if ":" in ln else ln
        for n, c in _parse_terms(body):
            note(n)
            objective.append((n, c))
    rows = []
    for ln in chunks["st"]:
        label, body = ln.split(":", 1) if ":" in ln else ("", ln)
        m = re.match(r"(.*?)(<=|>=|=<|=>|<|>|=)\s*(\S+)\s*$", body)
        if not m:
            raise LPParseError(f"row without sense: {ln!r}")
        expr, sense, rhs = m.groups()
        sense = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(sense, sense)
        terms = _parse_terms(expr)
        for n, _ in terms:
            note(n)
        rows.append((label.strip(), terms, sense, _value(rhs)))
    bounds: dict[str, list[float]] = {}
    for ln in chunks["bounds"]:
        toks = ln.split()
        if len(toks) == 2 and toks[1].lower() == "free":
            bounds[toks[0]] = [-math.inf, math.inf]; note(toks[0])
        elif len(toks) == 3 and toks[1] == "=":
            v = _value(toks[2]); bounds[toks[0]] = [v, v]; note(toks[0])
        elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
            bounds[toks[2]] = [_value(toks[0]), _value(toks[4])]; note(toks[2])
        elif len(toks) == 3 and toks[1] in ("<=", ">="):
            n, v = toks[0], _value(toks[2])
            b = bounds.setdefault(n, [0.0, math.inf]); note(n)
            b[1 if toks[1] == "<=" else 0] = v
        else:
            raise LPParseError(f"unsupported bound line {ln!r}")
    gens = {n for ln in chunks["gen"] for n in ln.split()}
    bins = {n for ln in chunks["bin"] for n in ln.split()}
    for n in gens | bins:
        note(n)

    sys = ConstraintSystem(name)
    sys.constant = constant
    idx = {}
    for n in order:
        dom = Domain.BINARY if n in bins else Domain.INTEGER if n in gens else Domain.CONTINUOUS
        lb, ub = bounds.get(n, [0.0, 1.0 if dom is Domain.BINARY else math.inf])
        idx[n] = sys.add_var(n, (), dom, lb, ub)
    sys.add_objective((idx[n], c) for n, c in objective)
    for label, terms, sense, rhs in rows:
        sys.add_constraint([(idx[n], c) for n, c in terms], sense, rhs, label)
    return sys
