#!/usr/bin/env python3
"""Solve a CPLEX-style LP file with scipy's MILP interface (HiGHS).

Usage: lp_solve.py MODEL.lp [-o SOLUTION.txt]

Writes `name value` lines for all non-fixed variables plus a trailing
`# objective <value>` comment. Exits 1 on infeasible/unbounded models.

Understands the LP dialect emitted by `dwsrp export-mip`: Minimize /
Subject To / Bounds / Binaries / End sections, `\\` comments, and
constraints of the form `name: terms <=|>=|= rhs`.
"""

import argparse
import re
import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp


TERM_RE = re.compile(r"([+-])?\s*(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][A-Za-z0-9_]*)")


def parse_terms(text):
    terms = []
    for sign, coef, name in TERM_RE.findall(text):
        value = float(coef) if coef else 1.0
        if sign == "-":
            value = -value
        terms.append((value, name))
    return terms


def parse_lp(path):
    section = None
    objective = []
    constraints = []  # (terms, sense, rhs)
    bounds = {}  # name -> (lo, hi)
    binaries = set()
    pending = ""

    with open(path) as f:
        for raw in f:
            line = raw.split("\\")[0].strip()
            if not line:
                continue
            lowered = line.lower()
            if lowered in ("minimize", "maximize"):
                section = "obj"
                if lowered == "maximize":
                    raise SystemExit("maximize not supported")
                continue
            if lowered == "subject to":
                section = "st"
                continue
            if lowered == "bounds":
                section = "bounds"
                continue
            if lowered in ("binaries", "binary", "general"):
                section = "bin"
                continue
            if lowered == "end":
                break

            if section == "obj":
                body = line.split(":", 1)[1] if ":" in line else line
                objective.extend(parse_terms(body))
            elif section == "st":
                pending += " " + (line.split(":", 1)[1] if ":" in line else line)
                m = re.search(r"(<=|>=|=)\s*([+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*$", pending)
                if m:
                    lhs = pending[: m.start()]
                    constraints.append((parse_terms(lhs), m.group(1), float(m.group(2))))
                    pending = ""
            elif section == "bounds":
                m = re.match(
                    r"^([+-]?[\d.eE+-]+)\s*<=\s*([A-Za-z_][A-Za-z0-9_]*)\s*<=\s*([+-]?[\d.eE+-]+)$",
                    line,
                )
                if m:
                    bounds[m.group(2)] = (float(m.group(1)), float(m.group(3)))
                    continue
                m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(<=|>=|=)\s*([+-]?[\d.eE+-]+)$", line)
                if m:
                    name, sense, value = m.group(1), m.group(2), float(m.group(3))
                    lo, hi = bounds.get(name, (0.0, np.inf))
                    if sense == "<=":
                        bounds[name] = (lo, value)
                    elif sense == ">=":
                        bounds[name] = (value, hi)
                    else:
                        bounds[name] = (value, value)
                    continue
                raise SystemExit(f"cannot parse bound: {line}")
            elif section == "bin":
                binaries.update(line.split())
    return objective, constraints, bounds, binaries


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("model")
    ap.add_argument("-o", "--out", default=None)
    args = ap.parse_args()

    objective, constraints, bounds, binaries = parse_lp(args.model)

    names = []
    index = {}

    def var(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    for _, name in objective:
        var(name)
    for terms, _, _ in constraints:
        for _, name in terms:
            var(name)
    for name in list(bounds) + list(binaries):
        var(name)

    n = len(names)
    c = np.zeros(n)
    for coef, name in objective:
        c[index[name]] += coef

    rows, cols, vals, lo_rhs, hi_rhs = [], [], [], [], []
    for r, (terms, sense, rhs) in enumerate(constraints):
        for coef, name in terms:
            rows.append(r)
            cols.append(index[name])
            vals.append(coef)
        if sense == "<=":
            lo_rhs.append(-np.inf)
            hi_rhs.append(rhs)
        elif sense == ">=":
            lo_rhs.append(rhs)
            hi_rhs.append(np.inf)
        else:
            lo_rhs.append(rhs)
            hi_rhs.append(rhs)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(constraints), n))

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    integrality = np.zeros(n)
    for name in binaries:
        i = index[name]
        integrality[i] = 1
        upper[i] = 1
    for name, (lo, hi) in bounds.items():
        lower[index[name]] = lo
        upper[index[name]] = hi

    res = milp(
        c=c,
        constraints=LinearConstraint(A, lo_rhs, hi_rhs),
        integrality=integrality,
        bounds=Bounds(lower, upper),
        options={"mip_rel_gap": 0.0},
    )
    if not res.success:
        print(f"error: {res.message}", file=sys.stderr)
        return 1

    out = sys.stdout if args.out is None else open(args.out, "w")
    with out:
        for name, value in zip(names, res.x):
            rounded = round(value) if integrality[index[name]] else value
            out.write(f"{name} {rounded:.10g}\n")
        out.write(f"# objective {res.fun:.10g}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
