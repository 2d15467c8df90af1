"""
LP File Exporter

Writes a LinearProgram in the LP text format read by common external
solvers, for cross-checking the value LPs.
"""

from typing import List

import numpy as np
from jinja2 import Environment

from ..lp.program import LinearProgram, Relation
from .base_exporter import BaseExporter


def _number(value: float) -> str:
    return "%.17g" % value


def _terms(coefficients, names) -> str:
    parts = []
    for coefficient, name in zip(coefficients, names):
        sign = "-" if coefficient < 0 else "+"
        parts.append(f"{sign} {_number(abs(coefficient))} {name}")
    return " ".join(parts)


class LPFileExporter(BaseExporter):
    """Render `Maximize / Subject To / Bounds / End` from a LinearProgram."""

    LP_TEMPLATE = """\\ {{ title }}
Maximize
 obj: {{ objective }}
Subject To
{% for row in rows %}
 {{ row.name }}: {{ row.terms }} {{ row.relation }} {{ row.rhs }}
{% endfor %}
Bounds
{% for bound in bounds %}
 {{ bound }}
{% endfor %}
End
"""

    RELATIONS = {Relation.LE: "<=", Relation.GE: ">=", Relation.EQ: "="}

    def __init__(self, title: str = "ccoc value LP"):
        super().__init__()
        self.title = title
        self.environment = Environment(trim_blocks=True, lstrip_blocks=False, autoescape=False)

    def validate(self, payload: LinearProgram) -> bool:
        if not isinstance(payload, LinearProgram):
            self.add_error("LP export requires a LinearProgram")
            return False
        if payload.n_vars == 0:
            self.add_error("Program has no variables")
            return False
        names = payload.variable_names()
        if len(set(names)) != len(names):
            self.add_error("Variable names must be unique")
            return False
        return True

    def _bounds(self, program: LinearProgram, names) -> List[str]:
        lines = []
        for name, lo, up in zip(names, program.lower, program.upper):
            if np.isneginf(lo) and np.isposinf(up):
                lines.append(f"{name} free")
            elif np.isposinf(up):
                lines.append(f"{name} >= {_number(lo)}")
            elif np.isneginf(lo):
                lines.append(f"-inf <= {name} <= {_number(up)}")
            else:
                lines.append(f"{_number(lo)} <= {name} <= {_number(up)}")
        return lines

    def render(self, payload: LinearProgram) -> str:
        names = payload.variable_names()
        nonzero = np.flatnonzero(payload.objective)
        if nonzero.size:
            objective = _terms(payload.objective[nonzero], [names[j] for j in nonzero])
        else:
            objective = f"0 {names[0]}"

        rows = []
        matrix = payload.matrix.tocsr()
        for i, name in enumerate(payload.constraint_names()):
            start, end = matrix.indptr[i], matrix.indptr[i + 1]
            columns, values = matrix.indices[start:end], matrix.data[start:end]
            order = np.argsort(columns, kind="stable")
            terms = _terms(values[order], [names[j] for j in columns[order]]) or f"0 {names[0]}"
            rows.append(
                {
                    "name": name,
                    "terms": terms,
                    "relation": self.RELATIONS[payload.relations[i]],
                    "rhs": _number(payload.rhs[i]),
                }
            )

        template = self.environment.from_string(self.LP_TEMPLATE)
        return template.render(
            title=self.title,
            objective=objective,
            rows=rows,
            bounds=self._bounds(payload, names),
        )
