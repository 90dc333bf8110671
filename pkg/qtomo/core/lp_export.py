"""
LP-format export of placement models through PuLP, and a small reader used to
check exported files.
"""

import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Set, Union

import pulp

from qtomo.logging_config import logger
from qtomo.core.ilp import IlpModel

_ROW_START = re.compile(r"^([A-Za-z_][\w.]*):(.*)$")
_IDENTIFIER = re.compile(r"^[A-Za-z_][\w.]*$")
_SECTIONS = {
    "maximize": "objective",
    "minimize": "objective",
    "subject to": "rows",
    "bounds": "bounds",
    "generals": "generals",
    "binaries": "binaries",
    "end": "end",
}


def to_pulp(model: IlpModel) -> pulp.LpProblem:
    """Equivalent PuLP problem with the same variable and row names."""
    problem = pulp.LpProblem(f"qtomo_{model.objective.value}_m{model.m}", pulp.LpMaximize)

    variables: Dict[str, pulp.LpVariable] = {}
    for var in model.variables:
        if var.integer and var.lower == 0.0 and var.upper == 1.0:
            variables[var.name] = pulp.LpVariable(var.name, cat=pulp.LpBinary)
        else:
            cat = pulp.LpInteger if var.integer else pulp.LpContinuous
            variables[var.name] = pulp.LpVariable(var.name, lowBound=var.lower, upBound=var.upper, cat=cat)

    problem += pulp.lpSum(coef * variables[name] for name, coef in model.objective_coefs.items()), "OBJ"

    for row in model.constraints:
        expression = pulp.lpSum(coef * variables[name] for name, coef in row.coefs.items())
        if row.sense == "<=":
            problem += (expression <= row.rhs), row.name
        elif row.sense == ">=":
            problem += (expression >= row.rhs), row.name
        else:
            problem += (expression == row.rhs), row.name
    return problem


def export_lp(model: IlpModel, path: Optional[Union[str, Path]] = None) -> str:
    """
    Write the model as CPLEX LP text.

    Args:
        model: Placement model
        path: Optional destination file; the text is returned either way
    """
    problem = to_pulp(model)
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(tmp) / "model.lp"
        problem.writeLP(str(target))
        text = target.read_text(encoding="utf-8")

    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote LP model to {path}")
    return text


@dataclass
class LpSummary:
    """Row and variable inventory of an LP document."""

    sense: str = ""
    objective: str = ""
    rows: Dict[str, str] = field(default_factory=dict)
    binaries: List[str] = field(default_factory=list)
    generals: List[str] = field(default_factory=list)
    variables: Set[str] = field(default_factory=set)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_variables(self) -> int:
        return len(self.variables)


def _identifiers(text: str) -> List[str]:
    return [token for token in text.split() if _IDENTIFIER.match(token)]


def read_lp_summary(text: str) -> LpSummary:
    """Parse LP text into named rows and declared variables."""
    summary = LpSummary()
    section = None
    current: Optional[str] = None
    objective_lines: List[str] = []

    for raw in text.splitlines():
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("\\"):
            continue

        key = line.strip().lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "objective":
                summary.sense = key
            current = None
            continue

        if section == "objective":
            match = _ROW_START.match(line)
            objective_lines.append(match.group(2) if match else line)
        elif section == "rows":
            match = _ROW_START.match(line)
            if match:
                current = match.group(1)
                summary.rows[current] = match.group(2).strip()
            elif current is not None:
                summary.rows[current] += " " + line.strip()
        elif section == "binaries":
            summary.binaries.extend(_identifiers(line))
        elif section == "generals":
            summary.generals.extend(_identifiers(line))

    summary.objective = " ".join(part.strip() for part in objective_lines)
    summary.variables.update(summary.binaries, summary.generals, _identifiers(summary.objective))
    for row in summary.rows.values():
        summary.variables.update(_identifiers(row))
    return summary
