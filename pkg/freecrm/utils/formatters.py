"""Human-readable rendering of triplets, tables and reports."""

import math
from typing import Any, Iterable, List, Sequence

from tabulate import tabulate

from freecrm.utils.common import create_highlighted_heading


def format_number(value: float, digits: int = 6) -> str:
    if value is None:
        return "-"
    if math.isinf(value):
        return "∞" if value > 0 else "-∞"
    return f"{value:.{digits}g}"


def format_measure(atoms: Sequence, densities: Sequence) -> List[str]:
    """One line per atom or density component."""
    lines = [f"δ_{format_number(x)} · {format_number(w)}" for x, w in atoms]
    lines += [repr(component) for component in densities]
    return lines or ["0"]


def format_triplet(triplet, title: str = "Characteristic triplet") -> str:
    """Tree view of a characteristic triplet."""
    msg = create_highlighted_heading(title, total_length=80, center_highlighter=(" ", " "))
    msg += "\n."
    msg += f"\n├── {'Kind':<10} {triplet.kind.value}"
    msg += f"\n├── {'a':<10} {format_number(triplet.a, 12)}"
    msg += f"\n├── {'eta':<10} {format_number(triplet.eta, 12)}"
    msg += "\n└── nu"
    lines = format_measure(triplet.nu.atoms, triplet.nu.densities)
    for i, line in enumerate(lines):
        connector = "└" if i == len(lines) - 1 else "├"
        msg += f"\n    {connector}── {line}"
    return msg


def format_density_summary(table) -> str:
    rows = [
        ["grid", f"[{format_number(table.xs[0])}, {format_number(table.xs[-1])}] × {len(table.xs)}"],
        ["density mass", format_number(table.density_mass)],
        ["atom mass", format_number(table.atom_mass)],
        ["mass deficit", format_number(table.mass_deficit)],
        ["missing points", str(len(table.missing))],
        ["notes", ", ".join(table.notes) or "-"],
    ]
    out = tabulate(rows, tablefmt="simple")
    if table.atom_report:
        out += "\n\n" + tabulate(
            [[format_number(x, 10), format_number(m)] for x, m in table.atom_report],
            headers=["atom", "mass"],
            tablefmt="simple",
        )
    return out


def format_rows(rows: Iterable[Sequence[Any]], headers: Sequence[str]) -> str:
    return tabulate(list(rows), headers=list(headers), tablefmt="github")


__all__ = ["format_number", "format_measure", "format_triplet", "format_density_summary", "format_rows"]
