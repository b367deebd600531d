"""Bundled reference data: the toy and counterexample datasets, the ovarian
subset, its published parameter tables, the toy solution components and the
toy Groebner basis."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Mapping

from .dataset import Dataset, load_counts, load_samples, with_overrides
from .polyalg import Polynomial, VarId, parse

TOOL_COLUMNS = ("HyperLAU", "HyperTraPS", "HyperHMM")
ALG_COLUMNS = ("ALG1", "ALG2", "ALG3")
TABLE_COLUMNS = TOOL_COLUMNS + ALG_COLUMNS

# Log-likelihoods reported for the ovarian subset at the tabulated a-values.
OVARIAN_REPORTED_LOGLIK = {
    "HyperLAU": -74.06,
    "HyperTraPS": -76.33,
    "HyperHMM": -74.06,
    "ALG1": -74.19,
    "ALG2": -74.21,
    "ALG3": -78.96,
}


def _text(name: str) -> str:
    return resources.files(__package__).joinpath("data").joinpath(name).read_text(encoding="utf-8")


def _rows(name: str) -> list[dict[str, str]]:
    lines = [ln for ln in _text(name).splitlines() if ln.strip() and not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def toy_dataset() -> Dataset:
    return load_counts((r["state"], int(r["count"])) for r in _rows("toy_counts.csv"))


def counterexample_dataset() -> Dataset:
    return load_samples(_text("counterexample_samples.txt").splitlines())


def ovarian_dataset(d0: int = 0, dfull: int = 0) -> Dataset:
    """Ovarian subset with the unknown empty/full-state counts supplied."""
    pairs = [(r["state"], int(r["count"])) for r in _rows("ovarian_counts.csv")]
    return with_overrides(load_counts(pairs, L=4), d0, dfull)


def ovarian_table_columns() -> dict[str, dict[VarId, float]]:
    """Published parameter tuples (a and b) keyed by column name."""
    rows = _rows("ovarian_table_columns.csv")
    return {col: {VarId.from_name(r["variable"]): float(r[col]) for r in rows} for col in TABLE_COLUMNS}


def ovarian_table_deviations() -> dict[str, list[float]]:
    """Published generator residuals at each column's parameter tuple."""
    rows = _rows("ovarian_table_deviations.csv")
    return {col: [float(r[col]) for r in rows] for col in TABLE_COLUMNS}


def groebner_basis() -> list[Polynomial]:
    return [parse(ln) for ln in _text("toy_groebner_basis.txt").splitlines() if ln.strip() and not ln.startswith("#")]


@dataclass(frozen=True)
class Component:
    """One solution component of the toy system; coordinates are rationals or
    free-parameter names."""

    name: str
    likelihood: Fraction
    coords: dict[VarId, Fraction | str]
    identifiable: tuple[VarId, ...]

    def point(self, params: Mapping[str, Fraction | float]) -> dict[VarId, Fraction | float]:
        return {v: params[c] if isinstance(c, str) else c for v, c in self.coords.items()}

    def free_parameters(self) -> tuple[str, ...]:
        return tuple(sorted({c for c in self.coords.values() if isinstance(c, str)}))


def toy_components() -> list[Component]:
    doc = json.loads(_text("toy_components.json"))
    params = set(doc["parameters"])
    out = []
    for comp in doc["components"]:
        coords = {
            VarId.from_name(k): (v if v in params else Fraction(v)) for k, v in comp["point"].items()
        }
        out.append(
            Component(
                comp["name"],
                Fraction(comp["likelihood"]),
                coords,
                tuple(VarId.from_name(k) for k in comp["identifiable"]),
            )
        )
    return out
