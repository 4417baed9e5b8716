"""Population CSV files, component model files and generator spec files.

Population CSV: one header line naming columns from ``x1, x2, x3, x_star,
p``; ``p`` may be decimal or a rational ``a/b`` and defaults to 1/N.
Model files are ``key: value`` lines in a fixed order, numbers written with
15 significant digits, matrix rows separated by ``;``.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import BadDistribution, ParseError
from .population import LatentPopulation, Record
from .spectral3 import ComponentModel3, JointPMF3, joint_pmf_from_cells
from .synth import ThreeMeasSpec, TwoMeasSpec

OBS_COLUMNS = ("x1", "x2", "x3")
MODEL_FORMAT = "latentid-model/1"
DATA_DIR = Path(__file__).with_name("data")


def parse_number(text: str):
    """Exact ``Fraction`` for ``a/b``, ``int`` for integers, ``float`` otherwise."""
    s = text.strip()
    if not s:
        raise ParseError("empty numeric field")
    try:
        if "/" in s:
            return Fraction(s)
        try:
            return int(s)
        except ValueError:
            return float(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"not a number: {text!r}") from exc


def format_number(value) -> str:
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    v = float(value)
    if v == 0.0:
        return "0"
    return format(v, ".15g")


class PopulationTable:
    """Parsed population file: the observed columns plus optional x_star and p."""

    def __init__(self, columns, rows):
        self.columns = list(columns)
        self.rows = rows

    @property
    def obs_columns(self) -> list[str]:
        return [c for c in OBS_COLUMNS if c in self.columns]

    def observed(self) -> list[tuple]:
        obs = self.obs_columns
        return [tuple(r[c] for c in obs) for r in self.rows]

    def probabilities(self) -> list:
        if "p" in self.columns:
            return [r["p"] for r in self.rows]
        n = len(self.rows)
        return [Fraction(1, n)] * n

    def population(self) -> LatentPopulation:
        latent = [r.get("x_star") for r in self.rows]
        return LatentPopulation(tuple(
            Record(x, xs, p) for x, xs, p in zip(self.observed(), latent, self.probabilities())
        ))


def read_population(path) -> PopulationTable:
    text = Path(path).read_text(encoding="utf-8")
    return parse_population(text)


def parse_population(text: str) -> PopulationTable:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParseError("file is empty")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    known = set(OBS_COLUMNS) | {"x_star", "p"}
    unknown = [h for h in header if h not in known]
    if unknown:
        raise ParseError(f"unknown column(s) {unknown}")
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names")
    obs = [c for c in OBS_COLUMNS if c in header]
    if obs != list(OBS_COLUMNS[: len(obs)]) or not obs:
        raise ParseError("observed columns must be x1[, x2[, x3]]")
    rows = []
    for lineno, fields in enumerate(reader, start=2):
        if len(fields) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            rows.append({h: parse_number(f) for h, f in zip(header, fields)})
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise ParseError("no data rows")
    return PopulationTable(header, rows)


def population_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


def population_to_csv(pop: LatentPopulation, with_latent=True) -> str:
    cols = list(OBS_COLUMNS[: pop.width]) + (["x_star"] if with_latent else []) + ["p"]
    rows = [
        list(r.x) + ([r.x_star] if with_latent else []) + [r.p]
        for r in pop.records
    ]
    return population_csv(cols, rows)


def pmf3_from_table(table: PopulationTable) -> JointPMF3:
    """Aggregate a three-column population into a joint pmf over (x1, x2, x3)."""
    if table.obs_columns != list(OBS_COLUMNS):
        raise ParseError("a three-measurement pmf needs columns x1, x2, x3")
    cells = [x + (p,) for x, p in zip(table.observed(), table.probabilities())]
    return joint_pmf_from_cells(cells)


def pmf3_to_csv(pmf: JointPMF3) -> str:
    rows = []
    for i, x1 in enumerate(pmf.support):
        for j, x2 in enumerate(pmf.support):
            for l, x3 in enumerate(pmf.support3):
                p = pmf.probs[i, j, l]
                if p > 0:
                    rows.append([x1, x2, x3, p])
    return population_csv(["x1", "x2", "x3", "p"], rows)


def _vec(values) -> str:
    return " ".join(format_number(v) for v in values)


def _mat(a) -> str:
    return "; ".join(_vec(row) for row in np.asarray(a))


def model_to_text(model: ComponentModel3) -> str:
    lines = [
        f"format: {MODEL_FORMAT}",
        f"K: {model.K}",
        f"L: {model.L}",
        f"support: {_vec(model.support)}",
        f"support3: {_vec(model.support3)}",
        f"latent_probs: {_vec(model.latent_probs)}",
        f"m1: {_mat(model.m1)}",
        f"m2: {_mat(model.m2)}",
        f"m3: {_mat(model.m3)}",
    ]
    if model.eigenvalues is not None:
        lines.append(f"eigenvalues: {_vec(model.eigenvalues)}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> ComponentModel3:
    fields = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ParseError(f"model line {lineno}: expected 'key: value'")
        fields[key.strip()] = value.strip()
    if fields.get("format") != MODEL_FORMAT:
        raise ParseError(f"not a {MODEL_FORMAT} file")

    def vec(key):
        if key not in fields:
            raise ParseError(f"model file lacks {key!r}")
        return [parse_number(s) for s in fields[key].split()]

    def mat(key):
        return np.array([[float(parse_number(s)) for s in row.split()]
                         for row in vec_rows(key)])

    def vec_rows(key):
        if key not in fields:
            raise ParseError(f"model file lacks {key!r}")
        return fields[key].split(";")

    try:
        return ComponentModel3(
            support=tuple(vec("support")),
            support3=tuple(vec("support3")),
            latent_probs=np.array([float(v) for v in vec("latent_probs")]),
            m1=mat("m1"),
            m2=mat("m2"),
            m3=mat("m3"),
            eigenvalues=np.array([float(v) for v in vec("eigenvalues")]) if "eigenvalues" in fields else None,
        )
    except ValueError as exc:
        raise ParseError(f"malformed model matrix: {exc}") from exc


def read_model(path) -> ComponentModel3:
    return model_from_text(Path(path).read_text(encoding="utf-8"))


# generator spec files (JSON)

def _num(v):
    if isinstance(v, str):
        return parse_number(v)
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return v
    raise ParseError(f"expected a number, got {v!r}")


def _pmf(obj) -> dict:
    if not isinstance(obj, dict) or not obj:
        raise ParseError("expected a non-empty {value: probability} object")
    return {_num(k): _num(v) for k, v in obj.items()}


def spec_from_json(obj: dict):
    """Decode a generator spec.  Returns ``(kind, payload)``."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ParseError("spec must be an object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "two_meas":
            eps2 = obj["eps2"]
            spec = TwoMeasSpec(
                latent=_pmf(obj["latent"]),
                eps1=_pmf(obj["eps1"]),
                eps2={_num(k): _pmf(v) for k, v in eps2.items()},
            )
            return kind, spec
        if kind == "three_meas":
            support = tuple(_num(v) for v in obj["support"])
            support3 = tuple(_num(v) for v in obj["support3"])

            def columns(name, rows):
                cols = obj[name]
                if len(cols) != len(support):
                    raise ParseError(f"{name} must give one column per latent value")
                ordered = []
                for v in support:
                    col = cols[_key(cols, v)]
                    if len(col) != rows:
                        raise ParseError(f"{name} column for {v} must have {rows} entries")
                    ordered.append([_num(p) for p in col])
                return tuple(tuple(ordered[k][r] for k in range(len(support))) for r in range(rows))

            spec = ThreeMeasSpec(
                support=support,
                support3=support3,
                latent=tuple(_num(p) for p in obj["latent"]),
                m1=columns("m1", len(support)),
                m2=columns("m2", len(support)),
                m3=columns("m3", len(support3)),
            )
            spec.to_model()
            return kind, spec
        if kind == "random3":
            return kind, {"K": int(obj.get("K", 2)), "L": int(obj.get("L", 4))}
        if kind == "random2":
            return kind, {"K": int(obj.get("K", 2)), "L": int(obj.get("L", 2))}
        if kind == "gaussian2":
            return kind, {
                "latent_sd": float(obj.get("latent_sd", 1.0)),
                "eps1_sd": float(obj.get("eps1_sd", 0.5)),
                "eps2_sd": float(obj.get("eps2_sd", 0.5)),
                "nodes": int(obj.get("nodes", 20)),
            }
    except (KeyError, TypeError) as exc:
        raise ParseError(f"spec of kind {kind!r} is missing or mistypes {exc}") from exc
    except BadDistribution as exc:
        raise ParseError(f"invalid spec: {exc}") from exc
    raise ParseError(f"unknown spec kind {kind!r}")


def _key(cols: dict, v):
    for k in cols:
        if str(k) == str(v):
            return k
    raise ParseError(f"no column for latent value {v!r}")


def builtin_specs() -> list[str]:
    return sorted(p.stem for p in DATA_DIR.glob("*.json"))


def load_spec(name_or_path):
    """Read a spec from a path, or from the shipped specs by name (e.g. ``table1``)."""
    path = Path(name_or_path)
    if not path.exists():
        candidate = DATA_DIR / f"{name_or_path}.json"
        if not candidate.exists():
            raise ParseError(f"no spec file {name_or_path!r}; shipped specs: {builtin_specs()}")
        path = candidate
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    kind, payload = spec_from_json(obj)
    return path.stem, kind, payload
