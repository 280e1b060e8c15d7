"""Scenario documents, instrument persistence, and poll-data ingestion.

Documents are JSON.  Complex numbers are two-element arrays ``[re, im]``;
matrices are row-major arrays of rows; vectors are arrays of pairs.  Floats
round-trip exactly (shortest-repr decimal serialization).

Scenario layout::

    {
      "dim": 2,
      "seed": 1,
      "tolerances": {"validate": 1e-9, "classify": 1e-8},
      "states": {"plus": {"vector": [[0.7071067811865476, 0], [0.7071067811865476, 0]]}},
      "observables": {"Z": {"matrix": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]}},
      "instruments": {
        "L": {"kraus": {"outcomes": [1.0, -1.0], "operators": [[...], [...]]}},
        "WB": {"constructor": "wang_busemeyer_pair", "theta": 0.6283}
      },
      "analyses": [{"kind": "classify", "instrument": "L"}, ...]
    }

Pair constructors materialize two instruments named ``<entry>.a`` and
``<entry>.b``.  The contingency CSV for poll data has the exact header
``order,a_answer,b_answer,count`` with order in {AB, BA} and answers in
{y, n}; duplicate cells are summed and missing cells default to zero.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg, models
from . import instrument as qi
from .errors import NegativeCount, ParseError, ValidationError
from .linalg import SpectralDecomposition


def complex_to_pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def pair_to_complex(doc, where: str) -> complex:
    if not isinstance(doc, (list, tuple)) or len(doc) != 2:
        raise ParseError(f"{where}: complex number must be a [re, im] pair, got {doc!r}")
    re, im = doc
    if not isinstance(re, (int, float)) or not isinstance(im, (int, float)):
        raise ParseError(f"{where}: complex parts must be numbers, got {doc!r}")
    return complex(float(re), float(im))


def matrix_to_doc(m: np.ndarray) -> list:
    return [[complex_to_pair(z) for z in row] for row in np.asarray(m, dtype=complex)]


def matrix_from_doc(doc, where: str) -> np.ndarray:
    if not isinstance(doc, list) or not doc:
        raise ParseError(f"{where}: matrix must be a nonempty array of rows")
    rows = []
    for i, row in enumerate(doc):
        if not isinstance(row, list) or len(row) != len(doc):
            raise ParseError(f"{where}: row {i} must have {len(doc)} entries")
        rows.append([pair_to_complex(z, f"{where}[{i}]") for z in row])
    return np.array(rows, dtype=complex)


def vector_to_doc(v: np.ndarray) -> list:
    return [complex_to_pair(z) for z in np.asarray(v, dtype=complex)]


def vector_from_doc(doc, where: str) -> np.ndarray:
    if not isinstance(doc, list) or not doc:
        raise ParseError(f"{where}: vector must be a nonempty array of [re, im] pairs")
    return np.array([pair_to_complex(z, where) for z in doc], dtype=complex)


def instrument_to_doc(inst: qi.Instrument) -> dict:
    return {
        "dim": inst.dim,
        "outcomes": [float(x) for x in inst.outcomes],
        "kraus": [[matrix_to_doc(k) for k in ops] for ops in inst.kraus],
    }


def instrument_from_doc(doc, where: str = "instrument") -> qi.Instrument:
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected an object, got {type(doc).__name__}")
    for key in ("dim", "outcomes", "kraus"):
        if key not in doc:
            raise ParseError(f"{where}: missing key {key!r}")
    outcomes = doc["outcomes"]
    kraus_doc = doc["kraus"]
    if not isinstance(outcomes, list) or not isinstance(kraus_doc, list) or len(outcomes) != len(kraus_doc):
        raise ParseError(f"{where}: 'outcomes' and 'kraus' must be arrays of equal length")
    families = []
    for x, ops in zip(outcomes, kraus_doc):
        if not isinstance(ops, list) or not ops:
            raise ParseError(f"{where}: outcome {x!r} needs a nonempty Kraus array")
        families.append(tuple(matrix_from_doc(k, f"{where}.kraus[{x!r}]") for k in ops))
    inst = qi.Instrument(dim=int(doc["dim"]), outcomes=tuple(float(x) for x in outcomes), kraus=tuple(families))
    qi.require_valid(inst)
    return inst


def persist_instrument(inst: qi.Instrument) -> str:
    """Serialize; the decimal form is exact, so load/serialize is byte-identical."""
    return json.dumps(instrument_to_doc(inst), sort_keys=True, indent=2)


def load_instrument(text: str) -> qi.Instrument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"instrument document: {exc}") from None
    return instrument_from_doc(doc)


@dataclass(frozen=True)
class StateEntry:
    density: np.ndarray
    vector: Optional[np.ndarray] = None


@dataclass
class Scenario:
    dim: int
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)
    observables: dict = field(default_factory=dict)
    instruments: dict = field(default_factory=dict)
    analyses: list = field(default_factory=list)

    def state(self, name: str) -> np.ndarray:
        if name not in self.states:
            raise ValidationError(f"scenario references unknown state {name!r}")
        return self.states[name].density

    def state_vector(self, name: str) -> np.ndarray:
        entry = self.states.get(name)
        if entry is None:
            raise ValidationError(f"scenario references unknown state {name!r}")
        if entry.vector is None:
            raise ValidationError(f"state {name!r} was given as a density matrix; a vector is required here")
        return entry.vector

    def observable(self, name: str) -> np.ndarray:
        if name not in self.observables:
            raise ValidationError(f"scenario references unknown observable {name!r}")
        return self.observables[name]

    def instrument(self, name: str) -> qi.Instrument:
        if name not in self.instruments:
            raise ValidationError(f"scenario references unknown instrument {name!r}")
        return self.instruments[name]


def _materialize_instrument(name: str, entry, dim: int, observables: dict, out: dict) -> None:
    where = f"instrument {name!r}"
    if not isinstance(entry, dict):
        raise ParseError(f"{where}: expected an object")
    if "kraus" in entry:
        doc = {"dim": dim, "outcomes": entry["kraus"].get("outcomes"), "kraus": entry["kraus"].get("operators")}
        out[name] = instrument_from_doc(doc, where)
        return
    ctor = entry.get("constructor")
    if ctor is None:
        raise ParseError(f"{where}: needs either 'kraus' or 'constructor'")
    if ctor == "projective_instrument":
        obs = entry.get("observable")
        if isinstance(obs, str):
            if obs not in observables:
                raise ValidationError(f"{where}: references unknown observable {obs!r}")
            matrix = observables[obs]
        elif isinstance(obs, list):
            matrix = matrix_from_doc(obs, where)
            linalg.require_hermitian(matrix, name=where)
        else:
            raise ParseError(f"{where}: projective_instrument needs 'observable' (name or matrix)")
        out[name] = models.projective_instrument(linalg.spectral_decompose(matrix))
    elif ctor == "trivial_noninvasive":
        out[name] = models.trivial_noninvasive(dim, entry.get("weights", []))
    elif ctor == "random_unsharp":
        out[name] = models.random_unsharp(dim, int(entry.get("n_outcomes", 2)), int(entry.get("seed", 0)))
    elif ctor == "wang_busemeyer_pair":
        if dim != 2:
            raise ValidationError(f"{where}: wang_busemeyer_pair requires dim 2, scenario has dim {dim}")
        a, b = models.wang_busemeyer_pair(float(entry.get("theta", 0.0)))
        out[f"{name}.a"] = a
        out[f"{name}.b"] = b
    elif ctor == "ok_commuting_pair":
        if dim != 4:
            raise ValidationError(f"{where}: ok_commuting_pair requires dim 4, scenario has dim {dim}")
        a, b, _, _ = models.ok_commuting_pair(entry.get("params", [0.0] * models.OK_N_PARAMS))
        out[f"{name}.a"] = a
        out[f"{name}.b"] = b
    else:
        raise ParseError(f"{where}: unknown constructor {ctor!r}")


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document; every matrix is checked."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"scenario: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("scenario: top level must be an object")
    if "dim" not in doc:
        raise ParseError("scenario: missing key 'dim'")
    dim = doc["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise ParseError(f"scenario: 'dim' must be a positive integer, got {dim!r}")
    scn = Scenario(
        dim=dim,
        seed=int(doc.get("seed", 0)),
        tolerances=dict(doc.get("tolerances", {})),
        analyses=list(doc.get("analyses", [])),
    )
    for name, entry in dict(doc.get("states", {})).items():
        where = f"state {name!r}"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected an object with 'vector' or 'matrix'")
        if "vector" in entry:
            v = vector_from_doc(entry["vector"], where)
            if v.shape != (dim,):
                raise ValidationError(f"{where}: vector has dim {v.shape[0]}, scenario dim is {dim}")
            try:
                v = linalg.require_state_vector(v, name=where)
            except ValidationError:
                raise
            scn.states[name] = StateEntry(density=linalg.pure_density(v), vector=v)
        elif "matrix" in entry:
            m = matrix_from_doc(entry["matrix"], where)
            if m.shape != (dim, dim):
                raise ValidationError(f"{where}: matrix has dim {m.shape[0]}, scenario dim is {dim}")
            scn.states[name] = StateEntry(density=linalg.require_density(m, name=where))
        else:
            raise ParseError(f"{where}: needs 'vector' or 'matrix'")
    for name, entry in dict(doc.get("observables", {})).items():
        where = f"observable {name!r}"
        if not isinstance(entry, dict) or "matrix" not in entry:
            raise ParseError(f"{where}: needs a 'matrix'")
        m = matrix_from_doc(entry["matrix"], where)
        if m.shape != (dim, dim):
            raise ValidationError(f"{where}: matrix has dim {m.shape[0]}, scenario dim is {dim}")
        linalg.require_hermitian(m, name=where)
        scn.observables[name] = m
    for name, entry in dict(doc.get("instruments", {})).items():
        _materialize_instrument(name, entry, dim, scn.observables, scn.instruments)
    for i, analysis in enumerate(scn.analyses):
        if not isinstance(analysis, dict) or "kind" not in analysis:
            raise ParseError(f"analysis {i}: each analysis needs a 'kind'")
    return scn


def scenario_to_doc(scn: Scenario) -> dict:
    states = {}
    for name, entry in scn.states.items():
        if entry.vector is not None:
            states[name] = {"vector": vector_to_doc(entry.vector)}
        else:
            states[name] = {"matrix": matrix_to_doc(entry.density)}
    return {
        "dim": scn.dim,
        "seed": scn.seed,
        "tolerances": scn.tolerances,
        "states": states,
        "observables": {name: {"matrix": matrix_to_doc(m)} for name, m in scn.observables.items()},
        "instruments": {
            name: {"kraus": {"outcomes": [float(x) for x in inst.outcomes],
                             "operators": [[matrix_to_doc(k) for k in ops] for ops in inst.kraus]}}
            for name, inst in scn.instruments.items()
        },
        "analyses": scn.analyses,
    }


def serialize_scenario(scn: Scenario) -> str:
    return json.dumps(scenario_to_doc(scn), sort_keys=True, indent=2)


_CSV_HEADER = ["order", "a_answer", "b_answer", "count"]
_ANSWER_INDEX = {"y": 0, "n": 1}


def ingest_contingency(text: str):
    """Parse split-ballot poll counts into (counts_ab, counts_ba) 2x2 tables.

    Tables are indexed [a_answer, b_answer] with index 0 = "y" regardless of
    question order; the order column only selects the table.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("contingency csv: empty document") from None
    if [h.strip() for h in header] != _CSV_HEADER:
        raise ParseError(f"contingency csv: header must be {','.join(_CSV_HEADER)!r}, got {','.join(header)!r}")
    counts = {"AB": np.zeros((2, 2), dtype=np.int64), "BA": np.zeros((2, 2), dtype=np.int64)}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ParseError(f"contingency csv row {lineno}: expected 4 fields, got {len(row)}")
        order, a_ans, b_ans, count = (f.strip() for f in row)
        if order not in counts:
            raise ParseError(f"contingency csv row {lineno}: order must be AB or BA, got {order!r}")
        if a_ans not in _ANSWER_INDEX or b_ans not in _ANSWER_INDEX:
            raise ParseError(f"contingency csv row {lineno}: answers must be y or n")
        try:
            c = int(count)
        except ValueError:
            raise ParseError(f"contingency csv row {lineno}: count {count!r} is not an integer") from None
        if c < 0:
            raise NegativeCount(f"contingency csv row {lineno}: count {c} is negative")
        counts[order][_ANSWER_INDEX[a_ans], _ANSWER_INDEX[b_ans]] += c
    return counts["AB"], counts["BA"]
