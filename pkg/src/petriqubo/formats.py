"""Net files, model files and coordinate-text export.

All documents are JSON.  Coefficients are written as exact strings
(``"3"``, ``"-0.25"``, ``"1/3"``) unless float output is requested, so a
model survives export and import without loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from petriqubo.bqn import BinaryQuadraticNet
from petriqubo.expr import VarId, Vartype, as_fraction
from petriqubo.petri import NetValidationError, PetriNet, build_net

__all__ = [
    "FormatError",
    "ModelDocument",
    "format_number",
    "parse_number",
    "load_json",
    "parse_net",
    "dump_model",
    "load_model",
    "to_coordinate_text",
    "from_coordinate_text",
]

_MODEL_KEYS = {"vartype", "variables", "linear", "quadratic", "offset", "decode_hints"}


class FormatError(ValueError):
    """Malformed or invalid file content; the message names the location."""


def format_number(value: Fraction, as_float: bool = False) -> str | float:
    """Exact decimal string when the value terminates, ``p/q`` otherwise."""
    value = as_fraction(value)
    if as_float:
        return float(value)
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = abs(value) * 10**digits
    whole, frac = divmod(int(scaled), 10**digits)
    sign = "-" if value < 0 else ""
    return f"{sign}{whole}.{frac:0{digits}d}"


def parse_number(value: Any, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise FormatError(f"{where}: expected a number, got {value!r}")
    try:
        return as_fraction(value)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"{where}: not a rational number: {value!r}") from None


def load_json(source: str | Path, text: str | None = None) -> Any:
    """Read a JSON document, reporting syntax errors as ``file:line:col``."""
    name = str(source)
    if text is None:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise FormatError(f"{name}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{name}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def parse_net(path: str | Path, *, strict: bool = True, text: str | None = None) -> PetriNet:
    """Parse and validate a net file; diagnostics name the file and field."""
    data = load_json(path, text)
    try:
        return build_net(data, strict=strict)
    except NetValidationError as exc:
        raise FormatError(f"{path}: {exc}") from None


@dataclass(frozen=True, eq=False)
class ModelDocument:
    """A serialized model: the net plus the decode hints that travel with it."""

    bqn: BinaryQuadraticNet
    decode_hints: Mapping[str, Any] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, ModelDocument):
            return NotImplemented
        return self.bqn == other.bqn and dict(self.decode_hints) == dict(other.decode_hints)


def model_to_dict(doc: ModelDocument, as_float: bool = False) -> dict[str, Any]:
    bqn = doc.bqn
    return {
        "vartype": bqn.vartype.value,
        "variables": [str(v) for v in bqn.variables],
        "linear": {str(v): format_number(w, as_float) for v, w in bqn.places.items() if w},
        "quadratic": [[str(a), str(b), format_number(w, as_float)] for (a, b), w in bqn.transitions.items()],
        "offset": format_number(bqn.offset, as_float),
        "decode_hints": doc.decode_hints,
    }


def dump_model(doc: ModelDocument, as_float: bool = False) -> str:
    """Serialize deterministically: same model, same bytes."""
    return json.dumps(model_to_dict(doc, as_float), indent=2) + "\n"


def _varid(text: Any, where: str) -> VarId:
    if not isinstance(text, str):
        raise FormatError(f"{where}: expected a variable id string, got {text!r}")
    try:
        return VarId.parse(text)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def load_model(source: str | Path, *, strict: bool = True, text: str | None = None) -> ModelDocument:
    """Read a model file written by :func:`dump_model`."""
    data = load_json(source, text)
    name = str(source)
    if not isinstance(data, dict):
        raise FormatError(f"{name}: model file must be a JSON object")
    if strict and set(data) - _MODEL_KEYS:
        raise FormatError(f"{name}: unknown key(s) {', '.join(sorted(set(data) - _MODEL_KEYS))}")
    try:
        vartype = Vartype.coerce(data.get("vartype", ""))
    except ValueError as exc:
        raise FormatError(f"{name}: vartype: {exc}") from None
    variables = [_varid(v, f"{name}: variables[{n}]") for n, v in enumerate(data.get("variables", []))]
    if len(set(variables)) != len(variables):
        raise FormatError(f"{name}: variables: duplicate entries")
    known = set(variables)
    places = {v: Fraction(0) for v in variables}
    for key, w in (data.get("linear") or {}).items():
        v = _varid(key, f"{name}: linear")
        if v not in known:
            raise FormatError(f"{name}: linear[{key!r}]: not listed in variables")
        places[v] = parse_number(w, f"{name}: linear[{key!r}]")
    transitions = {}
    for n, entry in enumerate(data.get("quadratic") or []):
        where = f"{name}: quadratic[{n}]"
        if not isinstance(entry, list) or len(entry) != 3:
            raise FormatError(f"{where}: expected [u, v, weight]")
        a, b = _varid(entry[0], where), _varid(entry[1], where)
        if not a < b:
            raise FormatError(f"{where}: pair ({a}, {b}) is not in canonical order")
        if a not in known or b not in known:
            raise FormatError(f"{where}: endpoint not listed in variables")
        if (a, b) in transitions:
            raise FormatError(f"{where}: duplicate pair ({a}, {b})")
        transitions[(a, b)] = parse_number(entry[2], where)
    offset = parse_number(data.get("offset", "0"), f"{name}: offset")
    hints = data.get("decode_hints") or {}
    if not isinstance(hints, dict):
        raise FormatError(f"{name}: decode_hints must be an object")
    return ModelDocument(BinaryQuadraticNet(vartype, places, transitions, offset), hints)


def to_coordinate_text(bqn: BinaryQuadraticNet, as_float: bool = False) -> str:
    """Coordinate listing ``i j coeff``; ``i == j`` marks a linear term.

    Header comments give the offset, the vartype and the index of every
    variable in canonical order.
    """
    index = {v: i for i, v in enumerate(bqn.variables)}
    lines = [f"# offset {format_number(bqn.offset, as_float)}", f"# vartype {bqn.vartype.value}"]
    lines += [f"# var {i} {v}" for v, i in index.items()]
    for v, w in bqn.places.items():
        if w:
            lines.append(f"{index[v]} {index[v]} {format_number(w, as_float)}")
    for (a, b), w in bqn.transitions.items():
        if w:
            lines.append(f"{index[a]} {index[b]} {format_number(w, as_float)}")
    return "\n".join(lines) + "\n"


def from_coordinate_text(text: str, source: str = "<coordinate text>") -> BinaryQuadraticNet:
    """Parse :func:`to_coordinate_text` output; lines are numbered in errors."""
    offset = Fraction(0)
    vartype = Vartype.BINARY
    names: dict[int, VarId] = {}
    linear: dict[int, Fraction] = {}
    quad: dict[tuple[int, int], Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        where = f"{source}:{lineno}"
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts[:1] == ["offset"] and len(parts) == 2:
                offset = parse_number(parts[1], where)
            elif parts[:1] == ["vartype"] and len(parts) == 2:
                try:
                    vartype = Vartype.coerce(parts[1])
                except ValueError as exc:
                    raise FormatError(f"{where}: {exc}") from None
            elif parts[:1] == ["var"] and len(parts) == 3 and parts[1].isdigit():
                names[int(parts[1])] = _varid(parts[2], where)
            continue
        parts = line.split()
        if len(parts) != 3 or not parts[0].isdigit() or not parts[1].isdigit():
            raise FormatError(f"{where}: expected 'i j coeff'")
        i, j, w = int(parts[0]), int(parts[1]), parse_number(parts[2], where)
        if i == j:
            linear[i] = linear.get(i, Fraction(0)) + w
        else:
            key = (min(i, j), max(i, j))
            quad[key] = quad.get(key, Fraction(0)) + w
    used = set(names) | set(linear) | {i for pair in quad for i in pair}
    var = {i: names.get(i, VarId("marking", (i,))) for i in used}
    places = {var[i]: linear.get(i, Fraction(0)) for i in sorted(used)}
    transitions = {(var[a], var[b]): w for (a, b), w in quad.items()}
    return BinaryQuadraticNet(vartype, places, transitions, offset)
