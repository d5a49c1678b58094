"""JSON schema <-> domain objects.

Triplet::

    {"kind": "free|classical", "a": num, "eta": num,
     "nu": {"atoms": [[x, w], ...], "densities": [{"family": "power", "p": num,
            "c": num, "cutoff": num|null|"inf", "side": "+|-"}, ...]}}

Model::

    {"alpha": measure, "nu_E": measure, "nu_B": measure,
     "fixed_atoms": [{"location": num, "triplet": triplet}]}

Malformed input raises ``ParseError``; well-formed input that violates an
invariant raises ``ValidationError`` from ``parse_model``/``parse_triplet``.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from freecrm.config import ToolkitConfiguration
from freecrm.core.fcrm import BaseMeasure, FcrmModel, FixedAtom
from freecrm.core.levy import (
    CharTriplet,
    DensityComponent,
    ExponentialDensity,
    Kind,
    LevyMeasure,
    PowerDensity,
    Side,
    TabulatedDensity,
    UniformDensity,
    require_valid,
)
from freecrm.exceptions import ParseError


def load_json(path: Union[str, Path]) -> Any:
    """Read a JSON document, mapping I/O and syntax failures to ``ParseError``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"Cannot read {path}: {exc.strerror or exc}", path=str(path)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})", path=str(path)) from exc


def _object(data: Any, what: str) -> Dict[str, Any]:
    if not isinstance(data, dict):
        raise ParseError(f"{what} must be a JSON object")
    return data


def _number(data: Dict[str, Any], key: str, what: str, default: Optional[float] = None) -> float:
    value = data.get(key, default)
    if value is None:
        raise ParseError(f"{what}: missing numeric field {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{what}: field {key!r} must be a number, got {value!r}")
    return float(value)


def _cutoff(value: Any) -> float:
    if value is None or (isinstance(value, str) and value.strip().lower() in {"inf", "infinity", "+inf"}):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"power density: cutoff must be a number, null or \"inf\", got {value!r}")
    return float(value)


def _side(value: Any, what: str) -> Side:
    try:
        return Side(value if value is not None else "+")
    except ValueError as exc:
        raise ParseError(f"{what}: side must be \"+\" or \"-\", got {value!r}") from exc


def density_from_dict(data: Any) -> DensityComponent:
    data = _object(data, "density component")
    family = str(data.get("family", "")).lower()
    what = f"{family or 'density'} component"
    if family == "uniform":
        return UniformDensity(_number(data, "lo", what), _number(data, "hi", what), _number(data, "height", what, 1.0))
    if family == "exponential":
        return ExponentialDensity(
            _number(data, "rate", what), _number(data, "scale", what, 1.0), _side(data.get("side"), what)
        )
    if family == "power":
        return PowerDensity(
            _number(data, "p", what), _number(data, "c", what),
            _cutoff(data.get("cutoff")), _side(data.get("side"), what),
        )
    if family == "tabulated":
        nodes, values = data.get("nodes"), data.get("values")
        if not isinstance(nodes, list) or not isinstance(values, list):
            raise ParseError(f"{what}: nodes and values must be lists")
        try:
            return TabulatedDensity(tuple(nodes), tuple(values), _number(data, "scale", what, 1.0))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{what}: nodes and values must be numbers") from exc
    raise ParseError(f"Unknown density family {data.get('family')!r}")


def density_to_dict(component: DensityComponent) -> Dict[str, Any]:
    if isinstance(component, UniformDensity):
        return {"family": "uniform", "lo": component.lo, "hi": component.hi, "height": component.height}
    if isinstance(component, ExponentialDensity):
        return {"family": "exponential", "rate": component.rate, "scale": component.scale,
                "side": component.side.value}
    if isinstance(component, PowerDensity):
        cutoff = "inf" if math.isinf(component.cutoff) else component.cutoff
        return {"family": "power", "p": component.exponent, "c": component.scale, "cutoff": cutoff,
                "side": component.side.value}
    if isinstance(component, TabulatedDensity):
        return {"family": "tabulated", "nodes": list(component.nodes), "values": list(component.values),
                "scale": component.scale}
    raise ParseError(f"Cannot serialize density component {type(component).__name__}")


def _atoms(data: Dict[str, Any], what: str) -> tuple:
    atoms = data.get("atoms", [])
    if not isinstance(atoms, list):
        raise ParseError(f"{what}: atoms must be a list of [location, weight] pairs")
    parsed = []
    for atom in atoms:
        if (not isinstance(atom, (list, tuple)) or len(atom) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in atom)):
            raise ParseError(f"{what}: atom {atom!r} must be a [location, weight] pair of numbers")
        parsed.append((float(atom[0]), float(atom[1])))
    return tuple(parsed)


def _densities(data: Dict[str, Any], what: str) -> tuple:
    densities = data.get("densities", [])
    if not isinstance(densities, list):
        raise ParseError(f"{what}: densities must be a list")
    return tuple(density_from_dict(d) for d in densities)


def levy_from_dict(data: Any) -> LevyMeasure:
    data = _object(data if data is not None else {}, "Lévy measure")
    return LevyMeasure(_atoms(data, "Lévy measure"), _densities(data, "Lévy measure"))


def levy_to_dict(nu: LevyMeasure) -> Dict[str, Any]:
    return {"atoms": [list(a) for a in nu.atoms], "densities": [density_to_dict(c) for c in nu.densities]}


def base_from_dict(data: Any, what: str) -> BaseMeasure:
    data = _object(data if data is not None else {}, what)
    return BaseMeasure(_atoms(data, what), _densities(data, what))


def base_to_dict(m: BaseMeasure) -> Dict[str, Any]:
    return {"atoms": [list(a) for a in m.atoms], "densities": [density_to_dict(c) for c in m.densities]}


def triplet_from_dict(data: Any, default_kind: Optional[Kind] = None) -> CharTriplet:
    data = _object(data, "triplet")
    raw_kind = data.get("kind", default_kind.value if default_kind else None)
    try:
        kind = Kind(str(raw_kind).lower())
    except ValueError as exc:
        raise ParseError(f"triplet: kind must be \"free\" or \"classical\", got {raw_kind!r}") from exc
    return CharTriplet(
        _number(data, "a", "triplet", 0.0),
        _number(data, "eta", "triplet", 0.0),
        levy_from_dict(data.get("nu")),
        kind,
    )


def triplet_to_dict(t: CharTriplet) -> Dict[str, Any]:
    return {"kind": t.kind.value, "a": t.a, "eta": t.eta, "nu": levy_to_dict(t.nu)}


def model_from_dict(data: Any) -> FcrmModel:
    data = _object(data, "model")
    atoms = data.get("fixed_atoms", [])
    if not isinstance(atoms, list):
        raise ParseError("model: fixed_atoms must be a list")
    fixed: List[FixedAtom] = []
    for entry in atoms:
        entry = _object(entry, "fixed atom")
        fixed.append(FixedAtom(_number(entry, "location", "fixed atom"),
                               triplet_from_dict(entry.get("triplet"), Kind.FREE)))
    return FcrmModel(
        alpha=base_from_dict(data.get("alpha"), "alpha"),
        nu_E=base_from_dict(data.get("nu_E"), "nu_E"),
        nu_B=levy_from_dict(data.get("nu_B")),
        fixed_atoms=tuple(fixed),
    )


def model_to_dict(model: FcrmModel) -> Dict[str, Any]:
    return {
        "alpha": base_to_dict(model.alpha),
        "nu_E": base_to_dict(model.nu_E),
        "nu_B": levy_to_dict(model.nu_B),
        "fixed_atoms": [{"location": a.location, "triplet": triplet_to_dict(a.law)} for a in model.fixed_atoms],
    }


def parse_model(path: Union[str, Path], config: Optional[ToolkitConfiguration] = None) -> FcrmModel:
    """Load and validate a model file.

    Raises:
        ParseError: unreadable file or schema mismatch.
        ValidationError: every violated invariant, joined in the message and
            listed in ``messages``.
    """
    return model_from_dict(load_json(path)).require_valid(config)


def parse_triplet(path: Union[str, Path], config: Optional[ToolkitConfiguration] = None) -> CharTriplet:
    """Load and validate a triplet file."""
    triplet = triplet_from_dict(load_json(path))
    require_valid(triplet, config)
    return triplet


__all__ = [
    "load_json",
    "density_from_dict",
    "density_to_dict",
    "levy_from_dict",
    "levy_to_dict",
    "triplet_from_dict",
    "triplet_to_dict",
    "model_from_dict",
    "model_to_dict",
    "parse_model",
    "parse_triplet",
]
