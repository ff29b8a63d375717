"""JSON schemas for cones, problems, points, and pairs.

Cone: {"product": [{"psd": {"order": 2, "sign": "plus"}},
                   {"orthant": {"dim": 1, "sign": "plus"}},
                   {"soc": {"dim": 3, "sign": "plus"}},
                   {"zero": {"dim": 2}}, {"free": {"dim": 2}}]}
Problem: {"cone": ..., "mapping": {"builtin": "example1"}
                        | {"affine": {"A": [[...]], "b": [...]}}
                        | {"quadratic": {"Q_list": [...], "A": ..., "b": ...}},
          "points": {"name": [...], ...}}
Matrices are dense row-major lists.
"""

import json
import numpy as np

from .cone_core import ConeDesc, Orthant, SOC, PSD, Zero, Free
from .constraint_system import (
    ConstraintSystem, example1_system, example3_system, section32_system,
    affine_system, quadratic_system,
)

__all__ = ["parse_cone", "emit_cone", "parse_problem", "load_json",
           "SchemaError"]


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _field(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    return obj[key]


def parse_cone(obj) -> ConeDesc:
    blocks = []
    for i, entry in enumerate(_field(obj, "product", "cone")):
        if not isinstance(entry, dict) or len(entry) != 1:
            raise SchemaError(f"cone.product[{i}]: expected one-key object")
        kind, spec = next(iter(entry.items()))
        sign = spec.get("sign", "plus") if isinstance(spec, dict) else "plus"
        try:
            if kind == "orthant":
                blocks.append(Orthant(int(spec["dim"]), sign))
            elif kind == "soc":
                blocks.append(SOC(int(spec["dim"]), sign))
            elif kind == "psd":
                blocks.append(PSD(int(spec["order"]), sign))
            elif kind == "zero":
                blocks.append(Zero(int(spec["dim"])))
            elif kind == "free":
                blocks.append(Free(int(spec["dim"])))
            else:
                raise SchemaError(f"cone.product[{i}]: unknown kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"cone.product[{i}].{kind}: {exc}") from exc
    if not blocks:
        raise SchemaError("cone.product: empty")
    return ConeDesc(blocks)


def emit_cone(K: ConeDesc):
    out = []
    for b in K.blocks:
        if isinstance(b, Orthant):
            out.append({"orthant": {"dim": b.dim,
                                    "sign": "plus" if b.sign > 0 else "minus"}})
        elif isinstance(b, SOC):
            out.append({"soc": {"dim": b.dim,
                                "sign": "plus" if b.sign > 0 else "minus"}})
        elif isinstance(b, PSD):
            out.append({"psd": {"order": b.order,
                                "sign": "plus" if b.sign > 0 else "minus"}})
        elif isinstance(b, Zero):
            out.append({"zero": {"dim": b.dim}})
        elif isinstance(b, Free):
            out.append({"free": {"dim": b.dim}})
        else:
            raise SchemaError(f"unknown block type {type(b).__name__}")
    return {"product": out}


_BUILTINS = {
    "example1": example1_system,
    "example3": example3_system,
    "section32_scalar": section32_system,
    "section32": section32_system,
}


def parse_problem(obj):
    """Returns (ConstraintSystem, named point dict)."""
    mapping = _field(obj, "mapping", "problem")
    if "builtin" in mapping:
        name = mapping["builtin"]
        if name not in _BUILTINS:
            raise SchemaError(f"mapping.builtin: unknown builtin {name!r}")
        sys = _BUILTINS[name]()
    else:
        cone = parse_cone(_field(obj, "cone", "problem"))
        if "affine" in mapping:
            spec = mapping["affine"]
            sys = affine_system(cone,
                                np.asarray(_field(spec, "A", "mapping.affine"), float),
                                np.asarray(_field(spec, "b", "mapping.affine"), float))
        elif "quadratic" in mapping:
            spec = mapping["quadratic"]
            sys = quadratic_system(
                cone,
                [np.asarray(Q, float)
                 for Q in _field(spec, "Q_list", "mapping.quadratic")],
                np.asarray(_field(spec, "A", "mapping.quadratic"), float),
                np.asarray(_field(spec, "b", "mapping.quadratic"), float))
        else:
            raise SchemaError("mapping: expected builtin | affine | quadratic")
    points = {k: np.asarray(v, float)
              for k, v in obj.get("points", {}).items()}
    return sys, points
