"""JSON (de)serialization for policies, measures, mixtures, kernels, faces.

Formats (numbers follow the model's mode: floats, or strings like "2/3"
in exact mode):

* stationary policy   {"policy": {state: {action: number}}}
* selector            {"selector": {state: action}}
* mixture             {"weights": [...], "selectors": [{state: action}, ...]}
* chattering kernel   {"order": p, "selectors": [...], "beta": {state: [...]}}
* measure             {"measure": {state: {action: number}}}

``policy_from_dict`` detects which of the four policy shapes a document
carries by its keys.
"""

from __future__ import annotations

import json

from .errors import StructuralError
from .geometry import FaceDescriptor
from .mixtures import ChatteringKernel, MixturePolicy
from .model import (DeterministicPolicy, FiniteMdp, dump_number, parse_number)
from .occupancy import OccupancyMeasure, StationaryPolicy


def _pair_order(model: FiniteMdp):
    return model.pair_index().nonabsorbing_position


def _nested(model: FiniteMdp, weights: dict) -> dict:
    """pair-keyed map -> {state: {action: number}} in model order."""
    pos = _pair_order(model)
    out = {}
    for (x, a) in sorted(weights, key=pos.get):
        out.setdefault(x, {})[a] = dump_number(weights[(x, a)], model.mode)
    return out


def measure_to_dict(model: FiniteMdp, measure) -> dict:
    weights = measure.weights if isinstance(measure, OccupancyMeasure) else dict(measure)
    return {"measure": _nested(model, weights)}


def measure_from_dict(model: FiniteMdp, doc: dict) -> OccupancyMeasure:
    if "measure" not in doc or not isinstance(doc["measure"], dict):
        raise StructuralError("missing key 'measure'")
    weights = {}
    for x, row in doc["measure"].items():
        if x not in model.actions:
            raise StructuralError(f"measure references unknown state {x!r}")
        for a, w in row.items():
            if a not in model.actions[x]:
                raise StructuralError(f"measure.{x}: action {a!r} not admissible")
            weights[(x, a)] = parse_number(w, model.mode, f"measure.{x}.{a}")
    return OccupancyMeasure(weights)


def stationary_to_dict(model: FiniteMdp, policy: StationaryPolicy) -> dict:
    out = {}
    for x in model.states:
        row = policy.rows.get(x, {})
        if row:
            out[x] = {a: dump_number(p, model.mode) for a, p in row.items()}
    return {"policy": out}


def selector_to_dict(policy: DeterministicPolicy) -> dict:
    return {"selector": dict(sorted(policy.selector.items()))}


def mixture_to_dict(model: FiniteMdp, mixture: MixturePolicy) -> dict:
    return {
        "weights": [dump_number(w, model.mode) for w in mixture.weights],
        "selectors": [dict(sorted(g.selector.items())) for g in mixture.selectors],
    }


def kernel_to_dict(kernel: ChatteringKernel, mode: str) -> dict:
    return {
        "order": kernel.order,
        "selectors": [dict(sorted(g.selector.items())) for g in kernel.selectors],
        "beta": {x: [dump_number(w, mode) for w in row]
                 for x, row in sorted(kernel.beta.items())},
    }


def kernel_from_dict(doc: dict, mode: str) -> ChatteringKernel:
    for key in ("order", "selectors", "beta"):
        if key not in doc:
            raise StructuralError(f"missing key '{key}'")
    order = doc["order"]
    if not isinstance(order, int) or order < 1:
        raise StructuralError("order: expected a positive integer")
    selectors = tuple(DeterministicPolicy(dict(sel)) for sel in doc["selectors"])
    beta = {
        x: tuple(parse_number(w, mode, f"beta.{x}[{i}]") for i, w in enumerate(row))
        for x, row in doc["beta"].items()
    }
    return ChatteringKernel(order=order, selectors=selectors, beta=beta)


def policy_from_dict(model: FiniteMdp, doc: dict):
    """Detect and parse one of the four policy shapes."""
    if not isinstance(doc, dict):
        raise StructuralError("policy document must be a JSON object")
    if "policy" in doc:
        rows = {}
        for x, row in doc["policy"].items():
            if x not in model.actions:
                raise StructuralError(f"policy references unknown state {x!r}")
            rows[x] = {a: parse_number(p, model.mode, f"policy.{x}.{a}")
                       for a, p in row.items()}
        return StationaryPolicy(rows)
    if "selector" in doc:
        return DeterministicPolicy(dict(doc["selector"]))
    if "beta" in doc:
        return kernel_from_dict(doc, model.mode)
    if "weights" in doc and "selectors" in doc:
        weights = tuple(parse_number(w, model.mode, f"weights[{i}]")
                        for i, w in enumerate(doc["weights"]))
        selectors = tuple(DeterministicPolicy(dict(sel)) for sel in doc["selectors"])
        return MixturePolicy(weights, selectors)
    raise StructuralError(
        "unrecognized policy document; expected one of the keys "
        "'policy', 'selector', 'beta', or 'weights'+'selectors'"
    )


def load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise StructuralError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path} is not valid JSON: {exc}") from exc


def load_policy(model: FiniteMdp, path):
    return policy_from_dict(model, load_json(path))


def load_measure(model: FiniteMdp, path) -> OccupancyMeasure:
    return measure_from_dict(model, load_json(path))


def face_to_dict(model: FiniteMdp, face: FaceDescriptor) -> dict:
    doc = {
        "support": [[x, a] for (x, a) in face.support],
        "dimension": face.dimension,
        "basis": [_nested(model, vec.weights) for vec in face.basis],
        "numerics": face.numerics,
    }
    if face.kernel_dim is not None:
        doc["kernel_dim"] = face.kernel_dim
        doc["image_dim"] = face.image_dim
    if face.vertices is not None:
        doc["vertices"] = [_nested(model, v.weights) for v in face.vertices]
    return doc
