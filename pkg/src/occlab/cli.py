"""Command-line front end: one subcommand per analysis, one JSON document
on stdout, diagnostics on stderr.

Exit codes (stable interface):
  0  success / positive verdict
  1  usage error or malformed input
  2  negative verdict (validation violations, model not absorbing)
  3  infeasible target
  4  enumeration or iteration cap exceeded
  5  numeric failure

Every report embeds the effective run configuration; re-running the same
command line reproduces the report byte for byte (the worker count is
deliberately not part of the report, since results never depend on it).
The environment variable OCCLAB_MODE ("exact" or "float") supplies the
default mode override.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from fractions import Fraction

from . import io
from .absorption import absorption_certificate
from .errors import (CapExceededError, InfeasibleError, NotAbsorbingError,
                     NumericError, OcclabError, StructuralError)
from .geometry import (affine_hull_membership, describe_face, face_membership,
                       rai_membership)
from .mixtures import (brute_force_min_order, decompose_performance, lissage,
                       minimal_order, occupancy_of_policy)
from .model import (Numerics, convert_mode, dump_number, load_model,
                    parse_number, validate)
from .occupancy import characteristic_residual, performance
from .simulate import estimate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NEGATIVE = 2
EXIT_INFEASIBLE = 3
EXIT_CAP = 4
EXIT_NUMERIC = 5


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the documented code is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common_options(parser):
    parser.add_argument("--mode", choices=("exact", "float"),
                        help="override the model's numeric mode")
    parser.add_argument("--tau-stoch", type=float, default=None)
    parser.add_argument("--tau-char", type=float, default=None)
    parser.add_argument("--tau-supp", type=float, default=None)
    parser.add_argument("--rank-cutoff", type=float, default=None)
    parser.add_argument("--vertex-cap", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker cap; never affects results")
    parser.add_argument("--pretty", action="store_true",
                        help="indent the JSON report")
    parser.add_argument("-o", "--out", default=None,
                        help="also write the report to this path")


def build_parser() -> _Parser:
    parser = _Parser(prog="occlab",
                     description="Occupancy-measure analytics for finite "
                                 "absorbing MDPs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, with_model=True):
        p = sub.add_parser(name, help=help_)
        if with_model:
            p.add_argument("model", help="model JSON file")
        _common_options(p)
        return p

    add("validate", "check the model's structural invariants")
    add("absorb", "absorption certificate: end components, hitting times, tail bound")

    p = add("occupancy", "analytic occupancy measure of a policy")
    p.add_argument("--policy", required=True, help="policy JSON file")

    p = add("face", "face generated by a measure: dims, basis, memberships")
    p.add_argument("--measure", required=True, help="measure JSON file")
    p.add_argument("--alpha-constrained", action="store_true",
                   help="also split dimensions along the reward map")
    p.add_argument("--probe", default=None,
                   help="measure JSON file to test for membership")
    p.add_argument("--with-vertices", action="store_true",
                   help="enumerate the face's vertices")

    p = add("decompose", "mixture of order <= reward_dim + 1 with a given performance")
    p.add_argument("--policy", default=None, help="policy JSON file")
    p.add_argument("--measure", default=None, help="measure JSON file")
    p.add_argument("--alpha", default=None,
                   help="comma-separated target (decimals or fractions)")

    p = add("minimal-order", "least mixture order achieving a target performance")
    p.add_argument("--alpha", required=True)
    p.add_argument("--brute-force", action="store_true",
                   help="cross-check with the exhaustive oracle")

    p = add("lissage", "canonicalize a chattering kernel", with_model=False)
    p.add_argument("--kernel", required=True, help="chattering kernel JSON file")

    p = add("simulate", "seeded Monte Carlo estimate for a policy")
    p.add_argument("--policy", required=True)
    p.add_argument("--episodes", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-cap", type=int, default=10 ** 6)
    p.add_argument("--compare-analytic", action="store_true",
                   help="emit z-scores against the analytic values")
    return parser


def _effective_mode(args) -> str:
    if getattr(args, "mode", None):
        return args.mode
    env = os.environ.get("OCCLAB_MODE")
    if env:
        if env not in ("exact", "float"):
            raise StructuralError(f"OCCLAB_MODE must be 'exact' or 'float', got {env!r}")
        return env
    return None


def _load_model(args):
    model = load_model(args.model)
    mode = _effective_mode(args)
    if mode and mode != model.mode:
        model = convert_mode(model, mode)
    return model


def _numerics(args, mode: str) -> Numerics:
    num = Numerics.for_mode(mode)
    overrides = {}
    for field, attr in (("tau_stoch", "tau_stoch"), ("tau_char", "tau_char"),
                        ("tau_supp", "tau_supp"), ("rank_cutoff", "rank_cutoff"),
                        ("vertex_cap", "vertex_cap")):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[field] = value
    return dataclasses.replace(num, **overrides) if overrides else num


def _config(args, mode: str, num: Numerics) -> dict:
    return {
        "command": args.command,
        "model": getattr(args, "model", None),
        "mode": mode,
        **num.as_dict(),
        "seed": getattr(args, "seed", None),
        "episodes": getattr(args, "episodes", None),
        "step_cap": getattr(args, "step_cap", None),
        "out": args.out,
        "pretty": bool(args.pretty),
    }


def _parse_alpha(raw: str, model):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    alpha = [parse_number(p, model.mode, f"alpha[{i}]") for i, p in enumerate(parts)]
    if len(alpha) != model.reward_dim:
        raise StructuralError(
            f"alpha has {len(alpha)} components, model has reward_dim "
            f"{model.reward_dim}"
        )
    return alpha


def _dump_vec(vec, mode):
    return [dump_number(v, mode) for v in vec]


def _cmd_validate(args):
    model = _load_model(args)
    num = _numerics(args, model.mode)
    report = validate(model, numerics=num)
    doc = {"config": _config(args, model.mode, num), **report.as_dict()}
    return (EXIT_OK if report.ok else EXIT_NEGATIVE), doc


def _cmd_absorb(args):
    model = _load_model(args)
    num = _numerics(args, model.mode)
    cert = absorption_certificate(model, num)
    doc = {"config": _config(args, model.mode, num), **cert.as_dict()}
    return (EXIT_OK if cert.absorbing else EXIT_NEGATIVE), doc


def _cmd_occupancy(args):
    model = _load_model(args)
    num = _numerics(args, model.mode)
    policy = io.load_policy(model, args.policy)
    measure = occupancy_of_policy(model, policy, num)
    doc = {
        "config": _config(args, model.mode, num),
        **io.measure_to_dict(model, measure),
        "residual": dump_number(characteristic_residual(model, measure), model.mode),
        "mass": dump_number(measure.mass(), model.mode),
        "performance": _dump_vec(performance(model, measure), model.mode),
    }
    return EXIT_OK, doc


def _cmd_face(args):
    model = _load_model(args)
    num = _numerics(args, model.mode)
    measure = io.load_measure(model, args.measure)
    face = describe_face(model, measure, num, constrained=args.alpha_constrained,
                         with_vertices=args.with_vertices)
    doc = {"config": _config(args, model.mode, num), **io.face_to_dict(model, face)}
    if args.probe:
        probe = io.load_measure(model, args.probe)
        doc["probe"] = {
            "face_membership": face_membership(model, measure, probe, num),
            "rai_membership": rai_membership(model, measure, probe, num),
            "affine_hull_membership": affine_hull_membership(model, measure, probe, num),
        }
    return EXIT_OK, doc


def _cmd_decompose(args):
    model = _load_model(args)
    num = _numerics(args, model.mode)
    given = [x for x in (args.policy, args.measure, args.alpha) if x]
    if not given:
        raise StructuralError("decompose needs --policy, --measure, or --alpha")
    policy = io.load_policy(model, args.policy) if args.policy else None
    measure = io.load_measure(model, args.measure) if args.measure else None
    alpha = _parse_alpha(args.alpha, model) if args.alpha else None
    mixture = decompose_performance(model, policy=policy, measure=measure,
                                    alpha=alpha, numerics=num)
    component_perfs = []
    replay = [0] * model.reward_dim
    residuals = []
    for w, gamma in zip(mixture.weights, mixture.selectors):
        occ = occupancy_of_policy(model, gamma, num)
        perf = performance(model, occ)
        component_perfs.append(_dump_vec(perf, model.mode))
        residuals.append(dump_number(characteristic_residual(model, occ), model.mode))
        replay = [r + w * p for r, p in zip(replay, perf)]
    if alpha is None:
        base = occupancy_of_policy(model, policy, num) if policy else measure
        target = performance(model, base)
    else:
        target = alpha
    error = max(abs(r - t) for r, t in zip(replay, target))
    doc = {
        "config": _config(args, model.mode, num),
        "mixture": io.mixture_to_dict(model, mixture),
        "verification": {
            "order": mixture.order,
            "target": _dump_vec(target, model.mode),
            "performance": _dump_vec(replay, model.mode),
            "abs_error": float(error),
            "component_performances": component_perfs,
            "component_residuals": residuals,
        },
    }
    return EXIT_OK, doc


def _cmd_minimal_order(args):
    model = _load_model(args)
    num = _numerics(args, model.mode)
    alpha = _parse_alpha(args.alpha, model)
    result = minimal_order(model, alpha, num)
    doc = {
        "config": _config(args, model.mode, num),
        "p_star": result.p_star,
        "order": result.order,
        "witness": io.measure_to_dict(model, result.witness)["measure"],
        "mixture": io.mixture_to_dict(model, result.mixture),
    }
    if args.brute_force:
        oracle = brute_force_min_order(model, alpha, max_order=model.reward_dim + 1)
        doc["brute_force"] = oracle
        doc["brute_force_agrees"] = oracle == result.order
    return EXIT_OK, doc


def _cmd_lissage(args):
    mode = _effective_mode(args) or "float"
    num = Numerics.for_mode(mode)
    kernel = io.kernel_from_dict(io.load_json(args.kernel), mode)
    out = lissage(kernel)
    doc = {
        "config": {**_config(args, mode, num), "model": None, "kernel": args.kernel},
        "kernel": io.kernel_to_dict(out, mode),
    }
    return EXIT_OK, doc


def _cmd_simulate(args):
    model = _load_model(args)
    num = _numerics(args, model.mode)
    policy = io.load_policy(model, args.policy)
    result = estimate(model, policy, episodes=args.episodes, seed=args.seed,
                      step_cap=args.step_cap, jobs=args.jobs, numerics=num)
    doc = {"config": _config(args, model.mode, num), **result.as_dict()}
    if args.compare_analytic:
        analytic = occupancy_of_policy(model, policy, num)
        occ_z = {}
        for (x, a), mean in result.occupancy_mean.items():
            se = result.occupancy_se[(x, a)]
            diff = mean - float(analytic.get((x, a)))
            occ_z.setdefault(x, {})[a] = {
                "abs_diff": diff, "z": (diff / se) if se > 0 else None,
            }
        perf = performance(model, analytic)
        perf_z = []
        for j in range(model.reward_dim):
            se = result.performance_se[j]
            diff = result.performance_mean[j] - float(perf[j])
            perf_z.append({"abs_diff": diff, "z": (diff / se) if se > 0 else None})
        doc["compare"] = {"occupancy": occ_z, "performance": perf_z}
    if result.truncation_warning:
        print("warning: more than 1% of episodes hit the step cap", file=sys.stderr)
    return EXIT_OK, doc


_HANDLERS = {
    "validate": _cmd_validate,
    "absorb": _cmd_absorb,
    "occupancy": _cmd_occupancy,
    "face": _cmd_face,
    "decompose": _cmd_decompose,
    "minimal-order": _cmd_minimal_order,
    "lissage": _cmd_lissage,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, doc = _HANDLERS[args.command](args)
    except StructuralError as exc:
        return _fail(args, EXIT_USAGE, "structural", exc)
    except NotAbsorbingError as exc:
        doc = {"error": {"kind": "not_absorbing", "message": str(exc)}}
        if exc.witness is not None:
            doc["error"]["mec_witness"] = exc.witness.as_dict()
        _emit(args, doc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except InfeasibleError as exc:
        return _fail(args, EXIT_INFEASIBLE, "infeasible", exc)
    except CapExceededError as exc:
        return _fail(args, EXIT_CAP, "cap_exceeded", exc)
    except NumericError as exc:
        return _fail(args, EXIT_NUMERIC, "numeric", exc)
    except OcclabError as exc:
        return _fail(args, EXIT_USAGE, "error", exc)
    _emit(args, doc)
    return code


def _fail(args, code, kind, exc) -> int:
    _emit(args, {"error": {"kind": kind, "message": str(exc)}})
    print(f"error: {exc}", file=sys.stderr)
    return code


def _emit(args, doc) -> None:
    text = json.dumps(doc, indent=2 if getattr(args, "pretty", False) else None)
    sys.stdout.write(text + "\n")
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


if __name__ == "__main__":
    sys.exit(main())
