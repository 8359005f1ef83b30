"""Finite absorbing-MDP data model: construction, validation, serialization.

States and actions are plain strings. A model stores per-state lists of
admissible actions, a transition kernel Q(y | x, a), an initial
distribution and a reward vector per admissible pair. The designated
absorbing set must be closed under every admissible action and carry zero
reward; the analytics in the other modules only ever weight pairs outside
it.

Numbers come in two modes. In "exact" mode every entry is a
fractions.Fraction and downstream linear algebra is exact; in "float"
mode entries are binary floats and comparisons use the tolerances in
:class:`Numerics`. The JSON file format stores exact numbers as strings
such as "1/2" or "0.5" so that round trips are lossless.

Models are immutable by convention after construction: nothing in this
package mutates one, so unrestricted concurrent reads are safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .errors import StructuralError

Value = Union[Fraction, float]

MODES = ("exact", "float")


def zero(mode: str) -> Value:
    return Fraction(0) if mode == "exact" else 0.0


def one(mode: str) -> Value:
    return Fraction(1) if mode == "exact" else 1.0


def parse_number(raw, mode: str, where: str = "value") -> Value:
    """Parse a JSON number-or-string into the mode's numeric type."""
    if isinstance(raw, bool):
        raise StructuralError(f"{where}: expected a number, got {raw!r}")
    if mode == "exact":
        if not isinstance(raw, (int, str)):
            raise StructuralError(
                f"{where}: exact mode needs integers or strings like '1/2' or "
                f"'0.5', got {raw!r}"
            )
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise StructuralError(f"{where}: cannot parse {raw!r} as a rational") from exc
    if isinstance(raw, str):
        try:
            return float(Fraction(raw))
        except (ValueError, ZeroDivisionError) as exc:
            raise StructuralError(f"{where}: cannot parse {raw!r} as a number") from exc
    if not isinstance(raw, (int, float)):
        raise StructuralError(f"{where}: expected a number, got {raw!r}")
    return float(raw)


def dump_number(value: Value, mode: str):
    """Inverse of parse_number: Fraction -> string, float -> float."""
    if mode == "exact":
        return str(Fraction(value))
    return float(value)


@dataclass(frozen=True)
class Numerics:
    """Effective tolerances and guards for one analysis run.

    tau_stoch bounds row-sum defects, tau_char characteristic residuals,
    tau_supp decides numerical support, tau_fix stops value iteration,
    rank_cutoff is the relative singular-value threshold for float-mode
    ranks. Exact mode uses zero for the first three.
    """

    tau_stoch: Value
    tau_char: Value
    tau_supp: Value
    tau_fix: float = 1e-12
    rank_cutoff: float = 1e-8
    vertex_cap: int = 100_000
    sweep_cap: int = 1_000_000

    @staticmethod
    def for_mode(mode: str) -> "Numerics":
        if mode == "exact":
            return Numerics(tau_stoch=Fraction(0), tau_char=Fraction(0), tau_supp=Fraction(0))
        return Numerics(tau_stoch=1e-9, tau_char=1e-9, tau_supp=1e-11)

    def as_dict(self) -> dict:
        return {
            "tau_stoch": float(self.tau_stoch),
            "tau_char": float(self.tau_char),
            "tau_supp": float(self.tau_supp),
            "tau_fix": self.tau_fix,
            "rank_cutoff": self.rank_cutoff,
            "vertex_cap": self.vertex_cap,
            "sweep_cap": self.sweep_cap,
        }


def resolve_numerics(model: "FiniteMdp", numerics) -> Numerics:
    return numerics if numerics is not None else Numerics.for_mode(model.mode)


@dataclass(frozen=True)
class PairIndex:
    """Bijection between admissible state-action pairs and 0..|K|-1.

    Iteration order is (state order, action order) and is stable under
    serialization round trips. The nonabsorbing sub-list gives the
    coordinate order used by every occupancy-type vector.
    """

    pairs: tuple
    position: dict
    nonabsorbing_pairs: tuple
    nonabsorbing_position: dict


@dataclass(frozen=True)
class DeterministicPolicy:
    """A selector mapping every state to one admissible action."""

    selector: dict

    def action(self, state):
        return self.selector[state]

    def key(self) -> tuple:
        """Hashable identity, in the insertion order of the selector."""
        return tuple(sorted(self.selector.items()))


@dataclass
class FiniteMdp:
    """Complete finite control model with a designated absorbing set."""

    states: tuple
    absorbing: frozenset
    actions: dict
    transition: dict
    initial: dict
    reward_dim: int
    rewards: dict
    mode: str = "float"
    _pair_index: PairIndex = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise StructuralError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.states = tuple(self.states)
        self.absorbing = frozenset(self.absorbing)
        self.actions = {x: tuple(acts) for x, acts in self.actions.items()}

    @property
    def nonabsorbing(self) -> tuple:
        return tuple(x for x in self.states if x not in self.absorbing)

    def pair_index(self) -> PairIndex:
        if self._pair_index is None:
            pairs = tuple((x, a) for x in self.states for a in self.actions.get(x, ()))
            live = tuple(p for p in pairs if p[0] not in self.absorbing)
            self._pair_index = PairIndex(
                pairs=pairs,
                position={p: i for i, p in enumerate(pairs)},
                nonabsorbing_pairs=live,
                nonabsorbing_position={p: i for i, p in enumerate(live)},
            )
        return self._pair_index

    def prob(self, x, a, y) -> Value:
        return self.transition.get(x, {}).get(a, {}).get(y, zero(self.mode))

    def row(self, x, a) -> dict:
        return self.transition.get(x, {}).get(a, {})

    def reward(self, x, a) -> tuple:
        return tuple(self.rewards[x][a])

    def initial_prob(self, x) -> Value:
        return self.initial.get(x, zero(self.mode))


@dataclass(frozen=True)
class Violation:
    location: str
    kind: str
    magnitude: Value


@dataclass(frozen=True)
class ValidationReport:
    verdict: str  # "ok" | "violations"
    violations: tuple

    @property
    def ok(self) -> bool:
        return self.verdict == "ok"

    @staticmethod
    def from_violations(violations) -> "ValidationReport":
        violations = tuple(violations)
        return ValidationReport("ok" if not violations else "violations", violations)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "violations": [
                {"location": v.location, "kind": v.kind, "magnitude": float(v.magnitude)}
                for v in self.violations
            ],
        }


def check_structure(model: FiniteMdp) -> None:
    """Raise StructuralError on dangling references or malformed shapes.

    Distinct from validate(): these are not numeric defects but inputs the
    numeric checks cannot even be stated on.
    """
    state_set = set(model.states)
    if len(state_set) != len(model.states):
        raise StructuralError("duplicate state identifiers")
    for x in model.absorbing:
        if x not in state_set:
            raise StructuralError(f"absorbing set references unknown state {x!r}")
    for x in model.states:
        if x not in model.actions:
            raise StructuralError(f"actions: no entry for state {x!r}")
        if len(set(model.actions[x])) != len(model.actions[x]):
            raise StructuralError(f"actions.{x}: duplicate action identifiers")
    for x, per_action in model.transition.items():
        if x not in state_set:
            raise StructuralError(f"transition references unknown state {x!r}")
        for a, row in per_action.items():
            if a not in model.actions[x]:
                raise StructuralError(f"transition.{x}: action {a!r} not admissible")
            for y in row:
                if y not in state_set:
                    raise StructuralError(
                        f"transition.{x}.{a}: unknown target state {y!r}"
                    )
    for x in model.initial:
        if x not in state_set:
            raise StructuralError(f"initial references unknown state {x!r}")
    if not isinstance(model.reward_dim, int) or model.reward_dim < 1:
        raise StructuralError("reward_dim must be a positive integer")
    for x, per_action in model.rewards.items():
        if x not in state_set:
            raise StructuralError(f"rewards references unknown state {x!r}")
        for a, vec in per_action.items():
            if a not in model.actions[x]:
                raise StructuralError(f"rewards.{x}: action {a!r} not admissible")
            if len(vec) != model.reward_dim:
                raise StructuralError(
                    f"rewards.{x}.{a}: reward_dim mismatch, expected "
                    f"{model.reward_dim} components, got {len(vec)}"
                )
    for x in model.states:
        for a in model.actions[x]:
            if x not in model.rewards or a not in model.rewards[x]:
                raise StructuralError(f"rewards: no vector for pair ({x!r}, {a!r})")


def validate(model: FiniteMdp, tau_stoch=None, numerics: Numerics = None) -> ValidationReport:
    """Check the standing structural conditions of an absorbing model.

    Reported kinds: empty_action_set, negative_transition, row_sum,
    delta_not_closed, nonzero_reward_on_delta, negative_initial,
    initial_sum. A verdict of "ok" means the absorbing set is closed and
    reward-free and all distributions are proper within tau_stoch.
    """
    check_structure(model)
    num = resolve_numerics(model, numerics)
    tau = tau_stoch if tau_stoch is not None else num.tau_stoch
    z = zero(model.mode)
    out = []
    for x in model.states:
        if not model.actions[x]:
            out.append(Violation(x, "empty_action_set", z))
    for x in model.states:
        for a in model.actions[x]:
            row = model.row(x, a)
            total = z
            for y, p in row.items():
                total = total + p
                if p < 0:
                    out.append(Violation(f"({x},{a})->{y}", "negative_transition", -p))
            gap = abs(total - 1)
            if gap > tau:
                out.append(Violation(f"({x},{a})", "row_sum", gap))
            if x in model.absorbing:
                inside = sum((p for y, p in row.items() if y in model.absorbing), z)
                gap = abs(inside - 1)
                if gap > tau:
                    out.append(Violation(f"({x},{a})", "delta_not_closed", gap))
                worst = max((abs(c) for c in model.reward(x, a)), default=z)
                if worst > tau:
                    out.append(Violation(f"({x},{a})", "nonzero_reward_on_delta", worst))
    total = z
    for x in model.states:
        p = model.initial_prob(x)
        total = total + p
        if p < 0:
            out.append(Violation(x, "negative_initial", -p))
    gap = abs(total - 1)
    if gap > tau:
        out.append(Violation("initial", "initial_sum", gap))
    return ValidationReport.from_violations(out)


def default_selector(model: FiniteMdp) -> DeterministicPolicy:
    """The canonical selector: first listed action of every state."""
    missing = [x for x in model.states if not model.actions.get(x)]
    if missing:
        raise StructuralError(f"no admissible action at state {missing[0]!r}")
    return DeterministicPolicy({x: model.actions[x][0] for x in model.states})


REQUIRED_KEYS = ("states", "absorbing", "actions", "transition", "initial",
                 "reward_dim", "rewards")


def model_from_dict(doc: dict) -> FiniteMdp:
    if not isinstance(doc, dict):
        raise StructuralError("model document must be a JSON object")
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise StructuralError(f"missing key '{key}'")
    mode = doc.get("mode", "float")
    if mode not in MODES:
        raise StructuralError(f"mode: expected 'exact' or 'float', got {mode!r}")
    states = doc["states"]
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        raise StructuralError("states: expected a list of strings")
    if not isinstance(doc["actions"], dict):
        raise StructuralError("actions: expected an object")
    actions = {}
    for x, acts in doc["actions"].items():
        if not isinstance(acts, list) or not all(isinstance(a, str) for a in acts):
            raise StructuralError(f"actions.{x}: expected a list of strings")
        actions[x] = tuple(acts)
    transition = {}
    if not isinstance(doc["transition"], dict):
        raise StructuralError("transition: expected an object")
    for x, per_action in doc["transition"].items():
        if not isinstance(per_action, dict):
            raise StructuralError(f"transition.{x}: expected an object")
        transition[x] = {}
        for a, row in per_action.items():
            if not isinstance(row, dict):
                raise StructuralError(f"transition.{x}.{a}: expected an object")
            transition[x][a] = {
                y: parse_number(p, mode, f"transition.{x}.{a}.{y}") for y, p in row.items()
            }
    if not isinstance(doc["initial"], dict):
        raise StructuralError("initial: expected an object")
    initial = {x: parse_number(p, mode, f"initial.{x}") for x, p in doc["initial"].items()}
    reward_dim = doc["reward_dim"]
    if not isinstance(reward_dim, int) or isinstance(reward_dim, bool) or reward_dim < 1:
        raise StructuralError("reward_dim: expected a positive integer")
    rewards = {}
    if not isinstance(doc["rewards"], dict):
        raise StructuralError("rewards: expected an object")
    for x, per_action in doc["rewards"].items():
        if not isinstance(per_action, dict):
            raise StructuralError(f"rewards.{x}: expected an object")
        rewards[x] = {}
        for a, vec in per_action.items():
            if not isinstance(vec, list):
                raise StructuralError(f"rewards.{x}.{a}: expected a list")
            if len(vec) != reward_dim:
                raise StructuralError(
                    f"rewards.{x}.{a}: reward_dim mismatch, expected {reward_dim} "
                    f"components, got {len(vec)}"
                )
            rewards[x][a] = tuple(
                parse_number(v, mode, f"rewards.{x}.{a}[{i}]") for i, v in enumerate(vec)
            )
    model = FiniteMdp(
        states=tuple(states),
        absorbing=frozenset(doc["absorbing"]),
        actions=actions,
        transition=transition,
        initial=initial,
        reward_dim=reward_dim,
        rewards=rewards,
        mode=mode,
    )
    check_structure(model)
    return model


def model_to_dict(model: FiniteMdp) -> dict:
    m = model.mode
    return {
        "mode": m,
        "states": list(model.states),
        "absorbing": sorted(model.absorbing),
        "actions": {x: list(model.actions[x]) for x in model.states},
        "transition": {
            x: {
                a: {y: dump_number(p, m) for y, p in model.row(x, a).items()}
                for a in model.actions[x]
            }
            for x in model.states
        },
        "initial": {x: dump_number(p, m) for x, p in model.initial.items()},
        "reward_dim": model.reward_dim,
        "rewards": {
            x: {a: [dump_number(v, m) for v in model.reward(x, a)] for a in model.actions[x]}
            for x in model.states
        },
    }


def load_model(path) -> FiniteMdp:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise StructuralError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise StructuralError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def save_model(model: FiniteMdp, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def convert_mode(model: FiniteMdp, mode: str) -> FiniteMdp:
    """Same model with entries coerced to the other numeric mode.

    exact -> float is lossy in general; float -> exact converts each float
    to its exact binary rational.
    """
    if mode not in MODES:
        raise StructuralError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == model.mode:
        return model
    conv = (lambda v: Fraction(v)) if mode == "exact" else float
    return FiniteMdp(
        states=model.states,
        absorbing=model.absorbing,
        actions=model.actions,
        transition={
            x: {a: {y: conv(p) for y, p in row.items()} for a, row in per.items()}
            for x, per in model.transition.items()
        },
        initial={x: conv(p) for x, p in model.initial.items()},
        reward_dim=model.reward_dim,
        rewards={
            x: {a: tuple(conv(v) for v in vec) for a, vec in per.items()}
            for x, per in model.rewards.items()
        },
        mode=mode,
    )
