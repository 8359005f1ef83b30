"""Absorption certificates: end components, worst-case hitting times, tail bounds.

A finite model is absorbing exactly when no end component survives inside
the nonabsorbing states: an end component is a nonempty set of states
with, per state, at least one action whose transition mass stays inside
the set, the induced digraph being strongly connected. An empty maximal
end component decomposition therefore certifies that every policy hits
the absorbing set with probability one and in finite expected time.

For absorbing models the module computes the worst-case expected hitting
time vector v (v = 0 on the absorbing set, v = 1 + max_a Qv elsewhere)
and a geometric tail certificate: with N the number of nonabsorbing
states and epsilon the worst-case probability of absorbing within N
steps, the series sum_{t >= n} P(T > t) is bounded by
N * (1 - epsilon)^floor(n / N) / epsilon under every policy, including
history-dependent ones (each length-N block absorbs with probability at
least epsilon regardless of the past). The bound vanishing as n grows is
the explicit certificate of the uniform absorption condition; on finite
models the absorbing and uniformly absorbing verdicts coincide, and the
reports cite this dynamic-programming bound rather than assuming the
equivalence silently.

Verdicts quantify over every start state (equivalently, over every
initial distribution): the end-component scan covers all nonabsorbing
states and the hitting-time vector must be finite on all of them. This
is the certificate-level notion; it implies finiteness of the expected
hitting time from the model's own initial distribution under every
policy.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotAbsorbingError, NumericError
from .model import (FiniteMdp, Numerics, Value, default_selector, one,
                    resolve_numerics, zero)
from ._linalg import solve


@dataclass(frozen=True)
class EndComponent:
    """A closed, strongly connected sub-system inside the nonabsorbing states."""

    states: frozenset
    actions: dict  # state -> tuple of actions whose mass stays inside

    def as_dict(self) -> dict:
        return {
            "states": sorted(self.states),
            "actions": {x: list(self.actions[x]) for x in sorted(self.states)},
        }


@dataclass(frozen=True)
class TailBound:
    """Geometric dominating function n -> N * (1 - eps)^floor(n/N) / eps."""

    N: int
    epsilon: Value

    def __call__(self, n: int):
        if self.N == 0:
            return 0.0
        return self.N * (1 - self.epsilon) ** (n // self.N) / self.epsilon


@dataclass(frozen=True)
class AbsorptionCertificate:
    verdict: str  # "absorbing" | "not_absorbing"
    mec_witness: EndComponent = None
    v: dict = None
    eta_v: Value = None
    N: int = None
    epsilon: Value = None

    @property
    def absorbing(self) -> bool:
        return self.verdict == "absorbing"

    def tail_bound(self) -> TailBound:
        return TailBound(self.N, self.epsilon)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "mec_witness": self.mec_witness.as_dict() if self.mec_witness else None,
            "v": {x: float(val) for x, val in self.v.items()} if self.v else None,
            "eta_v": float(self.eta_v) if self.eta_v is not None else None,
            "N": self.N,
            "epsilon": float(self.epsilon) if self.epsilon is not None else None,
        }


def _strongly_connected(nodes, edges):
    """Tarjan's algorithm, iterative. edges: node -> iterable of nodes."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    components = []
    counter = [0]
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(edges.get(root, ())))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = low[succ] = counter[0]
                    counter[0] += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(edges.get(succ, ()))))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    top = stack.pop()
                    on_stack.discard(top)
                    comp.append(top)
                    if top == node:
                        break
                components.append(comp)
    return components


def max_end_components(model: FiniteMdp) -> list:
    """All maximal end components of the sub-model on nonabsorbing states.

    An empty result certifies absorption: no policy can remain outside the
    absorbing set forever.
    """
    order = {x: i for i, x in enumerate(model.states)}
    live = set(model.nonabsorbing)
    result = []
    candidates = [live] if live else []
    while candidates:
        current = candidates.pop()
        # Drop states until every remaining one keeps some action inside.
        allowed = {}
        while True:
            allowed = {}
            removed = False
            for x in list(current):
                acts = tuple(
                    a for a in model.actions[x]
                    if all(y in current for y, p in model.row(x, a).items() if p != 0)
                )
                if acts:
                    allowed[x] = acts
                else:
                    current.discard(x)
                    removed = True
            if not removed:
                break
        if not current:
            continue
        edges = {
            x: sorted(
                {y for a in allowed[x] for y, p in model.row(x, a).items() if p != 0},
                key=order.get,
            )
            for x in current
        }
        comps = _strongly_connected(sorted(current, key=order.get), edges)
        if len(comps) == 1 and len(comps[0]) == len(current):
            result.append(EndComponent(frozenset(current), allowed))
        else:
            candidates.extend(set(c) for c in comps)
    result.sort(key=lambda ec: sorted(order[x] for x in ec.states))
    return result


def _one_step(model: FiniteMdp, x, a, values, live_set):
    """sum_y Q(y | x, a) * values[y] over nonabsorbing targets."""
    total = zero(model.mode)
    for y, p in model.row(x, a).items():
        if p == 0 or y not in live_set:
            continue
        total = total + p * values[y]
    return total


def _evaluate_selector(model: FiniteMdp, selector, live, live_set):
    """Exact hitting-time values of one selector: solve (I - Q_phi) v = 1."""
    n = len(live)
    index = {x: i for i, x in enumerate(live)}
    matrix = []
    for x in live:
        a = selector[x]
        row = [zero(model.mode)] * n
        row[index[x]] = row[index[x]] + 1
        for y, p in model.row(x, a).items():
            if y in live_set and p != 0:
                row[index[y]] = row[index[y]] - p
        matrix.append(row)
    rhs = [one(model.mode)] * n
    sol = solve(matrix, rhs, model.mode == "exact")
    return {x: sol[index[x]] for x in live}


def max_expected_hitting_time(model: FiniteMdp, numerics: Numerics = None) -> dict:
    """Value vector of the worst-case expected hitting time.

    v = 0 on the absorbing set and v = 1 + max_a Qv elsewhere; the maximum
    over all policies of the expected hitting time from the initial
    distribution is the inner product of eta with v. Exact mode runs
    policy iteration over selectors (finitely many, exact solves); float
    mode runs value iteration to a tau_fix fixed point.
    """
    num = resolve_numerics(model, numerics)
    mecs = max_end_components(model)
    if mecs:
        raise NotAbsorbingError(
            "model is not absorbing: an end component avoids the absorbing set",
            witness=mecs[0],
        )
    live = list(model.nonabsorbing)
    live_set = set(live)
    values = {x: zero(model.mode) for x in model.states}
    if not live:
        return values
    if model.mode == "exact":
        selector = {x: default_selector(model).action(x) for x in live}
        for _ in range(num.sweep_cap):
            v = _evaluate_selector(model, selector, live, live_set)
            improved = False
            for x in live:
                current = _one_step(model, x, selector[x], v, live_set)
                for a in model.actions[x]:
                    if a == selector[x]:
                        continue
                    if _one_step(model, x, a, v, live_set) > current:
                        selector[x] = a
                        current = _one_step(model, x, a, v, live_set)
                        improved = True
            if not improved:
                values.update(v)
                return values
        raise NumericError("policy iteration did not settle within the sweep cap")
    v = {x: 0.0 for x in live}
    for _ in range(num.sweep_cap):
        new = {
            x: 1.0 + max(_one_step(model, x, a, v, live_set) for a in model.actions[x])
            for x in live
        }
        # Sweeps are monotone from v = 0, so the max-norm of the difference
        # dominates its span; stopping on it implies the span rule.
        gap = max(new[x] - v[x] for x in live)
        v = new
        if gap <= num.tau_fix:
            values.update(v)
            return values
    raise NumericError(
        "value iteration hit the sweep cap; absorption is near-degenerate"
    )


def expected_hitting_time_bound(model: FiniteMdp, numerics: Numerics = None) -> Value:
    """eta(v): the worst expected absorption time from the initial law."""
    v = max_expected_hitting_time(model, numerics)
    total = zero(model.mode)
    for x in model.states:
        p = model.initial_prob(x)
        if p != 0:
            total = total + p * v[x]
    return total


def uniform_tail_bound(model: FiniteMdp, numerics: Numerics = None) -> TailBound:
    """Geometric certificate dominating the policy-uniform tail series.

    epsilon is the worst-case probability of reaching the absorbing set
    within N = #nonabsorbing states steps, computed by a dynamic program
    taking the minimum over actions at every step; absorption guarantees
    epsilon > 0.
    """
    mecs = max_end_components(model)
    if mecs:
        raise NotAbsorbingError(
            "model is not absorbing: an end component avoids the absorbing set",
            witness=mecs[0],
        )
    live = list(model.nonabsorbing)
    n = len(live)
    if n == 0:
        return TailBound(0, one(model.mode))
    reach = {x: one(model.mode) if x in model.absorbing else zero(model.mode)
             for x in model.states}
    for _ in range(n):
        new = dict(reach)
        for x in live:
            new[x] = min(
                sum((p * reach[y] for y, p in model.row(x, a).items() if p != 0),
                    zero(model.mode))
                for a in model.actions[x]
            )
        reach = new
    epsilon = min(reach[x] for x in live)
    if epsilon <= 0:
        raise NumericError("tail-bound DP produced epsilon <= 0 on an absorbing model")
    return TailBound(n, epsilon)


def absorption_certificate(model: FiniteMdp, numerics: Numerics = None) -> AbsorptionCertificate:
    """Machine-checkable verdict: an end-component witness, or (v, N, epsilon)."""
    mecs = max_end_components(model)
    if mecs:
        return AbsorptionCertificate(verdict="not_absorbing", mec_witness=mecs[0])
    v = max_expected_hitting_time(model, numerics)
    eta_v = zero(model.mode)
    for x in model.states:
        p = model.initial_prob(x)
        if p != 0:
            eta_v = eta_v + p * v[x]
    bound = uniform_tail_bound(model, numerics)
    return AbsorptionCertificate(
        verdict="absorbing", v=v, eta_v=eta_v, N=bound.N, epsilon=bound.epsilon
    )
