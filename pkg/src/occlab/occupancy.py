"""Occupancy measures of stationary policies via the characteristic equations.

The occupancy measure of a policy assigns to every admissible
nonabsorbing pair (x, a) the expected number of visits to that pair
before absorption. For a stationary policy phi it is the unique solution
of the linear system

    rho(x) = eta(x) + sum_y rho(y) * P_phi(x | y)   on nonabsorbing x,
    mu(x, a) = rho(x) * phi(a | x),

with P_phi the policy-averaged kernel restricted to nonabsorbing states.
Absorption makes I - P_phi nonsingular, so the solve is a direct
factorization (fraction-preserving elimination in exact mode).

A weight vector on nonabsorbing pairs solves the characteristic equations
when for every nonabsorbing state the outgoing mass equals the initial
mass plus the incoming policy flow; ``characteristic_residual`` measures
the worst-state defect, and nonnegative solutions are exactly the
occupancy measures of stationary policies.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _linalg
from .errors import NumericError, StructuralError
from .model import (DeterministicPolicy, FiniteMdp, Numerics, Value,
                    default_selector, one, resolve_numerics, zero)


@dataclass(frozen=True)
class StationaryPolicy:
    """Per-state probability distribution over the admissible actions."""

    rows: dict  # state -> {action: probability}

    def prob(self, x, a) -> Value:
        return self.rows.get(x, {}).get(a, 0)


class OccupancyMeasure:
    """Sparse nonnegative weight per admissible nonabsorbing pair.

    The state marginal and the characteristic residual are cached; the
    cache assumes the measure belongs to a single model, which is how
    every constructor in this package uses it.
    """

    __slots__ = ("weights", "residual", "_marginal")

    def __init__(self, weights: dict, residual=None):
        self.weights = {pair: w for pair, w in weights.items() if w != 0}
        self.residual = residual
        self._marginal = None

    def get(self, pair) -> Value:
        return self.weights.get(pair, 0)

    def marginal(self) -> dict:
        if self._marginal is None:
            marg = {}
            for (x, _a), w in self.weights.items():
                marg[x] = marg.get(x, 0) + w
            self._marginal = marg
        return self._marginal

    def mass(self):
        total = 0
        for w in self.weights.values():
            total = total + w
        return total

    def support(self, tau=0) -> frozenset:
        return frozenset(p for p, w in self.weights.items() if abs(w) > tau)

    def __eq__(self, other):
        return isinstance(other, OccupancyMeasure) and self.weights == other.weights

    def __repr__(self):
        return f"OccupancyMeasure({self.weights!r})"


def support_of(weights, tau=0) -> frozenset:
    """Numerical support of a pair-indexed weight map (measures or signed)."""
    if isinstance(weights, OccupancyMeasure):
        weights = weights.weights
    return frozenset(p for p, w in weights.items() if abs(w) > tau)


def as_stationary(model: FiniteMdp, policy) -> StationaryPolicy:
    """Coerce a deterministic selector to its point-mass stationary policy."""
    if isinstance(policy, StationaryPolicy):
        return policy
    if isinstance(policy, DeterministicPolicy):
        unit = one(model.mode)
        return StationaryPolicy({x: {policy.action(x): unit} for x in model.states})
    raise StructuralError(f"not a stationary or deterministic policy: {policy!r}")


def check_policy(model: FiniteMdp, policy: StationaryPolicy, numerics: Numerics = None) -> None:
    num = resolve_numerics(model, numerics)
    for x in model.nonabsorbing:
        row = policy.rows.get(x)
        if not row:
            raise StructuralError(f"policy: no distribution at state {x!r}")
        admissible = set(model.actions[x])
        total = zero(model.mode)
        for a, p in row.items():
            if a not in admissible:
                raise StructuralError(f"policy at {x!r}: action {a!r} not admissible")
            if p < 0:
                raise StructuralError(f"policy at {x!r}: negative weight on {a!r}")
            total = total + p
        if abs(total - 1) > num.tau_stoch:
            raise NumericError(f"policy row at {x!r} sums to {float(total)}, not 1")


def _averaged_kernel(model: FiniteMdp, policy: StationaryPolicy, source, target) -> Value:
    """P_phi(target | source) = sum_a phi(a | source) Q(target | source, a)."""
    total = zero(model.mode)
    for a, p in policy.rows.get(source, {}).items():
        if p == 0:
            continue
        q = model.row(source, a).get(target)
        if q:
            total = total + p * q
    return total


def occupancy_of_stationary(model: FiniteMdp, policy,
                            numerics: Numerics = None) -> OccupancyMeasure:
    """Occupancy measure of a stationary (or deterministic) policy.

    Solves the state-marginal system directly; a singular system means the
    model is not absorbing, in which case the refusal points at the
    absorption certificate.
    """
    num = resolve_numerics(model, numerics)
    policy = as_stationary(model, policy)
    check_policy(model, policy, num)
    live = model.nonabsorbing
    n = len(live)
    index = {x: i for i, x in enumerate(live)}
    # (I - P_phi)^T rho = eta restricted to nonabsorbing states
    matrix = [[(1 if i == j else 0) - _averaged_kernel(model, policy, live[j], live[i])
               for j in range(n)] for i in range(n)]
    rhs = [model.initial_prob(x) for x in live]
    try:
        rho = _linalg.solve(matrix, rhs, model.mode == "exact")
    except NumericError as exc:
        raise NumericError(
            "characteristic system is singular; the model is not absorbing "
            "(run the absorption certificate)"
        ) from exc
    weights = {}
    for x in live:
        rx = rho[index[x]]
        if rx == 0:
            continue
        for a, p in policy.rows.get(x, {}).items():
            if p == 0:
                continue
            weights[(x, a)] = rx * p
    measure = OccupancyMeasure(weights)
    res = characteristic_residual(model, measure)
    if res > num.tau_char:
        raise NumericError(
            f"characteristic residual {float(res)} exceeds tolerance; the model "
            "is likely not absorbing (run the absorption certificate)"
        )
    return measure


def _weights_of(measure) -> dict:
    return measure.weights if isinstance(measure, OccupancyMeasure) else dict(measure)


def _net_flow(model: FiniteMdp, weights: dict) -> dict:
    """Per nonabsorbing state: outgoing mass minus incoming kernel flow."""
    flow = {x: zero(model.mode) for x in model.nonabsorbing}
    for (y, b), w in weights.items():
        if w == 0:
            continue
        if y in model.absorbing or b not in model.actions.get(y, ()):
            raise StructuralError(f"weight on inadmissible pair ({y!r}, {b!r})")
        flow[y] = flow[y] + w
        for target, q in model.row(y, b).items():
            if target in model.absorbing or q == 0:
                continue
            flow[target] = flow[target] - w * q
    return flow


def characteristic_residual(model: FiniteMdp, measure) -> Value:
    """Sup-norm defect of the characteristic equations.

    Zero (exact mode) exactly when the weights solve the equations; the
    result is cached on OccupancyMeasure instances.
    """
    if isinstance(measure, OccupancyMeasure) and measure.residual is not None:
        return measure.residual
    flow = _net_flow(model, _weights_of(measure))
    res = zero(model.mode)
    for x, f in flow.items():
        gap = abs(f - model.initial_prob(x))
        if gap > res:
            res = gap
    if isinstance(measure, OccupancyMeasure):
        measure.residual = res
    return res


def invariance_residual(model: FiniteMdp, weights) -> Value:
    """Sup-norm defect of the homogeneous invariance equation.

    Zero exactly when the signed weights are invariant under the kernel
    restricted to nonabsorbing states (the marginal equals the flow).
    """
    flow = _net_flow(model, _weights_of(weights))
    res = zero(model.mode)
    for f in flow.values():
        if abs(f) > res:
            res = abs(f)
    return res


def policy_from_measure(model: FiniteMdp, measure,
                        numerics: Numerics = None) -> StationaryPolicy:
    """Stationary policy whose occupancy measure reproduces the input.

    Off the support the policy falls back to the default selector. The
    input must be a nonnegative characteristic solution.
    """
    num = resolve_numerics(model, numerics)
    weights = _weights_of(measure)
    for pair, w in weights.items():
        if w < -num.tau_supp:
            raise NumericError(f"negative weight {float(w)} at {pair}")
    res = characteristic_residual(model, measure)
    if res > num.tau_char:
        raise NumericError(f"characteristic residual {float(res)} too large")
    marginal = {}
    for (x, _a), w in weights.items():
        marginal[x] = marginal.get(x, 0) + w
    theta = default_selector(model)
    unit = one(model.mode)
    rows = {}
    for x in model.states:
        mx = marginal.get(x, 0)
        if x not in model.absorbing and mx > num.tau_supp:
            rows[x] = {a: w / mx for (y, a), w in weights.items()
                       if y == x and w > num.tau_supp}
        else:
            rows[x] = {theta.action(x): unit}
    return StationaryPolicy(rows)


def performance(model: FiniteMdp, measure) -> list:
    """Expected total reward vector mu(r), componentwise."""
    total = [zero(model.mode)] * model.reward_dim
    for (x, a), w in _weights_of(measure).items():
        if w == 0:
            continue
        vec = model.reward(x, a)
        for i in range(model.reward_dim):
            if vec[i] != 0:
                total[i] = total[i] + w * vec[i]
    return total


def occupancy_of_mixture(model: FiniteMdp, mixture,
                         numerics: Numerics = None) -> OccupancyMeasure:
    """Convex combination of the component deterministic occupancies.

    This is the defining identity of a finite mixture; it is generally
    not the occupancy of any per-state flattening of the components.
    """
    num = resolve_numerics(model, numerics)
    weights = list(mixture.weights)
    if not weights or len(weights) != len(mixture.selectors):
        raise StructuralError("mixture weights and selectors must align and be nonempty")
    total = sum(weights)
    if abs(total - 1) > num.tau_stoch or any(w < 0 for w in weights):
        raise StructuralError("mixture weights must lie in the simplex")
    combined = {}
    cache = {}
    for alpha, selector in zip(weights, mixture.selectors):
        if alpha == 0:
            continue
        key = selector.key()
        if key not in cache:
            cache[key] = occupancy_of_stationary(model, selector, num)
        for pair, w in cache[key].weights.items():
            combined[pair] = combined.get(pair, 0) + alpha * w
    return OccupancyMeasure(combined)


def flatten_chattering(model: FiniteMdp, kernel) -> StationaryPolicy:
    """Per-state stationary policy induced by a chattering kernel."""
    rows = {}
    for x in model.states:
        beta = kernel.beta[x]
        if len(beta) != kernel.order:
            raise StructuralError(f"chattering weights at {x!r} have wrong length")
        row = {}
        for b, selector in zip(beta, kernel.selectors):
            if b == 0:
                continue
            if b < 0:
                raise StructuralError(f"negative chattering weight at {x!r}")
            a = selector.action(x)
            row[a] = row.get(a, 0) + b
        rows[x] = row
    return StationaryPolicy(rows)


def occupancy_of_chattering(model: FiniteMdp, kernel,
                            numerics: Numerics = None) -> OccupancyMeasure:
    """Occupancy of a chattering policy via its induced stationary policy."""
    return occupancy_of_stationary(model, flatten_chattering(model, kernel), numerics)
