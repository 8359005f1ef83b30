"""Finite mixtures of deterministic policies: canonicalization, decomposition,
performance-space reduction, and minimal mixture order.

A finite mixture is operationally a one-shot initial randomization over a
list of selectors; its occupancy measure is by definition the convex
combination of the component occupancies. This module provides:

* ``lissage``: rewrite a chattering kernel of order p into one with the
  same induced per-state distributions and strictly positive weights
  everywhere, by folding each state's zero-weight slots onto its first
  positive slot and splitting that weight evenly across them;
* ``decompose_measure``: exact greedy decomposition of an occupancy
  measure into deterministic occupancies by repeated support reduction.
  Every step extracts the selector of per-state largest weights, peels
  off as much of its occupancy as fits, and strictly shrinks the
  support, so the number of terms never exceeds the face dimension plus
  one (each intermediate measure generates a strictly smaller face);
* ``caratheodory_reduce``: affine-dependence elimination on weighted
  points, stopping when the active points are affinely independent, so
  at most d+1 survive in d dimensions;
* ``decompose_performance``: the pipeline measure -> deterministic terms
  -> reduction in performance space, yielding a mixture of order at most
  d+1 with the requested performance vector (measure-level equality is
  deliberately not promised after the reduction);
* ``minimal_order``: the least order of a mixture achieving a given
  performance vector, computed as 1 plus the minimum face dimension over
  the vertices of the alpha-constrained occupancy polytope. Restricting
  to vertices is justified by support monotonicity of the face dimension
  (see the geometry module); ``brute_force_min_order`` double-checks it
  by exhaustive search over deterministic performance points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from . import _linalg, geometry
from .absorption import max_end_components
from .errors import (CapExceededError, InfeasibleError, NotAbsorbingError,
                     NumericError, StructuralError)
from .model import (DeterministicPolicy, FiniteMdp, Numerics, default_selector,
                    one, resolve_numerics, zero)
from .occupancy import (OccupancyMeasure, StationaryPolicy,
                        characteristic_residual, occupancy_of_chattering,
                        occupancy_of_mixture, occupancy_of_stationary,
                        performance, _weights_of)


@dataclass(frozen=True)
class ChatteringKernel:
    """Order-p randomization over p selectors with state-dependent weights."""

    order: int
    selectors: tuple  # of DeterministicPolicy, length order
    beta: dict        # state -> tuple of order weights

    def __post_init__(self):
        if self.order < 1 or len(self.selectors) != self.order:
            raise StructuralError("chattering kernel order does not match its selectors")


@dataclass(frozen=True)
class MixturePolicy:
    """Simplex weights over a finite list of deterministic selectors."""

    weights: tuple
    selectors: tuple  # of DeterministicPolicy

    def __post_init__(self):
        if len(self.weights) != len(self.selectors) or not self.weights:
            raise StructuralError("mixture weights and selectors must align and be nonempty")

    @property
    def order(self) -> int:
        return len(self.weights)


def occupancy_of_policy(model: FiniteMdp, policy, numerics: Numerics = None) -> OccupancyMeasure:
    """Occupancy of any supported policy object (selector, stationary,
    chattering, or mixture)."""
    if isinstance(policy, MixturePolicy):
        return occupancy_of_mixture(model, policy, numerics)
    if isinstance(policy, ChatteringKernel):
        return occupancy_of_chattering(model, policy, numerics)
    if isinstance(policy, (DeterministicPolicy, StationaryPolicy)):
        return occupancy_of_stationary(model, policy, numerics)
    raise StructuralError(f"unsupported policy object: {policy!r}")


def lissage(kernel: ChatteringKernel) -> ChatteringKernel:
    """Canonicalize a chattering kernel to strictly positive weights.

    Per state x with zero slots Z(x) and first positive slot tau(x), the
    weight beta_tau(x) is split evenly over Z(x) plus tau(x) and every
    zero slot plays the tau(x) selector's action; all other slots are
    untouched. The induced distribution per state is unchanged and every
    output weight is positive.
    """
    p = kernel.order
    states = list(kernel.beta)
    new_beta = {}
    new_actions = {i: {} for i in range(p)}
    for x in states:
        row = kernel.beta[x]
        if len(row) != p:
            raise StructuralError(f"chattering weights at {x!r} have wrong length")
        zeros = [i for i in range(p) if row[i] == 0]
        if not zeros:
            new_beta[x] = tuple(row)
            for i in range(p):
                new_actions[i][x] = kernel.selectors[i].action(x)
            continue
        tau = next(i for i in range(p) if row[i] > 0)
        share = row[tau] / (len(zeros) + 1)
        fold = set(zeros) | {tau}
        new_beta[x] = tuple(share if i in fold else row[i] for i in range(p))
        for i in range(p):
            source = tau if i in zeros else i
            new_actions[i][x] = kernel.selectors[source].action(x)
    selectors = tuple(DeterministicPolicy(new_actions[i]) for i in range(p))
    return ChatteringKernel(order=p, selectors=selectors, beta=new_beta)


def decompose_measure(model: FiniteMdp, measure,
                      numerics: Numerics = None) -> MixturePolicy:
    """Exact convex decomposition into deterministic occupancy measures.

    Iterative support reduction: extract the selector of largest weights
    on the supported states, peel off the largest multiple of its
    occupancy that keeps the remainder nonnegative, renormalize, repeat.
    The remainder's support loses at least one pair per round, so there
    are at most |supp| terms (and in fact at most the face dimension
    plus one).
    """
    num = resolve_numerics(model, numerics)
    weights = _weights_of(measure)
    for pair, w in weights.items():
        if w < -num.tau_supp:
            raise NumericError(f"negative weight {float(w)} at {pair}")
    res = characteristic_residual(model, measure)
    if res > num.tau_char:
        raise NumericError(f"characteristic residual {float(res)} too large")
    theta = default_selector(model)
    pos = model.pair_index().nonabsorbing_position
    current = {p: w for p, w in weights.items() if w > num.tau_supp}
    if not current:
        # zero measure: the initial law already sits on the absorbing set,
        # and every selector has zero occupancy
        return MixturePolicy((one(model.mode),), (theta,))
    terms = []
    remaining = one(model.mode)
    for _ in range(len(current) + 1):
        marginal = {}
        for (x, _a), w in current.items():
            marginal[x] = marginal.get(x, 0) + w
        selector = {}
        for x in model.states:
            if x in model.absorbing or marginal.get(x, 0) <= num.tau_supp:
                selector[x] = theta.action(x)
                continue
            best = None
            best_w = None
            for a in model.actions[x]:
                w = current.get((x, a), 0)
                if best is None or w > best_w:
                    best, best_w = a, w
            selector[x] = best
        gamma = DeterministicPolicy(selector)
        occ = occupancy_of_stationary(model, gamma, num)
        supported = sorted(
            (p for p, w in occ.weights.items() if w > num.tau_supp), key=pos.get
        )
        escaped = [p for p in supported if p not in current]
        if escaped:
            raise NumericError(
                f"decomposition support escape at {escaped[0]}: the extracted "
                "selector's occupancy left the measure's support"
            )
        lam = None
        drop = None
        for p in supported:
            ratio = current[p] / occ.weights[p]
            if lam is None or ratio < lam:
                lam, drop = ratio, p
        if lam >= 1:
            terms.append((remaining, gamma))
            break
        terms.append((remaining * lam, gamma))
        remaining = remaining * (1 - lam)
        nxt = {}
        for p, w in current.items():
            if p == drop:
                continue
            v = (w - lam * occ.weights.get(p, 0)) / (1 - lam)
            if v > num.tau_supp:
                nxt[p] = v
        current = nxt
        if not current:
            break
    else:
        raise NumericError("measure decomposition did not terminate")
    mixture = MixturePolicy(tuple(w for w, _ in terms), tuple(g for _, g in terms))
    replay = occupancy_of_mixture(model, mixture, num)
    worst = zero(model.mode)
    for pair in set(weights) | set(replay.weights):
        gap = abs(replay.get(pair) - weights.get(pair, 0))
        if gap > worst:
            worst = gap
    tol = num.tau_char if model.mode == "exact" else 1e-9
    if worst > tol:
        raise NumericError(f"decomposition replay error {float(worst)}")
    return mixture


def _affine_dependence(points, active, exact, cutoff):
    """A nonzero vector c with sum c_j = 0 and sum c_j p_j = 0, or None."""
    d = len(points[0])
    matrix = [[points[j][i] for j in active] for i in range(d)]
    matrix.append([1] * len(active))
    basis = _linalg.nullspace(matrix, exact, cutoff)
    if not basis:
        return None
    return basis[0]


def caratheodory_reduce(points, weights, target, exact=None, tol=None,
                        cutoff=1e-8) -> list:
    """Shrink a convex representation of ``target`` to affinely independent
    support (hence at most d+1 points in d dimensions).

    Repeatedly finds an affine dependence among the active points and
    shifts weight along it until one hits zero. The combination and the
    total weight are invariant throughout; in exact arithmetic they are
    preserved exactly.
    """
    n = len(points)
    if len(weights) != n or n == 0:
        raise StructuralError("points and weights must align and be nonempty")
    if exact is None:
        exact = not any(
            isinstance(v, float) for p in points for v in p
        ) and not any(isinstance(w, float) for w in weights)
    if tol is None:
        tol = Fraction(0) if exact else 1e-9
    d = len(points[0])
    if any(w < -tol for w in weights):
        raise NumericError("weights must be nonnegative")
    if abs(sum(weights) - 1) > tol:
        raise NumericError("weights must sum to one")
    for i in range(d):
        total = sum(w * p[i] for w, p in zip(weights, points))
        if abs(total - target[i]) > tol:
            raise NumericError(
                f"weighted points miss the target in component {i} by "
                f"{float(abs(total - target[i]))}"
            )
    w = list(weights)
    for _ in range(n + 1):
        active = [j for j in range(n) if w[j] > 0]
        if len(active) <= 1:
            break
        dep = _affine_dependence(points, active, exact, cutoff)
        if dep is None:
            break
        if all(c <= 0 for c in dep):
            dep = [-c for c in dep]
        step = None
        hit = None
        for k, c in enumerate(dep):
            if c > 0:
                ratio = w[active[k]] / c
                if step is None or ratio < step:
                    step, hit = ratio, k
        for k, c in enumerate(dep):
            if c == 0:
                continue
            w[active[k]] = w[active[k]] - step * c
        w[active[hit]] = zero("exact" if exact else "float")
        if not exact:
            for j in active:
                if 0 < w[j] <= 1e-15 or w[j] < 0:
                    w[j] = 0.0
    return w


def decompose_performance(model: FiniteMdp, policy=None, measure=None,
                          alpha=None, numerics: Numerics = None) -> MixturePolicy:
    """Mixture of order at most reward_dim + 1 matching a performance vector.

    The target must be certified achievable: pass a policy achieving it, a
    characteristic-solution measure, or alpha alone (then a witness vertex
    of the alpha-constrained occupancy polytope is searched; an empty
    polytope is an infeasibility). Only performance-level equality is
    promised after the reduction.
    """
    num = resolve_numerics(model, numerics)
    mecs = max_end_components(model)
    if mecs:
        raise NotAbsorbingError(
            "model is not absorbing; performance decomposition refused",
            witness=mecs[0],
        )
    if measure is None and policy is not None:
        measure = occupancy_of_policy(model, policy, num)
    if measure is None:
        if alpha is None:
            raise StructuralError("need a policy, a measure, or a target alpha")
        vertices = geometry.enumerate_vertices(model, alpha=alpha, numerics=num)
        if not vertices:
            raise InfeasibleError("no occupancy measure achieves the target alpha")
        measure = vertices[0]
    target = performance(model, measure)
    if alpha is not None:
        gaps = [abs(target[i] - alpha[i]) for i in range(model.reward_dim)]
        if any(g > num.tau_char for g in gaps):
            raise InfeasibleError(
                "the supplied certificate does not achieve the target alpha"
            )
        target = list(alpha)
    mixture = decompose_measure(model, measure, num)
    cache = {}
    points = []
    for gamma in mixture.selectors:
        key = gamma.key()
        if key not in cache:
            cache[key] = performance(model, occupancy_of_stationary(model, gamma, num))
        points.append(cache[key])
    reduced = caratheodory_reduce(
        points, list(mixture.weights), target,
        exact=model.mode == "exact",
        tol=num.tau_char if model.mode == "float" else Fraction(0),
        cutoff=num.rank_cutoff,
    )
    kept = [(w, g) for w, g in zip(reduced, mixture.selectors) if w > 0]
    return MixturePolicy(tuple(w for w, _ in kept), tuple(g for _, g in kept))


@dataclass(frozen=True)
class MinimalOrderResult:
    p_star: int
    witness: OccupancyMeasure
    mixture: MixturePolicy

    @property
    def order(self) -> int:
        return self.p_star + 1


def minimal_order(model: FiniteMdp, alpha, numerics: Numerics = None,
                  cap: int = None) -> MinimalOrderResult:
    """Least order of a deterministic mixture achieving ``alpha``.

    Enumerates the vertices of the alpha-constrained occupancy polytope,
    minimizes the face dimension over them (sufficient by support
    monotonicity; see the geometry module), and returns the
    lexicographically smallest minimizer with its decomposition, whose
    order is the minimum plus one.
    """
    num = resolve_numerics(model, numerics)
    mecs = max_end_components(model)
    if mecs:
        raise NotAbsorbingError(
            "model is not absorbing; minimal order undefined", witness=mecs[0]
        )
    vertices = geometry.enumerate_vertices(model, alpha=alpha, numerics=num, cap=cap)
    if not vertices:
        raise InfeasibleError("alpha is not achievable by any policy")
    p_star = None
    witness = None
    for vertex in vertices:  # sorted, so the first argmin is lexicographically least
        dim = geometry.parallel_subspace_basis(model, vertex, num).dimension
        if p_star is None or dim < p_star:
            p_star, witness = dim, vertex
    mixture = decompose_measure(model, witness, num)
    if mixture.order > p_star + 1:
        raise NumericError(
            f"decomposition produced order {mixture.order} on a face of "
            f"dimension {p_star}"
        )
    return MinimalOrderResult(p_star=p_star, witness=witness, mixture=mixture)


def all_deterministic_policies(model: FiniteMdp, cap: int = 10_000) -> list:
    """Every selector over the nonabsorbing states (absorbing-state choices
    are fixed to the default and never affect occupancies)."""
    live = model.nonabsorbing
    count = 1
    for x in live:
        count *= len(model.actions[x])
        if count > cap:
            raise CapExceededError(
                f"more than {cap} deterministic policies; brute force refused"
            )
    theta = default_selector(model)
    out = []
    for combo in itertools.product(*(model.actions[x] for x in live)):
        selector = dict(theta.selector)
        selector.update(zip(live, combo))
        out.append(DeterministicPolicy(selector))
    return out


def _affine_solve(points, alpha, exact, tol, cutoff):
    """Weights putting a convex combination of ``points`` on ``alpha``.

    Returns None if the points are affinely dependent (a smaller support
    would do), the system is inconsistent, or the solution leaves the
    simplex.
    """
    n = len(points)
    d = len(alpha)
    matrix = [[points[j][i] for j in range(n)] for i in range(d)]
    matrix.append([1] * n)
    rhs = list(alpha) + [1]
    if exact:
        rows, pivots = _linalg.rref_exact([row + [rhs[i]] for i, row in enumerate(matrix)])
        if any(p == n for p in pivots):
            return None  # inconsistent: pivot in the rhs column
        if len(pivots) < n:
            return None  # affinely dependent support
        sol = [Fraction(0)] * n
        for i, p in enumerate(pivots):
            sol[p] = rows[i][n]
        if any(v < 0 for v in sol):
            return None
        return sol
    import numpy as np

    arr = np.asarray(matrix, dtype=float)
    if _linalg.rank_float(arr, cutoff) < n:
        return None
    sol, residual, _rank, _sv = np.linalg.lstsq(arr, np.asarray(rhs, dtype=float), rcond=None)
    fit = arr @ sol
    if max(abs(fit - np.asarray(rhs, dtype=float))) > tol:
        return None
    if any(v < -tol for v in sol):
        return None
    return [max(float(v), 0.0) for v in sol]


def brute_force_min_order(model: FiniteMdp, alpha, max_order: int,
                          policy_cap: int = 10_000,
                          combo_cap: int = 2_000_000):
    """Smallest n <= max_order with an order-n mixture achieving ``alpha``,
    or None. Independent oracle: exhaustive search over supports of the
    deterministic performance points, exact feasibility per support."""
    policies = all_deterministic_policies(model, policy_cap)
    exact = model.mode == "exact"
    tol = Fraction(0) if exact else 1e-9
    num = Numerics.for_mode(model.mode)
    seen = set()
    points = []
    for gamma in policies:
        vec = tuple(performance(model, occupancy_of_stationary(model, gamma, num)))
        if vec not in seen:
            seen.add(vec)
            points.append(list(vec))
    alpha = list(alpha)
    d = model.reward_dim
    if len(alpha) != d:
        raise StructuralError(f"alpha must have {d} components")
    total = sum(comb(len(points), n) for n in range(2, max_order + 1))
    if total > combo_cap:
        raise CapExceededError(
            f"support search needs {total} combinations; cap is {combo_cap}"
        )
    for n in range(1, max_order + 1):
        if n == 1:
            for p in points:
                if all(abs(p[i] - alpha[i]) <= tol for i in range(d)):
                    return 1
            continue
        for support in itertools.combinations(range(len(points)), n):
            sol = _affine_solve([points[j] for j in support], alpha, exact, tol,
                                num.rank_cutoff)
            if sol is not None:
                return n
    return None
