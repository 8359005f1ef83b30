"""Faces of the occupancy polytope, their parallel subspaces, and vertices.

On a finite model the set of occupancy measures is the polytope of
nonnegative solutions of the characteristic equations. The face generated
by a measure mu, its relative algebraic interior and its affine hull all
reduce to support combinatorics plus linear algebra:

* a measure nu with bounded density against mu exists exactly when
  supp(nu) is contained in supp(mu) (take the constant bounding the
  finitely many ratios), and two-sided bounds hold exactly when the
  supports are equal; so face membership is "characteristic solution,
  nonnegative, support contained" and interior membership is the same
  with support equality;
* the linear subspace parallel to the affine hull consists of the signed
  invariant vectors supported inside supp(mu): the null space of the
  flow map restricted to the support coordinates. Its dimension equals
  the face dimension.

Support monotonicity is worth recording as a lemma because the mixture
module leans on it: supp(nu) contained in supp(mu) implies that the
invariant vectors supported in supp(nu) form a subspace of those
supported in supp(mu), hence dim V(nu) <= dim V(mu). A face of the
polytope therefore minimizes dim V at one of its vertices, which is why
vertex enumeration suffices to minimize over a constrained occupancy set.

Float-mode supports are decided by the tau_supp threshold and ranks by a
relative singular-value cutoff; both effective values are recorded in
every face descriptor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import _dd, _linalg
from .errors import NumericError
from .model import FiniteMdp, Numerics, resolve_numerics, zero
from .occupancy import (OccupancyMeasure, characteristic_residual,
                        invariance_residual, support_of, _weights_of)


@dataclass(frozen=True)
class SignedInvariantVector:
    """Signed pair weights whose marginal equals their kernel flow."""

    weights: dict

    def get(self, pair):
        return self.weights.get(pair, 0)


@dataclass
class FaceDescriptor:
    """Support, dimension and basis of the face generated by a measure."""

    support: tuple
    dimension: int
    basis: list
    kernel_dim: int = None
    image_dim: int = None
    vertices: list = None
    numerics: dict = field(default_factory=dict)


def _ordered_support(model: FiniteMdp, measure, tau) -> tuple:
    pos = model.pair_index().nonabsorbing_position
    supp = support_of(measure, tau)
    return tuple(sorted(supp, key=pos.get))


def _require_solution(model, measure, num):
    res = characteristic_residual(model, measure)
    if res > num.tau_char:
        raise NumericError(
            f"measure is not a characteristic solution (residual {float(res)})"
        )


def _flow_matrix(model: FiniteMdp, pairs) -> list:
    """Rows: one per nonabsorbing state; columns: the given pairs.

    Row x, column (y, b) holds [y == x] - Q(x | y, b), so the null space
    is exactly the set of signed invariant vectors supported on ``pairs``.
    """
    rows = []
    for x in model.nonabsorbing:
        row = []
        for (y, b) in pairs:
            coeff = 1 if y == x else 0
            q = model.row(y, b).get(x)
            if q:
                coeff = coeff - q
            row.append(coeff)
        rows.append(row)
    return rows


def face_membership(model: FiniteMdp, measure, probe, numerics: Numerics = None) -> bool:
    """Is ``probe`` in the face generated by ``measure``?

    True exactly when the probe is a nonnegative characteristic solution
    whose support is contained in the support of the measure.
    """
    num = resolve_numerics(model, numerics)
    _require_solution(model, measure, num)
    weights = _weights_of(probe)
    if any(w < -num.tau_supp for w in weights.values()):
        return False
    if characteristic_residual(model, probe) > num.tau_char:
        return False
    return support_of(probe, num.tau_supp) <= support_of(measure, num.tau_supp)


def rai_membership(model: FiniteMdp, measure, probe, numerics: Numerics = None) -> bool:
    """Is ``probe`` in the relative algebraic interior of the face?

    Same as face membership but with support equality (the finite form of
    two-sided density bounds).
    """
    num = resolve_numerics(model, numerics)
    _require_solution(model, measure, num)
    weights = _weights_of(probe)
    if any(w < -num.tau_supp for w in weights.values()):
        return False
    if characteristic_residual(model, probe) > num.tau_char:
        return False
    return support_of(probe, num.tau_supp) == support_of(measure, num.tau_supp)


def affine_hull_membership(model: FiniteMdp, measure, point,
                           numerics: Numerics = None) -> bool:
    """Is the signed ``point`` in the affine hull of the face of ``measure``?

    True exactly when point - measure is an invariant signed vector
    supported inside supp(measure); no sign condition applies.
    """
    num = resolve_numerics(model, numerics)
    _require_solution(model, measure, num)
    base = _weights_of(measure)
    other = _weights_of(point)
    diff = {}
    for pair in set(base) | set(other):
        v = other.get(pair, 0) - base.get(pair, 0)
        if v != 0:
            diff[pair] = v
    if invariance_residual(model, diff) > num.tau_char:
        return False
    return support_of(diff, num.tau_supp) <= support_of(measure, num.tau_supp)


def parallel_subspace_basis(model: FiniteMdp, measure,
                            numerics: Numerics = None) -> FaceDescriptor:
    """Basis of the linear subspace parallel to the face's affine hull.

    The basis spans the null space of the flow map restricted to the
    support coordinates; its length is the face dimension. Exact mode
    uses fraction-preserving reduction (canonical free-variable basis),
    float mode a singular-value cutoff.
    """
    num = resolve_numerics(model, numerics)
    _require_solution(model, measure, num)
    pairs = _ordered_support(model, measure, num.tau_supp)
    exact = model.mode == "exact"
    matrix = _flow_matrix(model, pairs)
    vectors = _linalg.nullspace(matrix, exact, num.rank_cutoff, ncols=len(pairs))
    basis = []
    for vec in vectors:
        weights = {pair: v for pair, v in zip(pairs, vec) if v != 0}
        res = invariance_residual(model, weights)
        if res > num.tau_char:
            raise NumericError(f"null-space vector has invariance residual {float(res)}")
        basis.append(SignedInvariantVector(weights))
    return FaceDescriptor(
        support=pairs,
        dimension=len(basis),
        basis=basis,
        numerics={
            "mode": model.mode,
            "tau_char": float(num.tau_char),
            "tau_supp": float(num.tau_supp),
            "rank_cutoff": num.rank_cutoff,
        },
    )


def constrained_face_dims(model: FiniteMdp, measure,
                          numerics: Numerics = None) -> tuple:
    """(dim V, dim of the reward-null subspace, dim of the reward image).

    The reward evaluation map sends an invariant vector to its reward
    totals; the triple satisfies dim V = kernel + image exactly because
    the kernel dimension is defined as the deficiency of the rank.
    """
    num = resolve_numerics(model, numerics)
    face = parallel_subspace_basis(model, measure, num)
    if face.dimension == 0:
        return (0, 0, 0)
    exact = model.mode == "exact"
    columns = []
    for vec in face.basis:
        totals = [zero(model.mode)] * model.reward_dim
        for (x, a), w in vec.weights.items():
            reward = model.reward(x, a)
            for i in range(model.reward_dim):
                if reward[i] != 0:
                    totals[i] = totals[i] + w * reward[i]
        columns.append(totals)
    matrix = [[columns[j][i] for j in range(face.dimension)]
              for i in range(model.reward_dim)]
    image = _linalg.matrix_rank(matrix, exact, num.rank_cutoff)
    return (face.dimension, face.dimension - image, image)


def enumerate_vertices(model: FiniteMdp, support=None, alpha=None,
                       numerics: Numerics = None, cap: int = None) -> list:
    """Vertices of {nu >= 0, characteristic equations, supp within support}.

    ``support=None`` keeps every nonabsorbing pair (the whole occupancy
    polytope); passing a support set pre-eliminates its complement before
    enumeration. ``alpha`` adds the reward equality rows, restricting to
    the measures with that performance vector. Enumeration is exact
    regardless of the model mode (float entries convert to their exact
    binary rationals); vertices are returned in the model's mode, sorted,
    so the result is reproducible.
    """
    num = resolve_numerics(model, numerics)
    cap = cap if cap is not None else num.vertex_cap
    index = model.pair_index()
    if support is None:
        pairs = index.nonabsorbing_pairs
    else:
        pos = index.nonabsorbing_position
        pairs = tuple(sorted(support, key=pos.get))
    matrix = [[Fraction(v) for v in row] for row in _flow_matrix(model, pairs)]
    rhs = [Fraction(model.initial_prob(x)) for x in model.nonabsorbing]
    if alpha is not None:
        alpha = list(alpha)
        if len(alpha) != model.reward_dim:
            raise NumericError(
                f"alpha has {len(alpha)} components, model has reward_dim "
                f"{model.reward_dim}"
            )
        for i in range(model.reward_dim):
            matrix.append([Fraction(model.reward(x, a)[i]) for (x, a) in pairs])
            rhs.append(Fraction(alpha[i]))
    raw = _dd.polytope_vertices(matrix, rhs, cap)
    out = []
    for vert in raw:
        if model.mode == "exact":
            weights = {pair: v for pair, v in zip(pairs, vert)}
        else:
            weights = {pair: float(v) for pair, v in zip(pairs, vert)}
        out.append(OccupancyMeasure(weights))
    return out


def face_vertices(model: FiniteMdp, measure, alpha=None,
                  numerics: Numerics = None, cap: int = None) -> list:
    """Vertices of the face generated by ``measure`` (alpha-constrained if given)."""
    num = resolve_numerics(model, numerics)
    _require_solution(model, measure, num)
    support = support_of(measure, num.tau_supp)
    return enumerate_vertices(model, support=support, alpha=alpha, numerics=num, cap=cap)


def describe_face(model: FiniteMdp, measure, numerics: Numerics = None,
                  constrained: bool = False, with_vertices: bool = False,
                  cap: int = None) -> FaceDescriptor:
    """Full face report: basis, dims, optional reward split and vertex list."""
    num = resolve_numerics(model, numerics)
    face = parallel_subspace_basis(model, measure, num)
    if constrained:
        _dim, kernel_dim, image_dim = constrained_face_dims(model, measure, num)
        face.kernel_dim = kernel_dim
        face.image_dim = image_dim
    if with_vertices:
        face.vertices = face_vertices(model, measure, numerics=num, cap=cap)
    return face
