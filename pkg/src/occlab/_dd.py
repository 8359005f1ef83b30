"""Exact vertex enumeration for systems {x >= 0, A x = b}.

Double-description construction over Fractions: homogenize to the cone
{(x, t) >= 0 : A x = b t}, parametrize the equality kernel by an exact
null-space basis, and build the extreme rays of the resulting inequality
cone incrementally, one constraint at a time, combining adjacent
positive/negative ray pairs. Rays with t > 0 scale to vertices of the
polytope; a ray with t = 0 would witness an unbounded direction, which
cannot occur for the occupancy systems this package enumerates (a
nonnegative invariant flow with no source must vanish on an absorbing
model), so it is reported as a numeric failure.

Tight sets are recomputed from the processed constraints at every step,
which keeps the combinatorial adjacency test exact under degeneracy at
the price of a little desk-scale work.
"""

from fractions import Fraction

from ._linalg import nullspace_exact, rank_exact
from .errors import CapExceededError, NumericError


def _dot(u, v):
    total = Fraction(0)
    for a, b in zip(u, v):
        if a and b:
            total += a * b
    return total


def _normalize(vec):
    for v in vec:
        if v != 0:
            scale = abs(v)
            return tuple(x / scale for x in vec)
    return tuple(vec)


def _independent_prefix(rows, q):
    """Reorder rows so the first q are linearly independent."""
    chosen = []
    chosen_idx = []
    for i, row in enumerate(rows):
        if len(chosen) == q:
            break
        if rank_exact(chosen + [row]) > len(chosen):
            chosen.append(row)
            chosen_idx.append(i)
    if len(chosen) < q:
        raise NumericError("inequality system is rank deficient; cone not pointed")
    rest = [rows[i] for i in range(len(rows)) if i not in set(chosen_idx)]
    return chosen + rest


def _invert(matrix):
    n = len(matrix)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise NumericError("singular base in double description")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(n):
            if r == col or aug[r][col] == 0:
                continue
            factor = aug[r][col]
            aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def extreme_rays(rows, cap):
    """Extreme rays of the pointed cone {z : row . z >= 0 for every row}.

    ``rows`` must have full column rank q. Returns normalized ray tuples.
    """
    rows = [tuple(Fraction(v) for v in row) for row in rows if any(v != 0 for v in row)]
    if not rows:
        return []
    q = len(rows[0])
    ordered = _independent_prefix(rows, q)
    inverse = _invert(ordered[:q])
    rays = [_normalize(tuple(inverse[i][j] for i in range(q))) for j in range(q)]

    def tight_sets(current_rays, upto):
        return [
            frozenset(i for i in range(upto) if _dot(ordered[i], ray) == 0)
            for ray in current_rays
        ]

    for idx in range(q, len(ordered)):
        row = ordered[idx]
        vals = [_dot(row, ray) for ray in rays]
        if all(v >= 0 for v in vals):
            continue
        tight = tight_sets(rays, idx)
        plus = [i for i, v in enumerate(vals) if v > 0]
        minus = [i for i, v in enumerate(vals) if v < 0]
        kept = [rays[i] for i, v in enumerate(vals) if v >= 0]
        fresh = set()
        for ip in plus:
            for im in minus:
                common = tight[ip] & tight[im]
                if len(common) < q - 2:
                    continue
                blocked = any(
                    k != ip and k != im and common <= tight[k] for k in range(len(rays))
                )
                if blocked:
                    continue
                combo = tuple(
                    vals[ip] * rays[im][c] - vals[im] * rays[ip][c] for c in range(q)
                )
                fresh.add(_normalize(combo))
        rays = kept + sorted(fresh)
        if len(rays) > cap:
            raise CapExceededError(
                f"double description exceeded the ray cap ({cap}); raise vertex_cap"
            )
    return rays


def polytope_vertices(matrix, rhs, cap):
    """Vertices of {x >= 0 : matrix x = rhs}, exact, sorted, deduplicated.

    Returns [] when the polytope is empty. With zero columns the polytope
    is the origin of a zero-dimensional space when the right-hand side
    vanishes, encoded as a single empty vertex.
    """
    ncols = len(matrix[0]) if matrix else 0
    if ncols == 0:
        if all(v == 0 for v in rhs):
            return [()]
        return []
    hom = [[Fraction(v) for v in row] + [-Fraction(rhs[i])] for i, row in enumerate(matrix)]
    kernel = nullspace_exact(hom, ncols=ncols + 1)
    q = len(kernel)
    if q == 0:
        return []
    coord_rows = [tuple(kernel[k][i] for k in range(q)) for i in range(ncols + 1)]
    rays = extreme_rays(coord_rows, cap)
    vertices = set()
    for ray in rays:
        point = [_dot(coord_rows[i], ray) for i in range(ncols + 1)]
        scale = point[ncols]
        if scale == 0:
            raise NumericError(
                "unbounded direction in vertex enumeration; the underlying "
                "model is not absorbing"
            )
        vertices.add(tuple(v / scale for v in point[:ncols]))
        if len(vertices) > cap:
            raise CapExceededError(f"vertex enumeration exceeded the cap ({cap})")
    return sorted(vertices)
