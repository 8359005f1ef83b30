"""Independent oracles the production paths are checked against.

Everything here is deliberately built from first principles, separate
from the package's solvers: forward-iteration truncated series for
occupancies and hitting times, boolean-closure recurrence analysis for
chains, basic-solution enumeration for polytope vertices, a tiny exact
Phase-I simplex for convex representations, and a local rational row
reduction used by all of them.
"""

from fractions import Fraction
from itertools import combinations


# --- local exact linear algebra (independent of occlab._linalg) ---------

def rref(rows):
    rows = [list(r) for r in rows]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rank(rows):
    return len(rref(rows)[1])


def affine_dimension(points):
    """Dimension of the affine hull of a finite point set."""
    points = [list(p) for p in points]
    if len(points) <= 1:
        return 0
    base = points[0]
    diffs = [[v - b for v, b in zip(p, base)] for p in points[1:]]
    return rank(diffs)


# --- forward-iteration series oracle -------------------------------------

def forward_series(model, policy, tail_tol=1e-12, max_steps=200_000):
    """Truncated-series estimates of occupancy and expected hitting time.

    Iterates the state distribution restricted to nonabsorbing states and
    accumulates, which converges geometrically on absorbing models. Bails
    out when the remaining live mass cannot contribute more than tail_tol
    (geometric extrapolation), and asserts convergence.
    """
    live = list(model.nonabsorbing)
    dist = {x: float(model.initial_prob(x)) for x in live}
    occupancy = {}
    expected_time = 0.0
    prev_mass = None
    for _ in range(max_steps):
        mass = sum(dist.values())
        if prev_mass is not None and prev_mass > 0:
            ratio = mass / prev_mass
            if ratio < 1 and mass * ratio / (1 - ratio) < tail_tol:
                pass  # tail negligible after this sweep
        if mass < tail_tol:
            return occupancy, expected_time
        expected_time += mass
        nxt = {x: 0.0 for x in live}
        for x in live:
            px = dist[x]
            if px == 0.0:
                continue
            for a, p in policy.rows.get(x, {}).items():
                if p == 0:
                    continue
                occupancy[(x, a)] = occupancy.get((x, a), 0.0) + px * float(p)
                for y, q in model.row(x, a).items():
                    if y in model.absorbing or q == 0:
                        continue
                    nxt[y] += px * float(p) * float(q)
        prev_mass = mass
        dist = nxt
    raise AssertionError("forward series did not converge; oracle horizon too small")


# --- chain recurrence (absorption of a fixed selector) -------------------

def chain_absorbs_from_everywhere(model, selector):
    """True when the selector's chain reaches the absorbing set with
    probability one from every state: no recurrent class survives outside
    the absorbing set. Uses boolean reachability closure only."""
    states = list(model.states)
    n = len(states)
    pos = {x: i for i, x in enumerate(states)}
    reach = [[False] * n for _ in range(n)]
    for x in states:
        i = pos[x]
        reach[i][i] = True
        if x in model.absorbing:
            continue
        for y, p in model.row(x, selector.action(x)).items():
            if p != 0:
                reach[i][pos[y]] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                row_i = reach[i]
                row_k = reach[k]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    for x in states:
        if x in model.absorbing:
            continue
        i = pos[x]
        # x lies in a recurrent class iff its SCC has no edge leaving it
        scc = [j for j in range(n) if reach[i][j] and reach[j][i]]
        leaves = False
        for j in scc:
            y = states[j]
            if y in model.absorbing:
                leaves = True
                break
            for z, p in model.row(y, selector.action(y)).items():
                if p != 0 and pos[z] not in scc:
                    leaves = True
                    break
            if leaves:
                break
        if not leaves:
            return False  # x's class is recurrent and entirely nonabsorbing
    return True


def selector_hitting_times(model, selector):
    """Exact expected hitting times of one selector by direct solve."""
    live = [x for x in model.nonabsorbing]
    n = len(live)
    index = {x: i for i, x in enumerate(live)}
    rows = []
    for x in live:
        row = [Fraction(0)] * n
        row[index[x]] += 1
        for y, p in model.row(x, selector.action(x)).items():
            if y in index and p != 0:
                row[index[y]] -= Fraction(p)
        rows.append(row + [Fraction(1)])
    reduced, pivots = rref(rows)
    if len(pivots) < n or any(p == n for p in pivots):
        raise ArithmeticError("selector chain does not absorb; no finite hitting time")
    sol = [Fraction(0)] * n
    for i, p in enumerate(pivots):
        sol[p] = reduced[i][n]
    return {x: sol[index[x]] for x in live}


# --- brute-force vertex enumeration (basic feasible solutions) -----------

def occupancy_system(model, support=None, alpha=None):
    """Exact (matrix, rhs, pairs) of the occupancy polytope equations."""
    pairs = model.pair_index().nonabsorbing_pairs
    if support is not None:
        keep = set(support)
        pairs = tuple(p for p in pairs if p in keep)
    matrix = []
    rhs = []
    for x in model.nonabsorbing:
        row = []
        for (y, b) in pairs:
            coeff = Fraction(1) if y == x else Fraction(0)
            q = model.row(y, b).get(x)
            if q:
                coeff -= Fraction(q)
            row.append(coeff)
        matrix.append(row)
        rhs.append(Fraction(model.initial_prob(x)))
    if alpha is not None:
        for i in range(model.reward_dim):
            matrix.append([Fraction(model.reward(x, a)[i]) for (x, a) in pairs])
            rhs.append(Fraction(alpha[i]))
    return matrix, rhs, pairs


def brute_force_vertices(model, support=None, alpha=None):
    """All vertices of {nu >= 0 : A nu = b} by basis enumeration.

    A point is a vertex iff it is feasible and the columns of its support
    are linearly independent; enumerating independent column subsets of
    size rank(A) and solving each covers all of them.
    """
    matrix, rhs, pairs = occupancy_system(model, support, alpha)
    ncols = len(pairs)
    if ncols == 0:
        return [dict()] if all(v == 0 for v in rhs) else []
    r = rank(matrix)
    nrows = len(matrix)
    found = set()
    for cols in combinations(range(ncols), min(r, ncols)):
        sub = [[matrix[i][j] for j in cols] + [rhs[i]] for i in range(nrows)]
        reduced, pivots = rref(sub)
        if any(p == len(cols) for p in pivots):
            continue  # inconsistent
        if len(pivots) < len(cols):
            continue  # dependent columns; another basis finds the same vertex
        sol = [Fraction(0)] * len(cols)
        for i, p in enumerate(pivots):
            sol[p] = reduced[i][len(cols)]
        if any(v < 0 for v in sol):
            continue
        full = [Fraction(0)] * ncols
        for j, c in enumerate(cols):
            full[c] = sol[j]
        found.add(tuple(full))
    return [
        {pairs[j]: v for j, v in enumerate(vert) if v != 0}
        for vert in sorted(found)
    ]


# --- exact Phase-I simplex ------------------------------------------------

def convex_representation(points, target):
    """Nonnegative weights w with sum w = 1 and sum w_j points_j = target,
    or None. The result is a basic feasible solution, so its support is
    affinely independent (at most affine-dim + 1 points)."""
    m = len(target) + 1
    n = len(points)
    rows = [[Fraction(points[j][i]) for j in range(n)] for i in range(len(target))]
    rows.append([Fraction(1)] * n)
    b = [Fraction(t) for t in target] + [Fraction(1)]
    for i in range(m):
        if b[i] < 0:
            rows[i] = [-v for v in rows[i]]
            b[i] = -b[i]
    # tableau with artificial variables; minimize their sum (Bland's rule)
    width = n + m
    tab = [rows[i] + [Fraction(1) if k == i else Fraction(0) for k in range(m)] + [b[i]]
           for i in range(m)]
    basis = [n + i for i in range(m)]
    cost = [Fraction(0)] * width
    for j in range(n, width):
        cost[j] = Fraction(1)
    # reduced costs under the artificial basis
    z = [Fraction(0)] * (width + 1)
    for i in range(m):
        for j in range(width + 1):
            z[j] += tab[i][j]
    for _ in range(100_000):
        entering = None
        for j in range(width):
            if j not in basis and z[j] - cost[j] > 0:
                entering = j
                break
        if entering is None:
            break
        leaving = None
        best = None
        for i in range(m):
            if tab[i][entering] > 0:
                ratio = tab[i][width] / tab[i][entering]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    best, leaving = ratio, i
        if leaving is None:
            return None  # unbounded; cannot happen with artificials
        pv = tab[leaving][entering]
        tab[leaving] = [v / pv for v in tab[leaving]]
        for i in range(m):
            if i != leaving and tab[i][entering] != 0:
                f = tab[i][entering]
                tab[i] = [a - f * c for a, c in zip(tab[i], tab[leaving])]
        f = z[entering] - cost[entering]
        z = [a - f * c for a, c in zip(z, tab[leaving])]
        basis[leaving] = entering
    objective = sum(tab[i][width] for i in range(m) if basis[i] >= n)
    if objective != 0:
        return None
    weights = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            weights[basis[i]] = tab[i][width]
    return weights
