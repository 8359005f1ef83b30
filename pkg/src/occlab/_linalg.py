"""Dense linear algebra over exact rationals and over floats.

The exact routines run fraction-preserving Gaussian elimination on
``fractions.Fraction`` entries and are used whenever a model is in exact
mode or a result must be certified (ranks, null spaces, vertex
enumeration). The float routines delegate to numpy: LU solve, and
SVD-based rank / null space with a relative singular-value cutoff.

Null-space bases use the reduced-row-echelon free-variable convention in
exact mode (one basis vector per free column, with a 1 in that column),
which makes the basis canonical and reproducible.
"""

from fractions import Fraction

import numpy as np

from .errors import NumericError


def solve_exact(matrix, rhs):
    """Solve the square system A x = b over Fractions.

    Raises NumericError when the matrix is singular.
    """
    n = len(matrix)
    if n == 0:
        return []
    aug = [[Fraction(v) for v in row] + [Fraction(rhs[i])] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise NumericError("singular system in exact solve")
        if pivot != col:
            aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        for r in range(n):
            if r == col:
                continue
            factor = aug[r][col]
            if factor == 0:
                continue
            scale = factor / pv
            for c in range(col, n + 1):
                aug[r][c] -= aug[col][c] * scale
    return [aug[i][n] / aug[i][i] for i in range(n)]


def rref_exact(matrix):
    """Reduced row echelon form over Fractions.

    Returns (rows, pivot_cols) where rows are the reduced rows (zero rows
    dropped) and pivot_cols the pivot column of each row.
    """
    rows = [[Fraction(v) for v in row] for row in matrix]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][col]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i == r or rows[i][col] == 0:
                continue
            factor = rows[i][col]
            rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rank_exact(matrix):
    return len(rref_exact(matrix)[1])


def nullspace_exact(matrix, ncols=None):
    """Basis of {x : A x = 0} over Fractions, free-variable convention."""
    if not matrix:
        n = ncols or 0
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    n = len(matrix[0])
    rows, pivots = rref_exact(matrix)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * n
        vec[f] = Fraction(1)
        for i, p in enumerate(pivots):
            vec[p] = -rows[i][f]
        basis.append(vec)
    return basis


def solve_float(matrix, rhs):
    n = len(matrix)
    if n == 0:
        return []
    try:
        sol = np.linalg.solve(np.asarray(matrix, dtype=float), np.asarray(rhs, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise NumericError("singular system in float solve") from exc
    return [float(v) for v in sol]


def _svd(matrix):
    arr = np.asarray(matrix, dtype=float)
    return np.linalg.svd(arr, full_matrices=True)


def rank_float(matrix, cutoff):
    arr = np.asarray(matrix, dtype=float)
    if arr.size == 0:
        return 0
    sv = np.linalg.svd(arr, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > cutoff * sv[0]))


def nullspace_float(matrix, cutoff, ncols=None):
    arr = np.asarray(matrix, dtype=float)
    if arr.size == 0:
        n = ncols if ncols is not None else (arr.shape[1] if arr.ndim == 2 else 0)
        return [list(row) for row in np.eye(n)]
    _, sv, vt = _svd(arr)
    top = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > cutoff * top)) if top > 0.0 else 0
    return [list(map(float, vt[i])) for i in range(rank, arr.shape[1])]


def solve(matrix, rhs, exact):
    return solve_exact(matrix, rhs) if exact else solve_float(matrix, rhs)


def matrix_rank(matrix, exact, cutoff):
    if not matrix or not matrix[0]:
        return 0
    return rank_exact(matrix) if exact else rank_float(matrix, cutoff)


def nullspace(matrix, exact, cutoff, ncols=None):
    if exact:
        return nullspace_exact(matrix, ncols=ncols)
    return nullspace_float(matrix, cutoff, ncols=ncols)
