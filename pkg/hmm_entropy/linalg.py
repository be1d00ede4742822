"""Exact rational linear algebra and support-graph helpers."""
from fractions import Fraction
from typing import List, Sequence

from .errors import ModelValidationError


def rank(matrix: Sequence[Sequence[Fraction]]) -> int:
    """
    Rank of a rational matrix by exact Gaussian elimination.

    Args:
        matrix (Sequence[Sequence[Fraction]]): Rows of the matrix.

    Returns:
        int: The rank; 0 for an all-zero or empty matrix.
    """
    rows = [[Fraction(x) for x in row] for row in matrix]
    if not rows:
        return 0
    n_cols = len(rows[0])
    r = 0
    for col in range(n_cols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(r + 1, len(rows)):
            factor = rows[i][col] / rows[r][col]
            if factor:
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        r += 1
        if r == len(rows):
            break
    return r


def _reachable(adjacency: Sequence[Sequence[bool]], start: int, reverse: bool) -> set:
    n = len(adjacency)
    seen = {start}
    stack = [start]
    while stack:
        i = stack.pop()
        for j in range(n):
            edge = adjacency[j][i] if reverse else adjacency[i][j]
            if edge and j not in seen:
                seen.add(j)
                stack.append(j)
    return seen


def is_strongly_connected(adjacency: Sequence[Sequence[bool]]) -> bool:
    """True when every node reaches every other node (irreducibility)."""
    n = len(adjacency)
    if n == 0:
        return False
    everything = set(range(n))
    return (_reachable(adjacency, 0, reverse=False) == everything
            and _reachable(adjacency, 0, reverse=True) == everything)


def solve(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> List[Fraction]:
    """
    Solve a x = b exactly for a square nonsingular rational matrix.

    Raises:
        ModelValidationError: If the matrix is singular.
    """
    n = len(a)
    aug = [[Fraction(x) for x in row] + [Fraction(rhs)] for row, rhs in zip(a, b)]
    for col in range(n):
        pivot = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if pivot is None:
            raise ModelValidationError("singular system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col]:
                factor = aug[i][col]
                aug[i] = [x - factor * y for x, y in zip(aug[i], aug[col])]
    return [aug[i][n] for i in range(n)]


def stationary_vector(matrix: Sequence[Sequence[Fraction]]) -> List[Fraction]:
    """
    Exact stationary row vector of an irreducible stochastic matrix.

    Replaces the last equation of pi (P - I) = 0 by sum(pi) = 1.
    """
    n = len(matrix)
    # Transposed system: (P^T - I) pi^T = 0
    a = [[Fraction(matrix[j][i]) - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    a[-1] = [Fraction(1)] * n
    b = [Fraction(0)] * (n - 1) + [Fraction(1)]
    return solve(a, b)


def inverse(a: Sequence[Sequence[Fraction]]) -> List[List[Fraction]]:
    """
    Inverse of a square rational matrix by Gauss-Jordan elimination.

    Raises:
        ModelValidationError: If the matrix is singular.
    """
    n = len(a)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if pivot is None:
            raise ModelValidationError("singular system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col]:
                factor = aug[i][col]
                aug[i] = [x - factor * y for x, y in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]
