"""Finite two-player zero-sum normal-form games.

The row player (protagonist) maximizes ``u``; the column player (adversary)
receives ``-u`` and therefore minimizes it. Everything here treats games as
immutable values.
"""
from dataclasses import dataclass, field

import numba
import numpy as np

from ._validation import check_distribution, check_payoff_matrix


@dataclass(frozen=True)
class MatrixGame:
    """Protagonist utilities for every (row, column) pure-strategy pair."""

    u: np.ndarray
    row_labels: tuple = None
    col_labels: tuple = None

    def __post_init__(self):
        u = check_payoff_matrix(self.u).copy()
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        for name, n in (("row_labels", u.shape[0]), ("col_labels", u.shape[1])):
            labels = getattr(self, name)
            if labels is not None:
                labels = tuple(str(x) for x in labels)
                if len(labels) != n:
                    raise ValueError(f"{name} has {len(labels)} entries, expected {n}")
                object.__setattr__(self, name, labels)

    @property
    def rows(self):
        return self.u.shape[0]

    @property
    def cols(self):
        return self.u.shape[1]

    @property
    def adversary_u(self):
        return -self.u

    def row_label(self, i):
        return self.row_labels[i] if self.row_labels else f"row{i}"

    def col_label(self, j):
        return self.col_labels[j] if self.col_labels else f"col{j}"

    def submatrix(self, rows=None, cols=None):
        rows = np.arange(self.rows) if rows is None else np.asarray(rows, dtype=int)
        cols = np.arange(self.cols) if cols is None else np.asarray(cols, dtype=int)
        return MatrixGame(
            self.u[np.ix_(rows, cols)],
            tuple(self.row_labels[i] for i in rows) if self.row_labels else None,
            tuple(self.col_labels[j] for j in cols) if self.col_labels else None,
        )

    def __eq__(self, other):
        if not isinstance(other, MatrixGame):
            return NotImplemented
        return (
            self.u.shape == other.u.shape
            and np.array_equal(self.u, other.u)
            and self.row_labels == other.row_labels
            and self.col_labels == other.col_labels
        )

    __hash__ = None


@dataclass(frozen=True)
class MixedPair:
    row_dist: np.ndarray
    col_dist: np.ndarray
    game_value: float = field(default=None)

    def __post_init__(self):
        row = check_distribution(self.row_dist, name="row_dist")
        col = check_distribution(self.col_dist, name="col_dist")
        row.setflags(write=False)
        col.setflags(write=False)
        object.__setattr__(self, "row_dist", row)
        object.__setattr__(self, "col_dist", col)

    @classmethod
    def for_game(cls, game, row_dist, col_dist):
        row = np.asarray(row_dist, dtype=float)
        col = np.asarray(col_dist, dtype=float)
        _check_dims(game, row, col)
        return cls(row, col, float(row @ game.u @ col))


def _check_dims(game, row, col):
    if row.shape != (game.rows,) or col.shape != (game.cols,):
        raise ValueError(
            f"strategy shapes {row.shape}/{col.shape} do not match a "
            f"{game.rows}x{game.cols} game"
        )


@numba.njit(cache=True)
def _fp_counts(u, iterations):
    rows, cols = u.shape
    row_counts = np.zeros(rows, dtype=np.int64)
    col_counts = np.zeros(cols, dtype=np.int64)
    row_score = np.zeros(rows)
    col_score = np.zeros(cols)
    # Opening row move: best response to a uniform adversary.
    i = np.argmax(u.sum(axis=1))
    for _ in range(iterations):
        row_counts[i] += 1
        col_score += u[i, :]
        # np.argmin / np.argmax return the first extremum: lowest index wins ties.
        j = np.argmin(col_score)
        col_counts[j] += 1
        row_score += u[:, j]
        i = np.argmax(row_score)
    return row_counts, col_counts


def fictitious_play(game, iterations=2000):
    """Alternating fictitious play; returns empirical play frequencies.

    Each round the row player commits first and the column player best
    responds to the row counts including that move. The opening row move is
    a best response to the uniform column mixture, so no strictly dominated
    strategy ever receives mass. Ties go to the lowest index.
    """
    if int(iterations) != iterations or iterations < 1:
        raise ValueError(f"iterations must be a positive integer, got {iterations!r}")
    u = np.ascontiguousarray(game.u, dtype=np.float64)
    row_counts, col_counts = _fp_counts(u, int(iterations))
    return MixedPair.for_game(game, row_counts / iterations, col_counts / iterations)


def exploitability(game, pair):
    """Sum of both players' best unilateral improvements; zero iff exact NE."""
    row = np.asarray(pair.row_dist, dtype=float)
    col = np.asarray(pair.col_dist, dtype=float)
    _check_dims(game, row, col)
    row_br = np.max(game.u @ col)
    col_br = np.min(row @ game.u)
    return max(0.0, float(row_br - col_br))


def infeasible_columns(br_values, lam):
    br_values = np.asarray(br_values, dtype=float)
    return br_values < lam


def farr_transform(game, br_values, lam, penalty_c):
    """Replace every column whose best-response value is below ``lam`` by ``penalty_c``.

    ``penalty_c`` must exceed every utility in the feasible columns, which
    makes each penalized column strictly dominated for the adversary.
    """
    br_values = np.asarray(br_values, dtype=float)
    if br_values.shape != (game.cols,):
        raise ValueError(f"br_values must have length {game.cols}, got shape {br_values.shape}")
    bad = infeasible_columns(br_values, lam)
    top = game.u[:, ~bad].max() if (~bad).any() else -np.inf
    if not penalty_c > top:
        raise ValueError(f"penalty_c={penalty_c} must exceed the largest feasible-column utility {top}")
    u = np.array(game.u)
    u[:, bad] = penalty_c
    return MatrixGame(u, game.row_labels, game.col_labels)


def _dominated_row(u):
    for b in range(u.shape[0]):
        for a in range(u.shape[0]):
            if a != b and np.all(u[a] > u[b]):
                return b
    return None


def _dominated_col(u):
    # The adversary prefers smaller protagonist utility.
    for k in range(u.shape[1]):
        for j in range(u.shape[1]):
            if j != k and np.all(u[:, j] < u[:, k]):
                return k
    return None


def iesds_reduce(game):
    """Iterated elimination of strictly dominated pure strategies.

    Each round removes the lowest-index dominated row if there is one,
    otherwise the lowest-index dominated column. Comparisons are exact, so
    ties block elimination.

    Returns
    -------
    reduced : MatrixGame
    removed_rows, removed_cols : list of int
        Original indices, in elimination order.
    """
    rows = list(range(game.rows))
    cols = list(range(game.cols))
    removed_rows, removed_cols = [], []
    while True:
        u = game.u[np.ix_(rows, cols)]
        b = _dominated_row(u) if len(rows) > 1 else None
        if b is not None:
            removed_rows.append(rows.pop(b))
            continue
        k = _dominated_col(u) if len(cols) > 1 else None
        if k is not None:
            removed_cols.append(cols.pop(k))
            continue
        break
    return game.submatrix(rows, cols), removed_rows, removed_cols


def verify_theorem1(game, br_values, lam, penalty_c, tol=0.05, iterations=100_000):
    """Check that an approximate NE of the penalized game solves the feasible-only game.

    Solves the transformed game with fictitious play, then requires (a) at
    most ``tol`` adversary mass on infeasible columns and (b) exploitability
    at most ``tol`` of the renormalized pair in the game restricted to
    feasible columns.
    """
    feasible = ~infeasible_columns(br_values, lam)
    if not feasible.any():
        raise ValueError("theorem requires a nonempty feasible set; every column is below lambda")
    transformed = farr_transform(game, br_values, lam, penalty_c)
    pair = fictitious_play(transformed, iterations)
    infeasible_mass = float(pair.col_dist[~feasible].sum())
    feasible_mass = pair.col_dist[feasible]
    if feasible_mass.sum() <= 0:
        return False
    reduced = game.submatrix(cols=np.flatnonzero(feasible))
    restricted = MixedPair.for_game(reduced, pair.row_dist, feasible_mass / feasible_mass.sum())
    return infeasible_mass <= tol and exploitability(reduced, restricted) <= tol


def parse_matrix_text(text):
    """Parse ``rows cols`` + matrix lines + optional ``row i name``/``col j name`` lines."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty matrix text")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"header must be 'rows cols', got {lines[0]!r}")
    rows, cols = (int(x) for x in header)
    if rows < 1 or cols < 1:
        raise ValueError("matrix must have at least one row and one column")
    if len(lines) < 1 + rows:
        raise ValueError(f"expected {rows} matrix lines, got {len(lines) - 1}")
    u = []
    for ln in lines[1 : 1 + rows]:
        vals = [float(x) for x in ln.split()]
        if len(vals) != cols:
            raise ValueError(f"row {ln!r} has {len(vals)} entries, expected {cols}")
        u.append(vals)
    row_labels = [f"row{i}" for i in range(rows)]
    col_labels = [f"col{j}" for j in range(cols)]
    labelled = False
    for ln in lines[1 + rows :]:
        kind, idx, *name = ln.split(maxsplit=2)
        target = {"row": row_labels, "col": col_labels}.get(kind)
        if target is None or not name:
            raise ValueError(f"bad label line {ln!r}")
        target[int(idx)] = name[0]
        labelled = True
    if labelled:
        return MatrixGame(np.array(u), tuple(row_labels), tuple(col_labels))
    return MatrixGame(np.array(u))


def format_matrix_text(game):
    out = [f"{game.rows} {game.cols}"]
    out += [" ".join(repr(float(x)) for x in row) for row in game.u]
    if game.row_labels:
        out += [f"row {i} {name}" for i, name in enumerate(game.row_labels)]
    if game.col_labels:
        out += [f"col {j} {name}" for j, name in enumerate(game.col_labels)]
    return "\n".join(out) + "\n"
