"""The item-retrieval cabinet game as a 2x3 matrix game.

Rows are the protagonist's choices (grab, don't grab); columns are where the
adversary hides the bowl. The middle cabinet is harder than the left one, a
failed grab is penalized and the locked right cabinet cannot be opened.
"""
from ..normform import MatrixGame

LAMBDA = 1.0
PENALTY_C = 500.0

ROW_LABELS = ("grab", "dont-grab")
COL_LABELS = ("left", "middle", "locked-right")


def canonical_cabinet_game():
    return MatrixGame([[2.0, 1.0, -10.0], [0.0, 0.0, 0.0]], ROW_LABELS, COL_LABELS)


def cabinet_br_values(game=None):
    """Best-response value per cabinet: the best row against each pure column."""
    game = canonical_cabinet_game() if game is None else game
    return game.u.max(axis=0)
