"""Scripted refiners and evaluators for the tuning loops."""

from __future__ import annotations

import re

from tafc.tuning import AlignmentWeights, ScriptedChatProvider, alignment_loss

DESC = re.compile(r"Current description:\n(.*?)\n\n", re.S)


def current_description(prompt: str) -> str:
    m = DESC.search(prompt)
    assert m, "refine prompt lacks the current description"
    return m.group(1)


def numbering_refiner() -> ScriptedChatProvider:
    """Returns ``D<n+1>`` for a prompt whose current description is ``D<n>``."""
    return ScriptedChatProvider(default=lambda p: f"D{int(current_description(p)[1:]) + 1}")


def unchanged_refiner() -> ScriptedChatProvider:
    return ScriptedChatProvider(default=current_description)


def loss_table(losses, weights: AlignmentWeights | None = None):
    """Evaluator giving description ``D<k>`` the total loss ``losses[k-1]``.

    Only the semantic component is set and lambda1 = 1 so l_align equals it exactly.
    """
    w = weights or AlignmentWeights(1.0, 0.0, 0.0)
    seen = []

    def evaluate(desc, batch):
        seen.append(desc)
        k = int(desc[1:])
        return alignment_loss(losses(k) if callable(losses) else losses[k - 1], 0.0, 0.0, w)

    evaluate.seen = seen
    return evaluate
