"""Ordinal ternary labels (Low < Medium < High) and shared tie-breaking."""

from __future__ import annotations

import enum

from .errors import DataError


class Label(enum.IntEnum):
    """Ternary ordinal class for arousal or valence. L < M < H."""

    L = 0
    M = 1
    H = 2

    @classmethod
    def from_token(cls, token: str) -> "Label":
        token = token.strip()
        try:
            return cls[token]
        except KeyError:
            raise DataError(f"unknown label token {token!r} (expected L, M or H)") from None

    def __str__(self) -> str:  # CSV-friendly
        return self.name


LABELS = (Label.L, Label.M, Label.H)
EXTREMES = (Label.L, Label.H)


def minority_set(class_counts: dict[Label, int]) -> set[Label]:
    """Labels whose count lies strictly below the maximum count.

    Empty when all classes are tied on the maximum (e.g. perfectly balanced
    data), so downstream rules degrade gracefully.
    """
    if not class_counts:
        return set()
    top = max(class_counts.get(lab, 0) for lab in LABELS)
    return {lab for lab in LABELS if class_counts.get(lab, 0) < top}


def break_tie(tied: set[Label], class_counts: dict[Label, int] | None = None) -> Label:
    """Resolve a tie among candidate labels.

    Prefers M; otherwise the tied extreme with the smaller training count;
    L is the fixed last resort when counts are missing or equal.
    """
    if len(tied) == 1:
        return next(iter(tied))
    if Label.M in tied:
        return Label.M
    # both extremes tied
    if class_counts:
        n_l = class_counts.get(Label.L, 0)
        n_h = class_counts.get(Label.H, 0)
        if n_h < n_l:
            return Label.H
        if n_l < n_h:
            return Label.L
    return Label.L
