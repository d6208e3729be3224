"""Whitespace tokenization and mask-token bookkeeping.

The whole pipeline shares one tokenization convention: split on
whitespace, treat "[MASK]" as a reserved literal token. Punctuation can
stay glued to a token ("years.", "[MASK],"), so helpers here strip a
small set of clinging punctuation marks when identifying tokens.
"""

from __future__ import annotations

MASK_TOKEN = "[MASK]"

# Punctuation that commonly clings to a whitespace token. Square brackets
# are deliberately absent so "[MASK]" survives stripping.
_CLINGING = ",.;:!?\"'()"


def tokenize(text: str) -> list[str]:
    return text.split()


def strip_clinging(token: str) -> str:
    return token.strip(_CLINGING)


def is_mask_token(token: str) -> bool:
    return strip_clinging(token) == MASK_TOKEN


def find_mask_positions(text: str) -> list[int]:
    """Indices of mask tokens under whitespace tokenization."""
    return [i for i, tok in enumerate(tokenize(text)) if is_mask_token(tok)]


def mask_string(n: int) -> str:
    """n mask tokens joined by single spaces."""
    return " ".join([MASK_TOKEN] * n)
