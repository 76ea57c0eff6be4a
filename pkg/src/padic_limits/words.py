"""Freely reduced words over k generator symbols and shortlex word balls.

A word is a tuple of nonzero signed generator indices (negative means
inverse), freely reduced.  The shortlex order ranks letters as
g1 < g1^-1 < g2 < g2^-1 < ...; enumeration is pure integer ordering and
therefore stable across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError

Word = tuple[int, ...]

EMPTY: Word = ()


def reduce_word(letters) -> Word:
    out: list[int] = []
    for l in letters:
        if l == 0:
            raise ConfigError("letter 0 is not a generator index")
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


def mul_words(a: Word, b: Word) -> Word:
    return reduce_word(list(a) + list(b))


def invert_word(w: Word) -> Word:
    return tuple(-l for l in reversed(w))


def letter_rank(l: int) -> int:
    return 2 * (abs(l) - 1) + (0 if l > 0 else 1)


def _alphabet(k: int) -> list[int]:
    out = []
    for i in range(1, k + 1):
        out.extend((i, -i))
    return out


@dataclass(frozen=True)
class WordBall:
    """All reduced words of length <= radius, in shortlex order."""

    k: int
    radius: int
    words: tuple[Word, ...]

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __contains__(self, w: Word):
        return w in set(self.words)


def word_ball(k: int, radius: int, cap: int = 200_000) -> WordBall:
    """Shortlex enumeration of the reduced-word ball of the free group on
    k generators; size 1 + sum 2k(2k-1)^(l-1)."""
    if radius < 1:
        raise ConfigError("ball radius must be >= 1")
    if k < 1:
        raise ConfigError("need at least one generator")
    size = 1
    for l in range(1, radius + 1):
        size += 2 * k * (2 * k - 1) ** (l - 1)
    if size > cap:
        raise ConfigError(
            f"word ball size {size} exceeds cap {cap}; lower the radius")
    alphabet = _alphabet(k)
    words: list[Word] = [EMPTY]
    layer: list[Word] = [EMPTY]
    for _ in range(radius):
        nxt: list[Word] = []
        for w in layer:
            for l in alphabet:
                if w and w[-1] == -l:
                    continue
                nxt.append(w + (l,))
        words.extend(nxt)
        layer = nxt
    return WordBall(k, radius, tuple(words))


def format_word(w: Word) -> str:
    """Human-readable form, e.g. g1*g2^-1; empty word prints as '1'."""
    if not w:
        return "1"
    parts = []
    for l in w:
        parts.append(f"g{l}" if l > 0 else f"g{-l}^-1")
    return "*".join(parts)
