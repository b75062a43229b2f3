"""Reduced words in the free group F2 = <a, b>.

Letters are small integer codes: ``a = 1``, ``a^-1 = -1``, ``b = 2``,
``b^-1 = -2``.  The textual syntax uses ``a A b B`` with uppercase for
inverses, so ``"abAB"`` is the commutator and ``""`` is the identity.

Product convention: ``u * v`` means "traverse v first, then u".  Only the
homotopy reader cares about this; as an abstract group law it is just
concatenation followed by free reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

A, A_INV, B, B_INV = 1, -1, 2, -2
LETTERS = (A, A_INV, B, B_INV)

_TO_CHAR = {A: "a", A_INV: "A", B: "b", B_INV: "B"}
_FROM_CHAR = {c: k for k, c in _TO_CHAR.items()}
_GEN = {"a": 1, "b": 2}


class Letter(NamedTuple):
    generator: str
    sign: int

    @property
    def code(self) -> int:
        return self.sign * _GEN[self.generator]

    @classmethod
    def from_code(cls, code: int) -> "Letter":
        if code not in _TO_CHAR:
            raise ValueError(f"invalid letter code {code!r}")
        return cls("a" if abs(code) == 1 else "b", 1 if code > 0 else -1)


def _reduce_codes(codes: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for c in codes:
        if c not in _TO_CHAR:
            raise ValueError(f"invalid letter code {c!r}")
        if stack and stack[-1] == -c:
            stack.pop()
        else:
            stack.append(c)
    return tuple(stack)


@dataclass(frozen=True, order=True)
class Word:
    """A freely reduced word; construct through :func:`reduce` or :func:`parse_word`."""

    letters: tuple[int, ...] = ()

    def __post_init__(self):
        if any(self.letters[i] == -self.letters[i + 1] for i in range(len(self.letters) - 1)):
            raise ValueError(f"word {self.letters} is not freely reduced")
        if any(c not in _TO_CHAR for c in self.letters):
            raise ValueError(f"invalid letter codes in {self.letters}")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __str__(self) -> str:
        return "".join(_TO_CHAR[c] for c in self.letters) or "e"

    def __repr__(self) -> str:
        return f"Word({str(self)!r})"

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __pow__(self, n: int) -> "Word":
        if n < 0:
            return invert(self) ** (-n)
        out = IDENTITY
        for _ in range(n):
            out = multiply(out, self)
        return out

    def inverse(self) -> "Word":
        return invert(self)

    def text(self) -> str:
        """Word in ``aAbB`` syntax; the identity is the empty string."""
        return "".join(_TO_CHAR[c] for c in self.letters)


IDENTITY = Word(())


def reduce(raw: Iterable[int | Letter]) -> Word:
    """Freely reduce a sequence of letters (codes or :class:`Letter`)."""
    return Word(_reduce_codes(x.code if isinstance(x, Letter) else int(x) for x in raw))


def parse_word(text: str) -> Word:
    text = text.strip()
    if text in ("e", "1"):
        return IDENTITY
    try:
        return reduce(_FROM_CHAR[ch] for ch in text if not ch.isspace())
    except KeyError as exc:
        raise ValueError(f"invalid character {exc.args[0]!r} in word {text!r}") from None


def multiply(u: Word, v: Word) -> Word:
    lu, lv = u.letters, v.letters
    k = 0
    n = min(len(lu), len(lv))
    while k < n and lu[len(lu) - 1 - k] == -lv[k]:
        k += 1
    return Word(lu[: len(lu) - k] + lv[k:])


def invert(w: Word) -> Word:
    return Word(tuple(-c for c in reversed(w.letters)))


def conjugate(u: Word, w: Word) -> Word:
    """Return u w u^-1."""
    return multiply(multiply(u, w), invert(u))


def retract(w: Word, onto: str) -> Word:
    """Retraction h_a (onto="a") or h_b (onto="b"): kill the other generator."""
    if onto not in _GEN:
        raise ValueError(f"unknown generator {onto!r}")
    keep = _GEN[onto]
    return reduce(c for c in w.letters if abs(c) == keep)


def cyclically_reduce(w: Word) -> tuple[Word, Word]:
    """Split w = conjugator * core * conjugator^-1 with core cyclically reduced."""
    letters = w.letters
    i, j = 0, len(letters) - 1
    while i < j and letters[i] == -letters[j]:
        i += 1
        j -= 1
    return Word(letters[i : j + 1]), Word(letters[:i])


def exponent_sum(w: Word, generator: str) -> int:
    g = _GEN[generator]
    return sum((1 if c > 0 else -1) for c in w.letters if abs(c) == g)


def is_proper_power(w: Word) -> bool:
    core, _ = cyclically_reduce(w)
    n = len(core)
    for d in range(1, n):
        if n % d == 0 and core.letters == core.letters[:d] * (n // d):
            return True
    return False


def random_word(rng, max_len: int, min_len: int = 0) -> Word:
    """Uniformly random reduced word with length drawn from [min_len, max_len]."""
    n = int(rng.integers(min_len, max_len + 1))
    out: list[int] = []
    while len(out) < n:
        c = LETTERS[int(rng.integers(4))]
        if out and out[-1] == -c:
            continue
        out.append(c)
    return Word(tuple(out))
