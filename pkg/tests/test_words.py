import numpy as np
import pytest
from hypothesis import given, strategies as st

from bcoh.words import (
    IDENTITY,
    Letter,
    Word,
    conjugate,
    cyclically_reduce,
    exponent_sum,
    invert,
    is_proper_power,
    multiply,
    parse_word,
    random_word,
    reduce,
    retract,
)

from conftest import CODES, words

W = parse_word


def test_reduce_examples():
    assert reduce([1, -1, 2]) == W("b")
    assert reduce([]) == IDENTITY
    assert reduce([Letter("a", 1), Letter("a", -1)]) == IDENTITY


def test_letter_codes():
    assert {Letter.from_code(c).code for c in (1, -1, 2, -2)} == {1, -1, 2, -2}
    with pytest.raises(ValueError):
        Letter.from_code(3)


def test_word_rejects_unreduced():
    with pytest.raises(ValueError):
        Word((1, -1))


def test_parse_and_text():
    assert W("abAB").letters == (1, 2, -1, -2)
    assert W("") == W("e") == IDENTITY
    assert str(IDENTITY) == "e" and IDENTITY.text() == ""
    assert W("aA") == IDENTITY
    with pytest.raises(ValueError):
        W("abc")


def test_multiply_examples():
    assert multiply(W("ab"), W("Ba")) == W("aa")
    w = W("abAbb")
    assert multiply(w, IDENTITY) == w
    assert multiply(w, invert(w)) == IDENTITY


def test_invert_examples():
    assert invert(W("ab")) == W("BA")
    assert invert(IDENTITY) == IDENTITY


def test_retract_examples():
    assert retract(W("abaB"), "a") == W("aa")
    assert retract(W("b"), "a") == IDENTITY
    assert retract(W("aBab"), "b") == IDENTITY


def test_cyclically_reduce_examples():
    assert cyclically_reduce(W("abA")) == (W("b"), W("a"))
    assert cyclically_reduce(W("ab")) == (W("ab"), IDENTITY)
    assert cyclically_reduce(IDENTITY) == (IDENTITY, IDENTITY)


def test_misc_helpers():
    assert conjugate(W("a"), W("b")) == W("abA")
    assert exponent_sum(W("aabA"), "a") == 1
    assert is_proper_power(W("abab")) and not is_proper_power(W("aba"))
    assert W("ab") ** 2 == W("abab") and W("ab") ** -1 == W("BA")


@given(st.lists(CODES, max_size=30))
def test_reduce_idempotent_and_parity(raw):
    w = reduce(raw)
    assert reduce(w.letters) == w
    assert len(w) <= len(raw) and (len(raw) - len(w)) % 2 == 0


@given(words(12), words(12), words(12))
def test_associativity(u, v, w):
    assert multiply(multiply(u, v), w) == multiply(u, multiply(v, w))


@given(words(12))
def test_inverse_laws(w):
    assert invert(invert(w)) == w
    assert multiply(w, invert(w)) == IDENTITY
    assert reduce(w.letters + invert(w).letters) == IDENTITY


@given(words(10), words(10), st.sampled_from(["a", "b"]))
def test_retract_is_homomorphism(u, v, gen):
    assert retract(multiply(u, v), gen) == multiply(retract(u, gen), retract(v, gen))


@given(words(12))
def test_cyclic_reduction_identity(w):
    core, u = cyclically_reduce(w)
    assert conjugate(u, core) == w
    if len(core) > 1:
        assert core.letters[0] != -core.letters[-1]


def test_random_word_lengths():
    rng = np.random.default_rng(1)
    lens = [len(random_word(rng, 6, 2)) for _ in range(200)]
    assert min(lens) >= 2 and max(lens) <= 6
