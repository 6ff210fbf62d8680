import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from dske.field import GF16, GF256
from dske.sharing import (
    SharingError, ShareTuple, ThresholdParams, apply_tamper, consistent, extend_shares,
    lagrange_at, reconstruct, share_delta_for,
)


def params(n=3, k=2, m=1, spec=GF16):
    return ThresholdParams(n, k, m, spec)


def _brute_lagrange(spec, subset, i, target):
    # the unique polynomial through (i, 1) and (j, 0) elsewhere, found by search over coefficients
    k = len(subset)
    for coeffs in itertools.product(range(spec.order), repeat=k):
        def f(x):
            return _eval(spec, coeffs, x)
        if all(f(j) == (1 if j == i else 0) for j in subset):
            return f(target)
    raise AssertionError("no interpolant")


def _eval(spec, coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = spec.mul(acc, x) ^ c
    return acc


def test_lagrange_examples():
    p = params()
    assert lagrange_at(p, {1, 2}, 2) == {1: 0x0, 2: 0x1}
    assert lagrange_at(p, {1, 2}, 0) == {1: 0xF, 2: 0xE}
    assert lagrange_at(params(k=1), {3}, 0) == {3: 0x1}
    assert lagrange_at(params(k=1), {3}, 7) == {3: 0x1}


def test_lagrange_matches_brute_force():
    p = params(n=4, k=3)
    for subset in itertools.combinations(range(1, 5), 3):
        got = lagrange_at(p, subset, 0)
        for i in subset:
            assert got[i] == _brute_lagrange(GF16, subset, i, 0)


def test_bad_subsets_rejected():
    p = params()
    with pytest.raises(SharingError):
        lagrange_at(p, [1], 0)
    with pytest.raises(SharingError):
        lagrange_at(p, [1, 4], 0)
    with pytest.raises(SharingError):
        lagrange_at(p, [1, 1], 0)


def test_params_validation():
    with pytest.raises(SharingError):
        ThresholdParams(16, 2, 1, GF16)
    with pytest.raises(SharingError):
        ThresholdParams(3, 4, 1, GF16)
    with pytest.raises(SharingError):
        ThresholdParams(3, 2, 0, GF16)


def test_extend_line_through_identity():
    shares, secret = extend_shares(params(), [ShareTuple(1, (1, 1, 1, 1)), ShareTuple(2, (2, 2, 2, 2))])
    assert shares[2].elements == (3, 3, 3, 3)
    assert secret.elements == (0, 0, 0, 0)


def test_extend_constant():
    row = (0xA, 0xB, 0xC, 0xD)
    shares, secret = extend_shares(params(n=2, k=1), [ShareTuple(1, row)])
    assert shares[1].elements == row and secret.elements == row
    shares, secret = extend_shares(params(), [ShareTuple(1, (5,) * 4), ShareTuple(2, (5,) * 4)])
    assert shares[2].elements == (5,) * 4 and secret.elements == (5,) * 4


def test_first_k_shares_pass_through():
    first = [ShareTuple(1, (1, 2, 3, 4)), ShareTuple(2, (5, 6, 7, 8))]
    shares, _ = extend_shares(params(), first)
    assert shares[:2] == first


def test_reconstruct_examples():
    p = params()
    one = reconstruct(p, [ShareTuple(1, (1,) * 4), ShareTuple(2, (2,) * 4)])
    assert one.elements == (0,) * 4
    two = reconstruct(p, [ShareTuple(1, (3,) * 4), ShareTuple(2, (3,) * 4)])
    assert two.elements == (3,) * 4


def test_round_trip_every_subset_gf16():
    rng = random.Random(3)
    for n, k in [(3, 2), (4, 2), (5, 3), (6, 6)]:
        p = params(n, k, 2)
        for _ in range(20):
            first = [ShareTuple(i, tuple(rng.randrange(16) for _ in range(p.width))) for i in range(1, k + 1)]
            shares, secret = extend_shares(p, first)
            for subset in itertools.combinations(shares, k):
                assert reconstruct(p, subset) == secret
            assert consistent(p, shares)


@settings(max_examples=50)
@given(data=st.data())
def test_distinct_subsets_agree(data):
    n = data.draw(st.integers(2, 8))
    k = data.draw(st.integers(1, n))
    p = params(n, k, 1, GF256)
    first = [ShareTuple(i, tuple(data.draw(st.integers(0, 255)) for _ in range(p.width)))
             for i in range(1, k + 1)]
    shares, secret = extend_shares(p, first)
    a, b = data.draw(st.lists(st.sampled_from(list(p.subsets())), min_size=2, max_size=2))
    assert reconstruct(p, [shares[i - 1] for i in a]) == reconstruct(p, [shares[i - 1] for i in b]) == secret


def test_inconsistent_shares_detected():
    p = params()
    shares, _ = extend_shares(p, [ShareTuple(1, (1, 2, 3, 4)), ShareTuple(2, (5, 6, 7, 8))])
    bent = shares[:2] + [ShareTuple(3, (shares[2].elements[0] ^ 1,) + shares[2].elements[1:])]
    assert not consistent(p, bent)


def test_apply_tamper_examples():
    p = params()
    assert apply_tamper(p, [1, 2], {}) == (0, 0, 0, 0)
    assert apply_tamper(p, [1, 2], {1: (0,) * 4}) == (0, 0, 0, 0)
    for a in range(16):
        assert apply_tamper(p, [1, 2], {1: (a, 0, 0, 0)})[0] == GF16.mul(a, 0xF)


@given(target_shift=st.lists(st.integers(0, 255), min_size=4, max_size=4), hub=st.sampled_from([1, 3, 4]))
def test_single_error_value_hits_target(target_shift, hub):
    p = params(5, 3, 1, GF256)
    subset = (1, 3, 4)
    delta = share_delta_for(p, subset, hub, target_shift)
    assert list(apply_tamper(p, subset, {hub: delta})) == target_shift


@settings(max_examples=200)
@given(data=st.data())
def test_linearity(data):
    n = data.draw(st.integers(2, 12))
    k = data.draw(st.integers(1, n))
    p = params(n, k, data.draw(st.integers(1, 3)), GF256)
    subset = data.draw(st.permutations(range(1, n + 1)))[:k]
    byte_rows = st.tuples(*[st.integers(0, 255)] * p.width)
    points = [ShareTuple(i, data.draw(byte_rows)) for i in subset]
    tamper = {i: data.draw(byte_rows) for i in data.draw(st.sets(st.sampled_from(subset), min_size=1))}
    tampered = [ShareTuple(q.index, tuple(a ^ b for a, b in zip(q.elements, tamper.get(q.index, (0,) * p.width))))
                for q in points]
    shift = apply_tamper(p, subset, tamper)
    want = tuple(a ^ b for a, b in zip(reconstruct(p, points).elements, shift))
    assert reconstruct(p, tampered).elements == want
