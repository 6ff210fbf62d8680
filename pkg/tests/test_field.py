import itertools
import random

import pytest
from hypothesis import given, strategies as st

from dske.estimators import schoolbook_table
from dske.field import (
    GF16, GF256, GF2_64, FieldElement, FieldError, FieldSpec, add, clmul, g_encode, inv,
    is_irreducible, mul, poly_mod, pow_, spec_by_name,
)

ELEMS16 = range(16)


def el(v, spec=GF16):
    return FieldElement(v, spec)


@pytest.mark.parametrize("a,b,want", [(0x6, 0x6, 0x0), (0xA, 0x0, 0xA), (0x6, 0x3, 0x5)])
def test_add_examples(a, b, want):
    assert add(el(a), el(b)).value == want


@pytest.mark.parametrize("a,b,want", [(0x1, 0x9, 0x9), (0x6, 0x7, 0x1), (0x2, 0xE, 0xF)])
def test_mul_examples(a, b, want):
    assert mul(el(a), el(b)).value == want


@pytest.mark.parametrize("a,want", [(0x1, 0x1), (0x6, 0x7), (0x3, 0xE)])
def test_inv_examples(a, want):
    assert inv(el(a)).value == want


@pytest.mark.parametrize("e,want", [(1, 0x2), (2, 0x4), (4, 0x3)])
def test_pow_examples(e, want):
    assert pow_(el(0x2), e).value == want


def test_zero_to_the_zero_is_one():
    assert GF16.pow(0, 0) == 1
    assert GF2_64.pow(0, 0) == 1


def test_g_encode_domain():
    assert g_encode(GF16, 0).value == 0
    assert g_encode(GF16, 15).value == 0xF
    with pytest.raises(FieldError):
        g_encode(GF16, 16)


def test_inv_zero_rejected():
    with pytest.raises((FieldError, ZeroDivisionError)):
        GF16.inv(0)


def test_cross_field_rejected():
    with pytest.raises(FieldError):
        add(el(1), el(1, GF256))
    with pytest.raises(FieldError):
        mul(el(1), el(1, GF256))


def test_out_of_range_element_rejected():
    with pytest.raises(FieldError):
        FieldElement(16, GF16)
    with pytest.raises(FieldError):
        FieldElement(-1, GF16)


def test_reducible_polynomial_rejected():
    # x^4 + 1 = (x + 1)^4
    with pytest.raises(FieldError):
        FieldSpec(4, 0x1, "bad")


def test_irreducibility_helper():
    assert is_irreducible(0x13)
    assert is_irreducible(0x11B)
    assert not is_irreducible(0x11)


def test_spec_lookup():
    assert spec_by_name("gf256") is GF256
    with pytest.raises(ValueError):
        spec_by_name("gf17")


@pytest.mark.parametrize("spec", [GF16, GF256], ids=lambda s: s.name)
def test_table_matches_schoolbook(spec):
    oracle = schoolbook_table(spec)
    for a in range(spec.order):
        for b in range(spec.order):
            assert spec.mul(a, b) == oracle[a, b]


def test_gf16_axioms_exhaustive():
    m = GF16.mul
    for a, b, c in itertools.product(ELEMS16, repeat=3):
        assert (a ^ b) ^ c == a ^ (b ^ c)
        assert m(m(a, b), c) == m(a, m(b, c))
        assert m(a, b ^ c) == m(a, b) ^ m(a, c)
    for a, b in itertools.product(ELEMS16, repeat=2):
        assert m(a, b) == m(b, a)
    for a in ELEMS16:
        assert m(a, 1) == a


@pytest.mark.parametrize("spec", [GF16, GF256], ids=lambda s: s.name)
def test_inverse_exhaustive(spec):
    for a in range(1, spec.order):
        assert spec.mul(a, spec.inv(a)) == 1


def test_mul_by_nonzero_is_permutation_gf16():
    for a in range(1, 16):
        assert sorted(GF16.mul(a, b) for b in ELEMS16) == list(ELEMS16)


def _slow_mul(spec, a, b):
    return poly_mod(clmul(a, b), (1 << spec.r) | spec.reduction_poly)


@pytest.mark.parametrize("spec", [GF256, GF2_64], ids=lambda s: s.name)
def test_randomized_axioms(spec):
    rng = random.Random(11)
    m = spec.mul
    for _ in range(100_000):
        a, b, c = (rng.getrandbits(spec.r) for _ in range(3))
        assert m(m(a, b), c) == m(a, m(b, c))
        assert m(a, b) == m(b, a)
        assert m(a, b ^ c) == m(a, b) ^ m(a, c)
        assert m(a, b) == _slow_mul(spec, a, b)


u64 = st.integers(0, 2**64 - 1)


@given(a=u64, b=u64)
def test_multiplier_closure_matches_mul(a, b):
    assert GF2_64.multiplier(a)(b) == GF2_64.mul(a, b) == _slow_mul(GF2_64, a, b)


@given(a=st.integers(1, 2**64 - 1))
def test_gf2_64_inverse(a):
    assert GF2_64.mul(a, GF2_64.inv(a)) == 1


@given(a=st.integers(0, 255), e1=st.integers(0, 40), e2=st.integers(0, 40))
def test_pow_adds_exponents(a, e1, e2):
    assert GF256.mul(GF256.pow(a, e1), GF256.pow(a, e2)) == GF256.pow(a, e1 + e2)


def test_byte_round_trip():
    for spec in (GF16, GF256, GF2_64):
        v = spec.order - 1
        assert spec.from_bytes(spec.to_bytes(v)) == v
