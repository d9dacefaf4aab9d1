import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from cpsverify.pauli import (
    PauliAxis,
    PauliError,
    PauliString,
    commutes,
    embed_single,
    multiply,
    parse_observable,
)


def paulis(n=None, hermitian=False):
    widths = st.just(n) if n else st.integers(1, 5)

    def build(w):
        phase = st.sampled_from([0, 2]) if hermitian else st.integers(0, 3)
        return st.builds(
            PauliString, st.just(w), st.integers(0, (1 << w) - 1), st.integers(0, (1 << w) - 1), phase
        )

    return widths.flatmap(build)


def same_width_pair(k=2):
    return st.integers(1, 4).flatmap(lambda w: st.tuples(*[paulis(w) for _ in range(k)]))


def matrix(p: PauliString) -> np.ndarray:
    return oracle.pauli(str(p))


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ("X", "X", "I"),
        ("X", "Z", "-iY"),
        ("XZ", "ZZ", "-iYI"),
        ("Z", "X", "+iY"),
        ("Y", "Y", "I"),
    ],
)
def test_multiply_examples(a, b, expected):
    assert multiply(PauliString.parse(a), PauliString.parse(b)) == PauliString.parse(expected)


def test_xz_phase_matches_matrices():
    prod = PauliString.parse("XZ") * PauliString.parse("ZZ")
    assert np.allclose(matrix(prod), oracle.pauli("XZ") @ oracle.pauli("ZZ"))


@pytest.mark.parametrize(
    "a, b, expected",
    [("X", "Z", False), ("XX", "ZZ", True), ("XI", "ZZ", False), ("XYZ", "XYZ", True), ("YI", "IY", True)],
)
def test_commutes_examples(a, b, expected):
    assert commutes(PauliString.parse(a), PauliString.parse(b)) is expected


@pytest.mark.parametrize(
    "axis, i, n, expected",
    [("Z", 0, 1, "Z"), ("X", 1, 3, "IXI"), ("I", 2, 3, "III"), ("Y", 0, 2, "YI")],
)
def test_embed_single(axis, i, n, expected):
    p = embed_single(PauliAxis.parse(axis), i, n)
    assert p == PauliString.parse(expected)
    assert p.phase == 0


@pytest.mark.parametrize("i, n", [(3, 3), (-1, 2)])
def test_embed_single_out_of_range(i, n):
    with pytest.raises(PauliError):
        embed_single(PauliAxis.X, i, n)


def test_width_mismatch_raises():
    with pytest.raises(PauliError):
        multiply(PauliString.parse("X"), PauliString.parse("XX"))
    with pytest.raises(PauliError):
        commutes(PauliString.parse("X"), PauliString.parse("XX"))


def test_axis_bits_convention():
    p = PauliString.parse("IXZY")
    assert [p.axis(j) for j in range(4)] == [PauliAxis.I, PauliAxis.X, PauliAxis.Z, PauliAxis.Y]
    assert p.x == 0b1010 and p.z == 0b1100


@pytest.mark.parametrize(
    "text, rendered",
    [("-XIZY", "-XIZY"), ("+iXY", "+iXY"), ("-iZ", "-iZ"), ("+XX", "XX"), ("I", "I"), ("IXI", "IXI")],
)
def test_text_rendering(text, rendered):
    assert str(PauliString.parse(text)) == rendered


def test_leading_identity_is_not_a_phase():
    p = PauliString.parse("IXI")
    assert p.phase == 0 and p.n == 3


def test_parse_accepts_underscore_and_lowercase_i():
    assert PauliString.parse("X_Z") == PauliString.parse("XIZ")
    assert PauliString.parse("iX") == PauliString.parse("+iX")


@pytest.mark.parametrize("bad", ["", "-", "XQ", "2X"])
def test_parse_rejects_garbage(bad):
    with pytest.raises(PauliError):
        PauliString.parse(bad)


@pytest.mark.parametrize("text", ["+iX", "-iZZ"])
def test_observable_parser_rejects_imaginary(text):
    with pytest.raises(PauliError):
        parse_observable(text)


def test_observable_parser_accepts_signs():
    assert parse_observable("-ZX").sign == -1


@settings(max_examples=200, deadline=None)
@given(paulis())
def test_str_parse_round_trip(p):
    assert PauliString.parse(str(p)) == p


@settings(max_examples=200, deadline=None)
@given(same_width_pair())
def test_multiply_matches_matrix_product(pair):
    p, q = pair
    assert np.allclose(matrix(p * q), matrix(p) @ matrix(q))


@settings(max_examples=200, deadline=None)
@given(same_width_pair(3))
def test_associativity(triple):
    a, b, c = triple
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))


@settings(max_examples=200, deadline=None)
@given(same_width_pair())
def test_commutes_iff_phases_agree(pair):
    p, q = pair
    assert commutes(p, q) == ((p * q).phase == (q * p).phase)
    assert commutes(p, q) == np.allclose(matrix(p) @ matrix(q), matrix(q) @ matrix(p))


@settings(max_examples=100, deadline=None)
@given(paulis(hermitian=True))
def test_hermitian_strings_are_hermitian_matrices(p):
    assert p.is_hermitian
    m = matrix(p)
    assert np.allclose(m, m.conj().T)


@settings(max_examples=100, deadline=None)
@given(paulis())
def test_square_is_identity_up_to_phase(p):
    sq = p * p
    assert sq.is_identity()
    assert sq.phase == (2 * p.phase) % 4


def test_tensor_and_weight():
    p = PauliString.parse("XI").tensor(PauliString.parse("-ZY"))
    assert p == PauliString.parse("-XIZY")
    assert p.weight == 3
    assert p.support == 0b1101
