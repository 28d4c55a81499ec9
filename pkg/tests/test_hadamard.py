import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pldpc_hadamard import (
    LLR_CLAMP,
    assemble_llr_even,
    brute_force_map,
    build_hadamard,
    encode_nonsystematic,
    encode_systematic,
    fht,
    info_positions,
    symbol_map_decode_even,
    symbol_map_decode_odd,
)


def random_even_parity_word(rng, r):
    u = rng.integers(0, 2, r + 2)
    u[-1] = u[:-1].sum() % 2
    return u


def random_llrs(rng, r, scale=3.0):
    """(apr, ch) pair in the layout the order-r decoder expects."""
    q = 1 << r
    ext = rng.normal(scale=scale, size=r + 2)
    ch = rng.normal(scale=scale, size=q)
    if r % 2:
        ch[[0, q - 1]] = 0.0
        return ext, ch
    ch[info_positions(r)] = 0.0
    return assemble_llr_even(ext, ch)


# ── construction ─────────────────────────────────────────────────────

def test_build_hadamard_order_one():
    assert np.array_equal(build_hadamard(1), [[1, 1], [1, -1]])


def test_build_hadamard_order_two():
    expected = [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]]
    assert np.array_equal(build_hadamard(2), expected)


@pytest.mark.parametrize("r", [1, 2, 3, 4, 5, 6])
def test_hadamard_entry_formula_and_symmetry(r):
    hm = build_hadamard(r)
    idx = np.arange(1 << r)
    popcount_parity = np.array([bin(i & j).count("1") % 2
                                for i in idx for j in idx]).reshape(hm.shape)
    assert np.array_equal(hm, 1 - 2 * popcount_parity)
    assert np.array_equal(hm, hm.T)


@pytest.mark.parametrize("r", [1, 3, 5, 7])
def test_hadamard_rows_orthogonal(r):
    hm = build_hadamard(r).astype(np.int64)
    assert np.array_equal(hm @ hm.T, (1 << r) * np.eye(1 << r, dtype=np.int64))


@pytest.mark.parametrize("r", [0, -2, 17])
def test_build_hadamard_rejects_bad_order(r):
    with pytest.raises(ValueError):
        build_hadamard(r)


def test_info_positions_layout():
    assert info_positions(4).tolist() == [0, 1, 2, 4, 8, 15]
    assert info_positions(3).tolist() == [0, 1, 2, 4, 7]
    for r in range(1, 11):
        assert len(info_positions(r)) == r + 2


# ── fast transform ───────────────────────────────────────────────────

@pytest.mark.parametrize("r", range(1, 9))
def test_fht_matches_dense_product(r):
    rng = np.random.default_rng(100 + r)
    v = rng.normal(size=(4, 1 << r))
    dense = v @ build_hadamard(r).astype(np.float64)
    assert np.allclose(fht(v), dense, rtol=1e-12, atol=1e-12)


def test_fht_involution_up_to_scale():
    rng = np.random.default_rng(7)
    v = rng.normal(size=64)
    assert np.allclose(fht(fht(v)), 64 * v)


def test_fht_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        fht(np.zeros(12))


# ── encoders ─────────────────────────────────────────────────────────

@pytest.mark.parametrize("r", [2, 4, 6])
def test_systematic_encoder_embeds_info_bits(r):
    rng = np.random.default_rng(r)
    pos = info_positions(r)
    hm = build_hadamard(r).astype(np.int64)
    for _ in range(50):
        u = random_even_parity_word(rng, r)
        cw = encode_systematic(u, r)
        assert np.array_equal(cw[pos], u)
        corr = (1 - 2 * cw.astype(np.int64)) @ hm
        assert (np.abs(corr) == 1 << r).sum() == 1  # exactly one +-column


@pytest.mark.parametrize("r", [3, 5])
def test_nonsystematic_encoder_bit_placement(r):
    rng = np.random.default_rng(r)
    hm = build_hadamard(r).astype(np.int64)
    for _ in range(50):
        u = random_even_parity_word(rng, r)
        cw = encode_nonsystematic(u, r)
        assert cw[0] == u[0]
        assert cw[(1 << r) - 1] == u[r + 1]
        for k in range(1, r + 1):
            assert cw[1 << (k - 1)] == u[k] ^ u[0]
        corr = (1 - 2 * cw.astype(np.int64)) @ hm
        j = int(np.abs(corr).argmax())
        # sign of the selected column tracks bit 0
        assert corr[j] == (1 << r) * (1 - 2 * int(u[0]))


@pytest.mark.parametrize("r", [3, 4, 5])
def test_single_parity_check_over_all_codewords(r):
    """XOR over the r+2 information positions, exhaustive over all
    2^(r+1) codewords: zero everywhere for even r, zero on exactly the
    +H half for odd r (the complemented half flips an odd bit count)."""
    hm = build_hadamard(r)
    pos = info_positions(r)
    codewords = ((1 - np.concatenate([hm, -hm], axis=0)) // 2).astype(np.uint8)
    assert codewords.shape[0] == 1 << (r + 1)
    spc = codewords[:, pos].sum(axis=1) % 2
    q = 1 << r
    if r % 2 == 0:
        assert not spc.any()
    else:
        assert not spc[:q].any()
        assert spc[q:].all()


def test_encoder_rejects_odd_parity():
    with pytest.raises(ValueError, match="parity"):
        encode_systematic([1, 0, 0, 0, 0, 0], 4)
    with pytest.raises(ValueError, match="parity"):
        encode_nonsystematic([1, 0, 0, 0, 0], 3)


def test_encoder_rejects_wrong_order_parity():
    with pytest.raises(ValueError):
        encode_systematic([0] * 5, 3)
    with pytest.raises(ValueError):
        encode_nonsystematic([0] * 6, 4)


def test_encoder_rejects_non_binary():
    with pytest.raises(ValueError):
        encode_systematic([2, 0, 0, 0, 0, 0], 4)


def test_encoder_batched_matches_scalar():
    rng = np.random.default_rng(11)
    u = np.array([random_even_parity_word(rng, 4) for _ in range(8)])
    batch = encode_systematic(u, 4)
    for i in range(8):
        assert np.array_equal(batch[i], encode_systematic(u[i], 4))


# ── symbol-MAP decoding ──────────────────────────────────────────────

@pytest.mark.parametrize("r", [2, 4, 6])
def test_even_decoder_matches_enumeration(r):
    rng = np.random.default_rng(200 + r)
    for _ in range(100):
        apr, ch = random_llrs(rng, r)
        res = symbol_map_decode_even(apr, ch)
        ref = brute_force_map(apr, ch, r)
        assert np.abs(res.app - ref).max() < 1e-9


@pytest.mark.parametrize("r", [1, 3, 5])
def test_odd_decoder_matches_enumeration(r):
    rng = np.random.default_rng(300 + r)
    for _ in range(100):
        ext, ch = random_llrs(rng, r)
        res = symbol_map_decode_odd(ext, ch)
        ref = brute_force_map(ext, ch, r)
        assert np.abs(res.app - ref).max() < 1e-9


def test_even_decoder_extrinsic_identity():
    rng = np.random.default_rng(5)
    pos = info_positions(4)
    for _ in range(20):
        apr, ch = random_llrs(rng, 4)
        res = symbol_map_decode_even(apr, ch)
        assert np.array_equal(res.ext, res.app - apr[pos])
        assert np.allclose(res.ext + apr[pos], res.app, atol=1e-12)


def test_odd_decoder_extrinsic_identity():
    rng = np.random.default_rng(6)
    for _ in range(20):
        ext, ch = random_llrs(rng, 3)
        res = symbol_map_decode_odd(ext, ch)
        assert np.array_equal(res.ext, res.app - ext)
        assert np.allclose(res.ext + ext, res.app, atol=1e-12)


@pytest.mark.parametrize("r", [3, 4])
def test_decoder_recovers_encoded_word(r):
    """Strong consistent LLRs for an encoded word pin every info bit."""
    rng = np.random.default_rng(400 + r)
    q = 1 << r
    pos = info_positions(r)
    for _ in range(30):
        u = random_even_parity_word(rng, r)
        if r % 2 == 0:
            cw = encode_systematic(u, r)
            ch = np.where(cw == 0, 12.0, -12.0)
            ch[pos] = 0.0
            apr = np.zeros(q)
            apr[pos] = np.where(u == 0, 8.0, -8.0)
            app = symbol_map_decode_even(apr, ch).app
        else:
            cw = encode_nonsystematic(u, r)
            ch = np.where(cw == 0, 12.0, -12.0)
            ch[[0, q - 1]] = 0.0
            ext = np.where(u == 0, 8.0, -8.0)
            app = symbol_map_decode_odd(ext, ch).app
        assert np.array_equal((app < 0).astype(int), u)


def test_decoder_saturates_extreme_inputs():
    apr = np.full(16, 1e9)
    ch = np.zeros(16)
    apr_l, ch_l = np.zeros(16), np.zeros(16)
    apr_l[info_positions(4)] = 1e9
    res = symbol_map_decode_even(apr_l, ch_l)
    assert np.isfinite(res.app).all() and np.isfinite(res.ext).all()
    assert np.abs(res.app).max() <= (4 + 2) * LLR_CLAMP


def test_even_decoder_sign_symmetry():
    """Complementing all codeword bits negates every APP LLR (even r:
    the complement of a codeword is a codeword with complemented info)."""
    rng = np.random.default_rng(13)
    apr, ch = random_llrs(rng, 4)
    a = symbol_map_decode_even(apr, ch).app
    b = symbol_map_decode_even(-apr, -ch).app
    assert np.allclose(a, -b, atol=1e-9)


def test_decoder_batch_matches_scalar():
    rng = np.random.default_rng(21)
    rows = [random_llrs(rng, 4) for _ in range(6)]
    apr = np.array([a for a, _ in rows])
    ch = np.array([c for _, c in rows])
    batch = symbol_map_decode_even(apr, ch)
    for i, (a, c) in enumerate(rows):
        single = symbol_map_decode_even(a, c)
        assert np.allclose(batch.app[i], single.app)
        assert np.allclose(batch.ext[i], single.ext)


def test_assemble_llr_even_validation():
    with pytest.raises(ValueError):
        assemble_llr_even(np.zeros(6), np.ones(16))  # info slots occupied
    with pytest.raises(ValueError):
        assemble_llr_even(np.zeros(5), np.zeros(16))  # wrong apriori length
    with pytest.raises(ValueError):
        assemble_llr_even(np.zeros(5), np.zeros(8))  # odd order layout


def test_odd_decoder_validation():
    with pytest.raises(ValueError):
        symbol_map_decode_odd(np.zeros(5), np.ones(8))  # untransmitted slots
    with pytest.raises(ValueError):
        symbol_map_decode_odd(np.zeros(6), np.zeros(16))  # even order


def test_brute_force_refuses_large_order():
    with pytest.raises(ValueError):
        brute_force_map(np.zeros(128), np.zeros(128), 7)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=6, max_size=6),
       st.integers(0, 2**32 - 1))
def test_even_decoder_agrees_with_enumeration_hypothesis(ext, seed):
    rng = np.random.default_rng(seed)
    ch = rng.normal(scale=4.0, size=16)
    ch[info_positions(4)] = 0.0
    apr, ch = assemble_llr_even(np.array(ext), ch)
    res = symbol_map_decode_even(apr, ch)
    ref = brute_force_map(apr, ch, 4)
    assert np.abs(res.app - ref).max() < 1e-9
