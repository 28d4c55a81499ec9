"""Message-passing decoder checks.

The check-node update is compared against the enumeration oracle on
single-check codes, where the graph is a tree and exact symbol-MAP
answers are available; the variable-node update against a direct
per-edge recomputation.  End-to-end runs use small lifts of the bundled
protomatrices.
"""

from importlib.resources import files

import numpy as np
import pytest

from pldpc_hadamard.decoder import (
    DecoderConfig,
    _graph,
    cn_pass,
    decode,
    decode_many,
    vn_pass,
)
from pldpc_hadamard.hadamard import brute_force_map, info_positions
from pldpc_hadamard.pexit import _d1h_positions
from pldpc_hadamard.protograph import (
    QcCode,
    expand_edges,
    lift_two_step,
    parse_protomatrix,
)

DATA = files("pldpc_hadamard") / "data"


def bundled(name):
    return parse_protomatrix((DATA / name).read_text())


def single_check_code(r):
    """One check node of order r with its d = r + 2 weight-one columns."""
    d = r + 2
    return QcCode(1, d, 1, 1, r, [(0, j, 0) for j in range(d)])


@pytest.fixture(scope="module")
def code_r4():
    return lift_two_step(bundled("proto_r4_7x11.txt"), 4, 4, seed=5)


@pytest.fixture(scope="module")
def code_r5():
    return lift_two_step(bundled("proto_r5_6x10.txt"), 4, 4, seed=5)


def awgn_all_zero(code, sigma, rng, frames=1):
    """Channel LLRs of all-zero frames without the sim layer."""
    g = _graph(code)
    n_par = g.q - g.d if code.r % 2 == 0 else g.q - 2
    scale = 2.0 / sigma**2
    pvn = scale * (1.0 + sigma * rng.standard_normal((frames, code.N_pvn)))
    d1h = scale * (1.0 + sigma * rng.standard_normal((frames, code.M, n_par)))
    return pvn, d1h


# ── configuration ────────────────────────────────────────────────────

def test_config_defaults():
    cfg = DecoderConfig()
    assert cfg.max_iters == 300
    assert cfg.early_stop is True


@pytest.mark.parametrize("bad", [0, -3])
def test_config_rejects_nonpositive_budget(bad):
    with pytest.raises(ValueError, match="max_iters"):
        DecoderConfig(max_iters=bad)


# ── graph layout ─────────────────────────────────────────────────────

def test_graph_slots_sorted_by_column(code_r4):
    g = _graph(code_r4)
    assert g.var_by_cn.shape == (code_r4.M, code_r4.d)
    # within a check the d slots hit distinct, ascending bit nodes
    assert (np.diff(g.var_by_cn, axis=1) > 0).all()


def test_graph_covers_every_edge(code_r4):
    g = _graph(code_r4)
    chk, var = expand_edges(code_r4)
    assert np.array_equal(np.sort(g.cn_order), np.arange(chk.size))
    rebuilt = np.empty_like(var)
    rebuilt[g.cn_order] = g.var_by_cn.ravel()
    assert np.array_equal(rebuilt, var)


def test_graph_cached_per_code(code_r4):
    assert _graph(code_r4) is _graph(code_r4)


def test_graph_scatter_inverts_gather(code_r4):
    g = _graph(code_r4)
    rng = np.random.default_rng(0)
    flat = rng.normal(size=g.var.size)
    per_cn = flat[g.cn_order].reshape(g.m_total, g.d)
    assert np.array_equal(g.scatter_cn(per_cn), flat)


# ── variable-node update ─────────────────────────────────────────────

def test_vn_pass_matches_per_edge_recomputation(code_r4):
    rng = np.random.default_rng(1)
    chk, var = expand_edges(code_r4)
    pvn = rng.normal(size=code_r4.N_pvn)
    c2v = rng.normal(size=var.size)
    v2c, app = vn_pass(code_r4, pvn, c2v)
    for e in rng.choice(var.size, size=50, replace=False):
        peers = np.flatnonzero(var == var[e])
        want = pvn[var[e]] + c2v[peers].sum() - c2v[e]
        assert abs(v2c[e] - want) < 1e-10
        assert abs(app[var[e]] - (pvn[var[e]] + c2v[peers].sum())) < 1e-10


def test_vn_pass_batch_matches_single(code_r4):
    rng = np.random.default_rng(2)
    _, var = expand_edges(code_r4)
    pvn = rng.normal(size=(3, code_r4.N_pvn))
    c2v = rng.normal(size=(3, var.size))
    v2c_b, app_b = vn_pass(code_r4, pvn, c2v)
    for f in range(3):
        v2c_s, app_s = vn_pass(code_r4, pvn[f], c2v[f])
        assert np.array_equal(v2c_b[f], v2c_s)
        assert np.array_equal(app_b[f], app_s)


# ── check-node update vs enumeration ─────────────────────────────────

@pytest.mark.parametrize("r", [2, 4])
def test_cn_pass_matches_brute_even(r):
    code = single_check_code(r)
    q, d = 1 << r, r + 2
    pos = _d1h_positions(r, 0)
    rng = np.random.default_rng(10 + r)
    for _ in range(25):
        v2c = rng.uniform(-8, 8, size=(1, d))
        d1h = rng.uniform(-8, 8, size=(1, 1, q - d))
        got = cn_pass(code, v2c, d1h)
        apr_q = np.zeros(q)
        apr_q[info_positions(r)] = v2c[0]
        ch_q = np.zeros(q)
        ch_q[pos] = d1h[0, 0]
        want = brute_force_map(apr_q, ch_q, r) - v2c[0]
        assert np.abs(got[0] - want).max() < 1e-9


@pytest.mark.parametrize("r,n_h", [(3, 0), (3, 1), (5, 2)])
def test_cn_pass_matches_brute_odd(r, n_h):
    code = single_check_code(r)
    q, d = 1 << r, r + 2
    pos = _d1h_positions(r, n_h)
    rng = np.random.default_rng(20 + r + n_h)
    for _ in range(25):
        v2c = rng.uniform(-8, 8, size=(1, d))
        d1h = rng.uniform(-8, 8, size=(1, 1, q - 2 - n_h))
        got = cn_pass(code, v2c, d1h)
        ch_q = np.zeros(q)
        ch_q[pos] = d1h[0, 0]
        want = brute_force_map(v2c[0], ch_q, r) - v2c[0]
        assert np.abs(got[0] - want).max() < 1e-9


@pytest.mark.parametrize("r", [3, 4])
def test_cn_pass_extrinsic_ignores_own_apriori(r):
    """On a tree the extrinsic output of a slot cannot depend on that
    slot's own a-priori input."""
    code = single_check_code(r)
    q, d = 1 << r, r + 2
    n_par = q - d if r % 2 == 0 else q - 2
    rng = np.random.default_rng(30 + r)
    v2c = rng.uniform(-6, 6, size=(1, d))
    d1h = rng.uniform(-6, 6, size=(1, 1, n_par))
    base = cn_pass(code, v2c, d1h)
    for slot in range(d):
        bumped = v2c.copy()
        bumped[0, slot] += rng.uniform(-4, 4)
        out = cn_pass(code, bumped, d1h)
        assert abs(out[0, slot] - base[0, slot]) < 1e-9


def test_cn_pass_batch_matches_single(code_r4):
    g = _graph(code_r4)
    rng = np.random.default_rng(3)
    v2c = rng.uniform(-5, 5, size=(3, g.var.size))
    d1h = rng.uniform(-5, 5, size=(3, g.m_total, g.q - g.d))
    batch = cn_pass(code_r4, v2c, d1h)
    for f in range(3):
        single = cn_pass(code_r4, v2c[f][None], d1h[f][None])
        assert np.abs(batch[f] - single[0]).max() < 1e-12


# ── shape validation ─────────────────────────────────────────────────

def test_cn_pass_rejects_wrong_parity_count(code_r4):
    g = _graph(code_r4)
    v2c = np.zeros((1, g.var.size))
    with pytest.raises(ValueError, match="parity"):
        cn_pass(code_r4, v2c, np.zeros((1, g.m_total, g.q - g.d - 1)))


def test_cn_pass_rejects_wrong_check_count(code_r4):
    g = _graph(code_r4)
    v2c = np.zeros((1, g.var.size))
    with pytest.raises(ValueError, match="per check node"):
        cn_pass(code_r4, v2c, np.zeros((1, g.m_total + 1, g.q - g.d)))


def test_cn_pass_rejects_overpunctured_odd(code_r5):
    g = _graph(code_r5)
    v2c = np.zeros((1, g.var.size))
    with pytest.raises(ValueError, match="odd order"):
        cn_pass(code_r5, v2c, np.zeros((1, g.m_total, g.q - 2 - g.r - 1)))


def test_decode_rejects_wrong_pvn_length(code_r4):
    with pytest.raises(ValueError, match="variable-node"):
        decode_many(code_r4, np.zeros((1, code_r4.N_pvn + 1)),
                    np.zeros((1, code_r4.M, 10)))


# ── end-to-end decoding ──────────────────────────────────────────────

def test_decode_clean_channel_converges_first_iteration(code_r4):
    pvn = np.full((1, code_r4.N_pvn), 20.0)
    d1h = np.full((1, code_r4.M, 10), 20.0)
    hard, iters, conv = decode_many(code_r4, pvn, d1h)
    assert not hard.any()
    assert conv[0] and iters[0] == 1


def test_decode_single_wraps_batch(code_r4):
    rng = np.random.default_rng(4)
    pvn, d1h = awgn_all_zero(code_r4, 2.0, rng)
    out = decode(code_r4, pvn[0], d1h[0])
    hard, iters, conv = decode_many(code_r4, pvn, d1h)
    assert np.array_equal(out.hard_bits, hard[0])
    assert out.iterations_used == iters[0]
    assert out.converged == conv[0]


def test_decode_many_matches_frame_by_frame(code_r4):
    rng = np.random.default_rng(6)
    pvn, d1h = awgn_all_zero(code_r4, 2.6, rng, frames=6)
    hard, iters, conv = decode_many(code_r4, pvn, d1h)
    for f in range(6):
        one = decode(code_r4, pvn[f], d1h[f])
        assert np.array_equal(one.hard_bits, hard[f])
        assert one.iterations_used == iters[f]
        assert one.converged == conv[f]


def test_decode_moderate_noise_recovers_zero(code_r4):
    rng = np.random.default_rng(7)
    pvn, d1h = awgn_all_zero(code_r4, 2.2, rng, frames=4)
    hard, iters, conv = decode_many(code_r4, pvn, d1h)
    assert conv.all()
    assert not hard.any()
    assert (iters < 300).all()


def test_decode_odd_order_recovers_zero(code_r5):
    rng = np.random.default_rng(8)
    pvn, d1h = awgn_all_zero(code_r5, 2.2, rng, frames=4)
    hard, iters, conv = decode_many(code_r5, pvn, d1h)
    assert conv.all()
    assert not hard.any()


def test_converged_frames_pass_every_check(code_r4):
    """Early-stop soundness: a converged flag certifies the parity
    identity at every check on the returned decisions."""
    rng = np.random.default_rng(9)
    g = _graph(code_r4)
    pvn, d1h = awgn_all_zero(code_r4, 3.0, rng, frames=16)
    hard, _, conv = decode_many(code_r4, pvn, d1h, DecoderConfig(max_iters=40))
    parity = hard[:, g.var_by_cn].sum(axis=-1) & 1
    ok = (parity == 0).all(axis=-1)
    assert not (conv & ~ok).any()


def test_convergence_flag_honest_without_early_stop(code_r4):
    """With early stopping disabled the flag still reflects the parity
    test at the final iteration, not the budget."""
    rng = np.random.default_rng(11)
    g = _graph(code_r4)
    pvn, d1h = awgn_all_zero(code_r4, 3.4, rng, frames=8)
    cfg = DecoderConfig(max_iters=8, early_stop=False)
    hard, iters, conv = decode_many(code_r4, pvn, d1h, cfg)
    assert (iters == 8).all()
    parity = hard[:, g.var_by_cn].sum(axis=-1) & 1
    assert np.array_equal(conv, (parity == 0).all(axis=-1))


def test_decode_leaves_inputs_untouched(code_r4):
    rng = np.random.default_rng(12)
    pvn, d1h = awgn_all_zero(code_r4, 2.0, rng, frames=2)
    pvn_copy, d1h_copy = pvn.copy(), d1h.copy()
    decode_many(code_r4, pvn, d1h)
    assert np.array_equal(pvn, pvn_copy)
    assert np.array_equal(d1h, d1h_copy)
