"""Hadamard component codes.

Sylvester matrix construction, the fast Hadamard transform, systematic
(even order) and non-systematic (odd order) encoders, and the log-domain
symbol-MAP decoder that acts as the check-node processor of the global
iterative decoder.

Conventions: an order-r Hadamard code has length q = 2^r and 2^(r+1)
codewords, the columns of +H_q together with their complements.  Bit 0
maps to symbol +1 and bit 1 to symbol -1.  LLRs are natural-log with
positive values favoring bit 0.  The r+2 information positions of a
codeword are {0, 1, 2, 4, ..., 2^(r-1), 2^r - 1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

# Saturation bound (natural-log units) applied to decoder inputs before
# any exp/log path.  Keeps ext = app - apr finite without changing any
# hard decision.
LLR_CLAMP = 60.0


def clamp_llr(x: np.ndarray) -> np.ndarray:
    """Saturate LLR magnitudes at LLR_CLAMP (returns a new array)."""
    return np.clip(x, -LLR_CLAMP, LLR_CLAMP)


def build_hadamard(r: int) -> np.ndarray:
    """Order-r Hadamard matrix of +-1 entries via the Sylvester recursion.

    Args:
        r: matrix order, 1 <= r <= 16; the result is 2^r x 2^r.

    Returns:
        int8 matrix H with H[i, j] = (-1)^popcount(i & j); symmetric,
        rows mutually orthogonal.

    Raises:
        ValueError: r out of range.
    """
    if not 1 <= r <= 16:
        raise ValueError(f"order r must be in [1, 16], got {r}")
    h = np.array([[1, 1], [1, -1]], dtype=np.int8)
    m = h
    for _ in range(r - 1):
        m = np.kron(m, h)
    return m


def fht(v: np.ndarray) -> np.ndarray:
    """Fast Hadamard transform along the last axis.

    Computes out[j] = <+h_j, v> for every column +h_j of the Hadamard
    matrix, in log2(q) butterfly passes.  Applying it twice returns
    q * v (involution up to scale).

    Args:
        v: real array whose last axis has power-of-two length.

    Returns:
        float64 array, same shape as v.

    Raises:
        ValueError: last-axis length is not a power of two.
    """
    v = np.asarray(v, dtype=np.float64)
    q = v.shape[-1]
    if q == 0 or q & (q - 1):
        raise ValueError(f"length must be a power of two, got {q}")
    shape = v.shape
    out = v.reshape(-1, q).copy()
    h = 1
    while h < q:
        out = out.reshape(-1, q // (2 * h), 2, h)
        a = out[:, :, 0, :] + out[:, :, 1, :]
        b = out[:, :, 0, :] - out[:, :, 1, :]
        out[:, :, 0, :] = a
        out[:, :, 1, :] = b
        out = out.reshape(-1, q)
        h *= 2
    return out.reshape(shape)


def info_positions(r: int) -> np.ndarray:
    """The r+2 information-bit positions {0, 1, 2, 4, ..., 2^(r-1), 2^r - 1}."""
    return np.array([0] + [1 << k for k in range(r)] + [(1 << r) - 1])


@lru_cache(maxsize=None)
def _bit_parity_table(r: int) -> np.ndarray:
    """t[i] = popcount(i) mod 2 for i in [0, 2^r)."""
    q = 1 << r
    t = np.zeros(q, dtype=np.uint8)
    for i in range(1, q):
        t[i] = t[i >> 1] ^ (i & 1)
    return t


def _check_info_word(u: np.ndarray, r: int) -> np.ndarray:
    u = np.asarray(u)
    if u.shape[-1] != r + 2:
        raise ValueError(f"information word must have length r+2 = {r + 2}")
    if not np.isin(u, (0, 1)).all():
        raise ValueError("information word must be binary")
    u = u.astype(np.int64)
    if (u.sum(axis=-1) % 2).any():
        raise ValueError("information word violates even parity; no codeword exists")
    return u


def _column_select(u: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Map information words to (sign, column index) of the codebook.

    sign 0 selects +h_j, sign 1 the complement -h_j.  Bit k-1 of j is
    the symbol the codeword carries at position 2^(k-1), relative to the
    sign half.
    """
    s = u[..., 0]
    j = np.zeros(u.shape[:-1], dtype=np.int64)
    for k in range(1, r + 1):
        j |= (u[..., k] ^ s) << (k - 1)
    return s, j


def _emit_codeword(s: np.ndarray, j: np.ndarray, r: int) -> np.ndarray:
    q = 1 << r
    tab = _bit_parity_table(r)
    i = np.arange(q)
    return (tab[i & j[..., None]] ^ s[..., None].astype(np.uint8)).astype(np.uint8)


def encode_systematic(u: np.ndarray, r: int) -> np.ndarray:
    """Encode an even-parity information word for even order r.

    The output codeword carries u unchanged at the r+2 information
    positions; the remaining 2^r - (r + 2) positions are Hadamard
    parity bits.

    Args:
        u: binary array (..., r+2) with even parity per word.
        r: even Hadamard order.

    Returns:
        uint8 codeword array (..., 2^r).

    Raises:
        ValueError: odd r, non-binary input, or parity violation.
    """
    if r % 2:
        raise ValueError(f"systematic encoding requires even r, got {r}")
    u = _check_info_word(u, r)
    return _emit_codeword(*_column_select(u, r), r)


def encode_nonsystematic(u: np.ndarray, r: int) -> np.ndarray:
    """Encode an even-parity information word for odd order r.

    The information word is first transformed (bits 1..r are XORed with
    bit 0) and then Hadamard-encoded.  The output has u[0] at position
    0, u[r+1] at position 2^r - 1, and u[k] ^ u[0] at position 2^(k-1);
    the codeword lies in the +H half when u[0] = 0 and in the -H half
    when u[0] = 1.

    Args/Returns/Raises: as encode_systematic, but r must be odd.
    """
    if r % 2 == 0:
        raise ValueError(f"non-systematic encoding requires odd r, got {r}")
    u = _check_info_word(u, r)
    c = u.copy()
    c[..., 1:r + 1] ^= u[..., 0:1]
    return _emit_codeword(*_column_select(c, r), r)


# ── symbol-MAP decoding ──────────────────────────────────────────────

@dataclass
class HadamardDecodeResult:
    """A-posteriori and extrinsic LLRs of the r+2 information bits."""
    app: np.ndarray
    ext: np.ndarray


def _infer_order(q: int) -> int:
    r = int(q).bit_length() - 1
    if q != 1 << r or r < 1:
        raise ValueError(f"LLR vector length {q} is not a power of two >= 2")
    return r


@lru_cache(maxsize=None)
def _odd_apriori_layouts(r: int) -> tuple[np.ndarray, np.ndarray]:
    """Placement matrices (r+2, q) scattering information-bit a-priori
    LLRs onto codeword positions, one per codebook half.  On the -H half
    the middle bits enter negated (their codeword bits are XORed with
    bit 0, which is 1 there).  Built additively so the order-1 collision
    of positions 2^0 and 2^r - 1 accumulates instead of overwriting.
    """
    q = 1 << r
    pos = info_positions(r)
    p_plus = np.zeros((r + 2, q))
    p_minus = np.zeros((r + 2, q))
    for k, p in enumerate(pos):
        p_plus[k, p] += 1.0
        p_minus[k, p] += -1.0 if 1 <= k <= r else 1.0
    return p_plus, p_minus


@lru_cache(maxsize=None)
def _decode_tables(r: int) -> tuple[np.ndarray, np.ndarray]:
    """Codeword index sets for the per-bit likelihood-ratio split.

    The 2q codewords are indexed [+h_0 .. +h_{q-1}, -h_0 .. -h_{q-1}].
    Row k of the returned (r+2, q) tables lists the codewords whose k-th
    information bit is 0 (num) respectively 1 (den).

    For even r the information bits are codeword bits, so the -H half
    splits by H[i, j] = -1.  For odd r the middle information bits are
    c[2^(k-1)] ^ c[0]; both halves then split by H[i, j] = +1, while
    bits 0 and r+1 keep the plain codeword-bit split.
    """
    q = 1 << r
    hm = build_hadamard(r)
    pos = info_positions(r)
    num_rows, den_rows = [], []
    for k, p in enumerate(pos):
        plus = np.nonzero(hm[p] == 1)[0]
        minus = np.nonzero(hm[p] == -1)[0]
        if r % 2 and k == 0:
            num, den = np.arange(q), q + np.arange(q)
        elif r % 2 and 1 <= k <= r:
            num = np.concatenate([plus, q + plus])
            den = np.concatenate([minus, q + minus])
        else:
            num = np.concatenate([plus, q + minus])
            den = np.concatenate([minus, q + plus])
        num_rows.append(num)
        den_rows.append(den)
    return np.array(num_rows), np.array(den_rows)


def _app_from_logweights(g: np.ndarray, r: int) -> np.ndarray:
    """Per-information-bit APP LLRs from per-codeword log weights (..., 2q)."""
    num_idx, den_idx = _decode_tables(r)
    return logsumexp(g[..., num_idx], axis=-1) - logsumexp(g[..., den_idx], axis=-1)


def assemble_llr_even(ext_from_pvns: np.ndarray,
                      channel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lay out a-priori and channel LLRs over all 2^r codeword positions.

    Args:
        ext_from_pvns: (..., r+2) extrinsic LLRs from the variable nodes.
        channel: (..., 2^r) channel LLRs; must be zero at the r+2
            information positions (those bits are not transmitted as
            degree-1 parity bits).

    Returns:
        (apr, ch): apr holds ext_from_pvns at the information positions
        and zero elsewhere; ch is the validated channel layout.

    Raises:
        ValueError: odd r, shape mismatch, or nonzero channel LLR at an
            information position.
    """
    channel = np.asarray(channel, dtype=np.float64)
    ext_from_pvns = np.asarray(ext_from_pvns, dtype=np.float64)
    r = _infer_order(channel.shape[-1])
    if r % 2:
        raise ValueError(f"even-order layout requires even r, got {r}")
    pos = info_positions(r)
    if ext_from_pvns.shape[-1] != r + 2:
        raise ValueError(f"expected {r + 2} a-priori LLRs, got {ext_from_pvns.shape[-1]}")
    if np.any(channel[..., pos] != 0.0):
        raise ValueError("channel LLRs must be zero at the information positions")
    apr = np.zeros(np.broadcast_shapes(ext_from_pvns.shape[:-1], channel.shape[:-1])
                   + (1 << r,))
    apr[..., pos] = ext_from_pvns
    return apr, channel


def symbol_map_decode_even(apr: np.ndarray, ch: np.ndarray) -> HadamardDecodeResult:
    """Symbol-MAP decode for even order r.

    Codeword log weights are <+-h_j, L>/2 with L = apr + ch, computed
    for the whole codebook by one fast Hadamard transform; per-bit APP
    LLRs follow from a max-shifted log-sum-exp over each half of the
    codeword split.  Inputs are saturated at +-LLR_CLAMP first.

    Args:
        apr: (..., 2^r) a-priori LLRs (from assemble_llr_even).
        ch: (..., 2^r) channel LLRs.

    Returns:
        HadamardDecodeResult with app and ext of shape (..., r+2);
        ext = app - apr at the information positions.
    """
    apr = clamp_llr(np.asarray(apr, dtype=np.float64))
    ch = clamp_llr(np.asarray(ch, dtype=np.float64))
    r = _infer_order(ch.shape[-1])
    if r % 2:
        raise ValueError(f"even-order decoder requires even r, got {r}")
    f = fht((apr + ch) * 0.5)
    g = np.concatenate([f, -f], axis=-1)
    app = _app_from_logweights(g, r)
    ext = app - apr[..., info_positions(r)]
    return HadamardDecodeResult(app=app, ext=ext)


def symbol_map_decode_odd(ext_from_pvns: np.ndarray,
                          channel: np.ndarray) -> HadamardDecodeResult:
    """Symbol-MAP decode for odd order r.

    The a-priori LLRs of the d information bits are mapped onto two
    codeword-position layouts, one per codebook half: in the -H layout
    the middle positions 2^(k-1) carry -L because those codeword bits
    are the information bits XORed with bit 0, which is 1 on that half.
    Each half then gets its own transform, and the per-bit split of
    _decode_tables recovers the information-bit APP LLRs.

    Args:
        ext_from_pvns: (..., r+2) extrinsic LLRs from the variable nodes.
        channel: (..., 2^r) channel LLRs; positions 0 and 2^r - 1 are
            never transmitted and must be zero.

    Returns:
        HadamardDecodeResult with ext = app - ext_from_pvns.

    Raises:
        ValueError: even r or nonzero channel LLR at position 0/2^r - 1.
    """
    channel = clamp_llr(np.asarray(channel, dtype=np.float64))
    lr = clamp_llr(np.asarray(ext_from_pvns, dtype=np.float64))
    q = channel.shape[-1]
    r = _infer_order(q)
    if r % 2 == 0:
        raise ValueError(f"odd-order decoder requires odd r, got {r}")
    if lr.shape[-1] != r + 2:
        raise ValueError(f"expected {r + 2} a-priori LLRs, got {lr.shape[-1]}")
    if np.any(np.asarray(channel)[..., [0, q - 1]] != 0.0):
        raise ValueError("channel LLRs at positions 0 and 2^r-1 must be zero")
    p_plus, p_minus = _odd_apriori_layouts(r)
    apr_plus = lr @ p_plus
    apr_minus = lr @ p_minus
    f_plus = fht((channel + apr_plus) * 0.5)
    f_minus = fht((channel + apr_minus) * 0.5)
    g = np.concatenate([f_plus, -f_minus], axis=-1)
    app = _app_from_logweights(g, r)
    return HadamardDecodeResult(app=app, ext=app - lr)


def brute_force_map(apr: np.ndarray, ch: np.ndarray, r: int) -> np.ndarray:
    """Exact APP LLRs by direct enumeration of all 2^(r+1) codewords.

    Test oracle for the two symbol-MAP decoders: per-codeword
    probability weights are accumulated in extended precision with no
    transform involved.  Applies the same +-LLR_CLAMP input saturation
    as the production decoders.

    Args:
        apr: a-priori LLRs; length 2^r (even r, assembled layout) or
            r+2 (odd r, information-bit layout).
        ch: (..., 2^r) channel LLRs.
        r: Hadamard order, at most 6 (enumeration cost).

    Returns:
        float64 APP LLR array (..., r+2).

    Raises:
        ValueError: r > 6 or shape mismatch.
    """
    if r > 6:
        raise ValueError(f"brute force enumeration refuses r > 6, got {r}")
    q = 1 << r
    apr = clamp_llr(np.asarray(apr, dtype=np.float64))
    ch = clamp_llr(np.asarray(ch, dtype=np.float64))
    hm = build_hadamard(r).astype(np.longdouble)
    # Symbol rows of the full codebook: s_all[j] is codeword j's symbols.
    s_all = np.concatenate([hm, -hm], axis=0)
    if apr.shape[-1] == q and r % 2 == 0:
        logw = 0.5 * (ch + apr).astype(np.longdouble) @ s_all.T
    elif apr.shape[-1] == r + 2 and r % 2 == 1:
        pos = info_positions(r)
        # Information-bit symbols per codeword: middle bits are the
        # codeword bit at 2^(k-1) XOR the bit at 0.
        t = s_all[:, pos].copy()
        t[:, 1:-1] *= s_all[:, 0:1]
        logw = 0.5 * (ch.astype(np.longdouble) @ s_all.T
                      + apr.astype(np.longdouble) @ t.T)
    else:
        raise ValueError(
            f"a-priori length {apr.shape[-1]} does not match order {r} "
            f"({'even' if r % 2 == 0 else 'odd'})")
    num_idx, den_idx = _decode_tables(r)

    def lse(x):
        m = x.max(axis=-1, keepdims=True)
        return (m + np.log(np.exp(x - m).sum(axis=-1, keepdims=True)))[..., 0]

    app = lse(logw[..., num_idx]) - lse(logw[..., den_idx])
    return app.astype(np.float64)
