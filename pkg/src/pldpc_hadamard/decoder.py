"""Iterative decoder for lifted quasi-cyclic codes with Hadamard checks.

Messages flood between the repeat side (one sum per protograph variable
node and edge) and the check side (one symbol-MAP Hadamard decode per
check node and iteration).  Edge state lives in flat arrays ordered by
the code's block layout; per check node the d incident edge slots are
sorted by ascending lifted column, which lets the whole check update run
as one batched transform-domain decode.

Decoding stops early once the hard decisions at every check satisfy the
single-parity-check identity of its information bits, or when the
iteration budget runs out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hadamard import info_positions, symbol_map_decode_even, symbol_map_decode_odd
from .pexit import _d1h_positions
from .protograph import QcCode, expand_edges


@dataclass
class DecoderConfig:
    max_iters: int = 300
    early_stop: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class DecodeOutcome:
    """Result of one frame: hard decisions over the protograph variable
    nodes, iterations consumed, and whether every check passed the
    parity test before the budget ran out."""
    hard_bits: np.ndarray
    iterations_used: int
    converged: bool


class _Graph:
    """Flat edge layout of a lifted code plus the gather/scatter index
    sets both passes need.  Built once per QcCode and cached on it."""

    def __init__(self, code: QcCode):
        chk, var = expand_edges(code)
        d = code.d
        m_total = code.M
        counts = np.bincount(chk, minlength=m_total)
        if not (counts == d).all():
            raise ValueError("every check node must have exactly d edges")
        # per-check slots in ascending lifted column order
        self.cn_order = np.lexsort((var, chk))
        self.var = var
        self.n_total = code.N_pvn
        self.m_total = m_total
        self.d = d
        self.r = code.r
        self.q = 1 << code.r
        self.var_by_cn = var[self.cn_order].reshape(m_total, d)

    def scatter_cn(self, per_cn: np.ndarray) -> np.ndarray:
        flat = np.empty(per_cn.shape[:-2] + (self.m_total * self.d,))
        flat[..., self.cn_order] = per_cn.reshape(*per_cn.shape[:-2], -1)
        return flat


def _graph(code: QcCode) -> _Graph:
    cached = getattr(code, "_decoder_graph", None)
    if cached is None:
        cached = _Graph(code)
        code._decoder_graph = cached
    return cached


def _app_llr(g: _Graph, pvn_llr: np.ndarray, c2v: np.ndarray) -> np.ndarray:
    """Channel plus the sum of all incoming check messages, per node."""
    if pvn_llr.ndim == 1:
        return pvn_llr + np.bincount(g.var, weights=c2v, minlength=g.n_total)
    app = pvn_llr.copy()
    for f in range(pvn_llr.shape[0]):
        app[f] += np.bincount(g.var, weights=c2v[f], minlength=g.n_total)
    return app


def vn_pass(code: QcCode, pvn_llr: np.ndarray, c2v: np.ndarray):
    """Repeat-node update: each edge carries the channel value plus the
    sum of all other incoming check messages.

    Accepts a leading batch axis on both arrays.  Returns (v2c, app)
    where app is the full sum including the channel.
    """
    g = _graph(code)
    pvn_llr = np.asarray(pvn_llr, dtype=np.float64)
    c2v = np.asarray(c2v, dtype=np.float64)
    app = _app_llr(g, pvn_llr, c2v)
    v2c = app[..., g.var] - c2v
    return v2c, app


def _d1h_shape(g: _Graph, d1h_llr: np.ndarray) -> np.ndarray:
    d1h_llr = np.asarray(d1h_llr, dtype=np.float64)
    if d1h_llr.shape[-2] != g.m_total:
        raise ValueError(
            f"expected one channel row per check node ({g.m_total}), "
            f"got {d1h_llr.shape[-2]}")
    n_par = d1h_llr.shape[-1]
    if g.r % 2 == 0:
        expect = g.q - g.d
        if n_par != expect:
            raise ValueError(f"even order {g.r} transmits {expect} parity "
                             f"bits per check, got {n_par}")
        n_h = 0
    else:
        n_h = g.q - 2 - n_par
        if not 0 <= n_h <= g.r:
            raise ValueError(f"odd order {g.r} transmits between "
                             f"{g.q - 2 - g.r} and {g.q - 2} parity bits "
                             f"per check, got {n_par}")
    return _d1h_positions(g.r, n_h)


def cn_pass(code: QcCode, v2c: np.ndarray, d1h_llr: np.ndarray) -> np.ndarray:
    """Check-node update: one symbol-MAP Hadamard decode per check.

    v2c edge messages become the a-priori inputs of the r+2 information
    bits (slot order); d1h_llr rows carry the channel LLRs of the
    transmitted parity bits, whose count fixes how many of the odd-order
    middle positions were punctured.  Returns extrinsic messages in the
    same edge layout.
    """
    g = _graph(code)
    pos = _d1h_shape(g, d1h_llr)
    v2c = np.asarray(v2c, dtype=np.float64)
    batch = v2c.shape[:-1]
    apr = v2c[..., g.cn_order].reshape(*batch, g.m_total, g.d)
    ch = np.zeros(batch + (g.m_total, g.q))
    ch[..., pos] = d1h_llr
    if g.r % 2 == 0:
        apr_q = np.zeros(batch + (g.m_total, g.q))
        apr_q[..., info_positions(g.r)] = apr
        ext = symbol_map_decode_even(apr_q, ch).ext
    else:
        ext = symbol_map_decode_odd(apr, ch).ext
    return g.scatter_cn(ext)


def _spc_ok(g: _Graph, hard: np.ndarray) -> np.ndarray:
    """Per-frame truth of the all-checks parity test on hard decisions."""
    parity = hard[..., g.var_by_cn].sum(axis=-1) & 1
    return (parity == 0).all(axis=-1)


def decode_many(code: QcCode, pvn_llr: np.ndarray, d1h_llr: np.ndarray,
                cfg: DecoderConfig | None = None):
    """Decode a batch of frames with converged frames retired early.

    Args:
        pvn_llr: (frames, N_pvn) channel LLRs of the protograph variable
            nodes; punctured columns must be zero.
        d1h_llr: (frames, M, g) channel LLRs of the transmitted parity
            bits per check node.
        cfg: iteration budget and early-stop switch.

    Returns:
        (hard_bits (frames, N_pvn) uint8, iterations (frames,) int,
        converged (frames,) bool)
    """
    cfg = cfg or DecoderConfig()
    g = _graph(code)
    pvn_llr = np.atleast_2d(np.asarray(pvn_llr, dtype=np.float64))
    d1h_llr = np.asarray(d1h_llr, dtype=np.float64)
    if d1h_llr.ndim == 2:
        d1h_llr = d1h_llr[None]
    frames = pvn_llr.shape[0]
    if pvn_llr.shape[1] != g.n_total:
        raise ValueError(f"expected {g.n_total} variable-node LLRs per "
                         f"frame, got {pvn_llr.shape[1]}")

    hard_out = np.zeros((frames, g.n_total), dtype=np.uint8)
    iters_out = np.full(frames, cfg.max_iters, dtype=np.int64)
    conv_out = np.zeros(frames, dtype=bool)

    active = np.arange(frames)
    c2v = np.zeros((frames, g.var.size))
    for it in range(1, cfg.max_iters + 1):
        v2c, _ = vn_pass(code, pvn_llr[active], c2v)
        c2v = cn_pass(code, v2c, d1h_llr[active])
        hard = (_app_llr(g, pvn_llr[active], c2v) < 0).astype(np.uint8)
        if it == cfg.max_iters:
            conv_out[active] = _spc_ok(g, hard)
            iters_out[active] = it
            hard_out[active] = hard
            break
        if cfg.early_stop:
            done = _spc_ok(g, hard)
            if done.any():
                idx = active[done]
                conv_out[idx] = True
                iters_out[idx] = it
                hard_out[idx] = hard[done]
                active = active[~done]
                c2v = c2v[~done]
                if active.size == 0:
                    break
    return hard_out, iters_out, conv_out


def decode(code: QcCode, pvn_llr: np.ndarray, d1h_llr: np.ndarray,
           cfg: DecoderConfig | None = None) -> DecodeOutcome:
    """Single-frame convenience wrapper over decode_many."""
    hard, iters, conv = decode_many(code, pvn_llr[None], d1h_llr[None], cfg)
    return DecodeOutcome(hard[0], int(iters[0]), bool(conv[0]))
