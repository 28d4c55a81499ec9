"""Protograph EXIT analysis with a Monte-Carlo check-node transfer.

The variable-node side uses the usual Gaussian-approximation machinery:
J maps the standard deviation of a consistent Gaussian LLR (mean sigma^2/2,
variance sigma^2) to its mutual information with the bit, and J-inverse
goes back.  No closed form exists for the symbol-MAP Hadamard check
node, so its per-position extrinsic MI is measured by decoding w
synthetic codewords per protomatrix row and integrating the mutual
information of the empirical extrinsic-LLR densities, binned per
conditioned bit value.

Threshold search walks Eb/N0 downward in 0.01 dB steps from the start
point while the iteration still drives every a-posteriori MI to one,
with a hard floor at -1.59 dB.  Each protomatrix row keeps a fixed MC
seed for the whole descent so sampling noise cannot flip the verdict
between neighboring steps, and MC inputs are quantized to 1e-3 so
results are reproducible no matter how the row evaluations are
scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .hadamard import encode_nonsystematic, encode_systematic, info_positions, \
    symbol_map_decode_even, symbol_map_decode_odd
from .protograph import InfeasibleError, Protomatrix, ProtoConstraints, \
    PunctureSpec, code_rate, validate

# MI <-> sigma curve fit, valid boundaries of the two polynomial pieces
J_SIGMA_STAR = 1.6363
J_I_STAR = 0.3646
_A1, _B1, _C1 = -0.0421061, 0.209252, -0.00640081
_A2, _B2, _C2, _D2 = 0.00181491, -0.142675, -0.0822054, 0.0549608
_AP1, _BP1, _CP1 = 1.09542, 0.214217, 2.33727
_AP2, _BP2, _CP2 = 0.706692, 0.386013, -1.75017

# "all-ones" convergence test threshold and the cap applied before
# inverting MI values that may have saturated to exactly 1
CONVERGED_EPS = 1e-4
_MI_CAP = 1.0 - 1e-12
_MI_QUANTUM_DECIMALS = 3

# bins for the empirical extrinsic-LLR densities; threshold estimates
# track the published measurement procedure at this resolution
MI_HIST_BINS = 118


def j_fun(sigma):
    """Mutual information of a consistent Gaussian LLR with deviation sigma.

    Piecewise cubic fit; exactly 1 for sigma >= 10.  Accepts scalars or
    arrays; raises on negative input.
    """
    s = np.asarray(sigma, dtype=np.float64)
    if (s < 0).any():
        raise ValueError("sigma must be non-negative")
    low = _A1 * s**3 + _B1 * s**2 + _C1 * s
    with np.errstate(over="ignore"):
        high = 1.0 - np.exp(_A2 * s**3 + _B2 * s**2 + _C2 * s + _D2)
    out = np.where(s <= J_SIGMA_STAR, low, np.where(s < 10.0, high, 1.0))
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.isscalar(sigma) else out


def j_inv(i):
    """Inverse of j_fun on [0, 1); raises outside that domain."""
    x = np.asarray(i, dtype=np.float64)
    if (x < 0).any() or (x >= 1).any():
        raise ValueError("MI must lie in [0, 1)")
    low = _AP1 * x**2 + _BP1 * x + _CP1 * np.sqrt(x)
    with np.errstate(divide="ignore"):
        high = -_AP2 * np.log(_BP2 * (1.0 - x)) - _CP2 * x
    out = np.where(x <= J_I_STAR, low, high)
    return float(out) if np.isscalar(i) else out


def _jinv_sq(i):
    """j_inv squared with saturated values capped just below 1."""
    return j_inv(np.minimum(i, _MI_CAP)) ** 2


def sigma_lch(rate: float, ebn0_db: float) -> float:
    """LLR standard deviation of a BPSK AWGN channel at the given Eb/N0.

    sigma^2 = 8 * R * 10^(Eb/N0 / 10); every transmitted bit sees this
    channel, punctured bits see none.
    """
    if not 0 < rate < 1:
        raise ValueError(f"rate must be in (0, 1), got {rate}")
    return float(np.sqrt(8.0 * rate * 10.0 ** (ebn0_db / 10.0)))


def _sigma_by_column(proto: Protomatrix, s_lch: float,
                     punct: PunctureSpec | None) -> np.ndarray:
    sig = np.full(proto.n, s_lch)
    if punct is not None and punct.pvn_columns:
        sig[list(punct.pvn_columns)] = 0.0
    return sig


def vn_update(proto: Protomatrix, i_av: np.ndarray, s_lch: float,
              punct: PunctureSpec | None = None) -> np.ndarray:
    """Per-edge extrinsic MI leaving the bit nodes.

    For each connected (i, j) pair the outgoing deviation combines every
    incoming check message except one copy of its own, plus the channel:
    sum_s b[s][j]*jinv(I_av(s,j))^2 - jinv(I_av(i,j))^2 + sigma_j^2.
    Entries with b[i][j] = 0 stay 0, punctured columns get sigma_j = 0.
    """
    b = proto.b
    jsq = np.where(b > 0, _jinv_sq(np.clip(i_av, 0.0, 1.0)), 0.0)
    per_col = (b * jsq).sum(axis=0) + _sigma_by_column(proto, s_lch, punct) ** 2
    arg = np.maximum(per_col[None, :] - jsq, 0.0)
    return np.where(b > 0, j_fun(np.sqrt(arg)), 0.0)


def expand_to_ah(proto: Protomatrix, i_ev: np.ndarray) -> np.ndarray:
    """Spread the m x n per-edge MI matrix to m x d edge-slot order:
    row i repeats I_ev(i, j) b[i][j] times, ascending j, zeros dropped."""
    d = proto.d
    rows = [np.repeat(i_ev[i], proto.b[i]) for i in range(proto.m)]
    out = np.stack(rows)
    if out.shape[1] != d:
        raise ValueError(f"expected {d} edge slots per row, got {out.shape[1]}")
    return out


def contract_to_av(proto: Protomatrix, i_eh: np.ndarray) -> np.ndarray:
    """Inverse layout of expand_to_ah: average each run of b[i][j]
    edge-slot values back onto the (i, j) entry."""
    out = np.zeros((proto.m, proto.n))
    for i in range(proto.m):
        ends = np.cumsum(proto.b[i])
        starts = ends - proto.b[i]
        for j in np.nonzero(proto.b[i])[0]:
            out[i, j] = i_eh[i, starts[j]:ends[j]].mean()
    return out


def i_app(proto: Protomatrix, i_av: np.ndarray, s_lch: float,
          punct: PunctureSpec | None = None) -> np.ndarray:
    """A-posteriori MI per protograph column: all check messages plus
    the channel, no exclusion."""
    b = proto.b
    jsq = np.where(b > 0, _jinv_sq(np.clip(i_av, 0.0, 1.0)), 0.0)
    total = (b * jsq).sum(axis=0) + _sigma_by_column(proto, s_lch, punct) ** 2
    return j_fun(np.sqrt(total))


# ── Monte-Carlo check-node transfer ──────────────────────────────────

def _d1h_positions(r: int, n_h: int) -> np.ndarray:
    """Codeword positions transmitted as degree-1 parity bits.

    Even r: everything except the r+2 systematic positions.  Odd r:
    everything except positions 0 and 2^r - 1 (those duplicate bit-node
    values), minus the n_h highest punctured positions 2^(k-1).
    """
    q = 1 << r
    keep = np.ones(q, dtype=bool)
    if r % 2 == 0:
        keep[info_positions(r)] = False
    else:
        keep[[0, q - 1]] = False
        for k in range(r - n_h + 1, r + 1):
            keep[1 << (k - 1)] = False
    return np.nonzero(keep)[0]


def _mi_binned(bits: np.ndarray, ext: np.ndarray,
               bins: int = MI_HIST_BINS) -> float:
    """Mutual information between a bit and its extrinsic LLR from the
    empirical conditional densities over a common grid of bins."""
    lo, hi = ext.min(), ext.max()
    if not lo < hi:
        return 0.0
    edges = np.linspace(lo, hi, bins + 1)
    p0, _ = np.histogram(ext[bits == 0], edges)
    p1, _ = np.histogram(ext[bits == 1], edges)
    p0 = p0 / max(p0.sum(), 1)
    p1 = p1 / max(p1.sum(), 1)
    mix = 0.5 * (p0 + p1)
    mi = 0.0
    for p in (p0, p1):
        nz = p > 0
        mi += 0.5 * float(np.sum(p[nz] * np.log2(p[nz] / mix[nz])))
    return min(max(mi, 0.0), 1.0)


def hadamard_mi_mc(i_ah_row: np.ndarray, sigma_ch: float, r: int,
                   n_h: int = 0, w: int = 10000, seed: int = 0) -> np.ndarray:
    """Measured extrinsic MI of the symbol-MAP decoder, one value per
    information bit.

    Draws w random even-parity words, encodes them, synthesizes
    consistent Gaussian a-priori LLRs (deviation j_inv of the requested
    MI, matched to each bit's value) and channel LLRs for the
    transmitted parity positions, decodes, and integrates the MI of the
    empirical extrinsic densities conditioned on the bit value.  Pure
    function of its arguments; the draw order (word bits, a-priori
    noise, channel noise) is fixed.
    """
    d = r + 2
    i_ah_row = np.asarray(i_ah_row, dtype=np.float64)
    if i_ah_row.shape != (d,):
        raise ValueError(f"expected {d} a-priori MI values, got {i_ah_row.shape}")
    rng = np.random.default_rng(seed)
    u = rng.integers(0, 2, size=(w, d), dtype=np.int64)
    u[:, -1] = u[:, :-1].sum(axis=1) % 2
    sig_mu = j_inv(np.clip(i_ah_row, 0.0, _MI_CAP))
    apr = (1 - 2 * u) * (sig_mu**2 / 2) + sig_mu * rng.standard_normal((w, d))
    q = 1 << r
    pos = _d1h_positions(r, n_h)
    ch = np.zeros((w, q))
    encode = encode_systematic if r % 2 == 0 else encode_nonsystematic
    cw_sign = 1 - 2 * encode(u, r)[:, pos].astype(np.int64)
    ch[:, pos] = (cw_sign * (sigma_ch**2 / 2)
                  + sigma_ch * rng.standard_normal((w, pos.size)))
    if r % 2 == 0:
        apr_q = np.zeros((w, q))
        apr_q[:, info_positions(r)] = apr
        ext = symbol_map_decode_even(apr_q, ch).ext
    else:
        ext = symbol_map_decode_odd(apr, ch).ext
    return np.array([_mi_binned(u[:, k], ext[:, k]) for k in range(d)])


_MC_CACHE: dict = {}


def clear_mc_cache() -> None:
    _MC_CACHE.clear()


def _mc_row_cached(i_ah_row: np.ndarray, sigma_ch: float, r: int, n_h: int,
                   w: int, seed_key: tuple) -> np.ndarray:
    key = (tuple(i_ah_row), float(sigma_ch), r, n_h, w, seed_key)
    hit = _MC_CACHE.get(key)
    if hit is None:
        hit = hadamard_mi_mc(i_ah_row, sigma_ch, r, n_h, w,
                             seed=list(seed_key))
        _MC_CACHE[key] = hit
    return hit


# ── convergence iteration and threshold search ───────────────────────

@dataclass
class ConvergenceResult:
    converged: bool
    iterations: int
    trace: list[float]   # min-over-columns a-posteriori MI per iteration


def pexit_converges(proto: Protomatrix, ebn0_db: float,
                    punct: PunctureSpec | None = None, max_iters: int = 300,
                    w: int = 10000, seed: int = 0,
                    workers: int = 1) -> ConvergenceResult:
    """Iterate the MI exchange at one Eb/N0 until every column's
    a-posteriori MI reaches 1 - CONVERGED_EPS or the budget runs out.

    Per-row MC seeds derive from (seed, row) only, and MC inputs are
    quantized, so the result is independent of worker scheduling and
    identical across repeated calls.
    """
    rate = float(code_rate(proto, punct))
    s_lch = sigma_lch(rate, ebn0_db)
    n_h = punct.d1h_per_hcn if punct is not None else 0
    r = proto.r
    m = proto.m
    seed_keys = [(int(seed), row) for row in range(m)]

    def mc_all(i_ah_q):
        args = [(i_ah_q[i], s_lch, r, n_h, w, seed_keys[i]) for i in range(m)]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return np.stack(list(pool.map(lambda a: _mc_row_cached(*a), args)))
        return np.stack([_mc_row_cached(*a) for a in args])

    i_av = np.zeros((proto.m, proto.n))
    trace = []
    for it in range(1, max_iters + 1):
        i_ev = vn_update(proto, i_av, s_lch, punct)
        i_ah = np.round(expand_to_ah(proto, i_ev), _MI_QUANTUM_DECIMALS)
        i_eh = mc_all(i_ah)
        i_av = contract_to_av(proto, i_eh)
        app = i_app(proto, i_av, s_lch, punct)
        trace.append(float(app.min()))
        if (app >= 1.0 - CONVERGED_EPS).all():
            return ConvergenceResult(True, it, trace)
    return ConvergenceResult(False, max_iters, trace)


@dataclass
class ThresholdQuery:
    proto: Protomatrix
    punct: PunctureSpec | None = None
    start_db: float = -1.40
    floor_db: float = -1.59
    step_db: float = 0.01
    max_inner_iters: int = 300
    mc_samples: int = 10000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.step_db <= 0:
            raise ValueError("step must be positive")
        if self.floor_db < -1.59:
            raise ValueError("floor below -1.59 dB is meaningless on this channel")


@dataclass
class StepRecord:
    ebn0_db: float
    converged: bool
    iterations: int
    min_i_app: float


@dataclass
class ThresholdResult:
    """threshold_db is the lowest Eb/N0 that still converged, or None
    when even the start point failed ("above start")."""
    threshold_db: float | None
    steps: list[StepRecord] = field(default_factory=list)


def threshold_search(query: ThresholdQuery) -> ThresholdResult:
    """Descend from start_db in step_db decrements while the MI
    iteration still converges; stop at the first failure or the floor."""
    steps = []
    threshold = None
    k = 0
    while True:
        db = round(query.start_db - k * query.step_db, 6)
        if db < query.floor_db - 1e-9:
            break
        res = pexit_converges(query.proto, db, query.punct,
                              query.max_inner_iters, query.mc_samples,
                              query.seed, query.workers)
        steps.append(StepRecord(db, res.converged, res.iterations,
                                res.trace[-1] if res.trace else 0.0))
        if not res.converged:
            break
        threshold = db
        k += 1
    return ThresholdResult(threshold_db=threshold, steps=steps)


def format_report(result: ThresholdResult) -> str:
    """Comma-separated analysis report, one record per Eb/N0 step."""
    lines = ["ebn0_db,converged,iterations,min_i_app"]
    for s in result.steps:
        lines.append(f"{s.ebn0_db:.2f},{int(s.converged)},{s.iterations},"
                     f"{s.min_i_app:.6f}")
    return "\n".join(lines) + "\n"


# ── constrained random protomatrix sampling ──────────────────────────

def random_protomatrix(m: int, n: int, r: int, constraints: ProtoConstraints,
                       seed: int, max_attempts: int = 2000) -> Protomatrix:
    """Sample a protomatrix meeting the constraints by placing each
    row's weight unit by unit into admissible columns.

    Raises InfeasibleError when the constraints cannot be met (fast
    arithmetic checks first, then bounded rejection sampling).
    """
    d = constraints.row_weight
    if d > n * constraints.max_entry:
        raise InfeasibleError(
            f"row weight {d} cannot fit in {n} columns with entries "
            f"<= {constraints.max_entry}")
    if m * d > n * constraints.col_weight_max:
        raise InfeasibleError("total edge count exceeds column capacity")
    if m * d < n * constraints.col_weight_min:
        raise InfeasibleError("total edge count cannot reach column minimum")
    rng = np.random.default_rng([seed])
    for _ in range(max_attempts):
        b = np.zeros((m, n), dtype=np.int64)
        col = np.zeros(n, dtype=np.int64)
        dead = False
        for i in range(m):
            for _ in range(d):
                ok = np.nonzero((b[i] < constraints.max_entry)
                                & (col < constraints.col_weight_max))[0]
                if ok.size == 0:
                    dead = True
                    break
                j = int(rng.choice(ok))
                b[i, j] += 1
                col[j] += 1
            if dead:
                break
        if dead or (col < constraints.col_weight_min).any():
            continue
        proto = Protomatrix(b, r)
        if not validate(proto, constraints):
            return proto
    raise InfeasibleError(
        f"no admissible protomatrix found in {max_attempts} attempts")
