"""All-zero-codeword AWGN evaluation of lifted codes.

Frames are generated, decoded and scored in fixed-size chunks whose
noise comes from counter-based generators keyed by (seed, frame index),
so any sharding of the work reproduces the byte-identical statistics of
a sequential run: workers may decode chunks speculatively, but results
are merged in frame order and the stop rule is evaluated at each chunk
boundary exactly as a single worker would.

A frame error is a frame that fails to converge or shows any hard bit
error among the k information positions; bit errors are counted over
those k positions only.
"""

from __future__ import annotations

import configparser
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .decoder import DecoderConfig, decode_many, _graph
from .pexit import _d1h_positions
from .protograph import PunctureSpec, QcCode

CHUNK_FRAMES = 64


@dataclass(frozen=True)
class ChannelPoint:
    """One Eb/N0 operating point for unit-energy BPSK.

    sigma_ch is the noise deviation per dimension; the channel LLR
    2y/sigma^2 of an all-plus-one transmission then has mean 2/sigma^2
    and deviation 2/sigma, the usual consistent-Gaussian pair.
    """
    ebn0_db: float
    sigma_ch: float

    def __post_init__(self):
        if self.sigma_ch <= 0:
            raise ValueError("sigma_ch must be positive")


def channel_point(rate: float, ebn0_db: float) -> ChannelPoint:
    if not 0 < rate < 1:
        raise ValueError(f"rate must be in (0, 1), got {rate}")
    sigma = float(np.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))))
    return ChannelPoint(ebn0_db, sigma)


@dataclass
class StopRule:
    max_frame_errors: int = 100
    max_frames: int = 10_000_000

    def __post_init__(self):
        if self.max_frame_errors < 1 or self.max_frames < 1:
            raise ValueError("stop rule bounds must be positive")


@dataclass
class SimStats:
    frames: int = 0
    bit_errors: int = 0
    frame_errors: int = 0
    iterations_total: int = 0

    def merged(self, other: "SimStats") -> "SimStats":
        return SimStats(self.frames + other.frames,
                        self.bit_errors + other.bit_errors,
                        self.frame_errors + other.frame_errors,
                        self.iterations_total + other.iterations_total)

    def ber(self, k: int) -> float:
        return self.bit_errors / (self.frames * k) if self.frames else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def avg_iters(self) -> float:
        return self.iterations_total / self.frames if self.frames else 0.0


def info_bit_count(code: QcCode) -> int:
    """k = z1 z2 (n - m); bit errors are scored on the first k
    variable-node positions."""
    return code.z1 * code.z2 * (code.n - code.m)


def _parity_counts(code: QcCode, punct: PunctureSpec | None) -> np.ndarray:
    n_h = punct.d1h_per_hcn if punct is not None else 0
    return _d1h_positions(code.r, n_h)


def transmit_all_zero(code: QcCode, point: ChannelPoint,
                      punct: PunctureSpec | None = None, seed: int = 0,
                      frames: int = 1, first_frame: int = 0):
    """Channel LLRs for all-zero transmitted frames.

    Every transmitted position sees y ~ Normal(+1, sigma^2) and emits
    2y/sigma^2; punctured variable-node columns (and withheld parity
    positions) emit nothing.  Frame f draws from a counter-based
    generator keyed by (seed, first_frame + f), independent of how
    frames are grouped into calls.

    Returns (pvn_llr (frames, N_pvn), d1h_llr (frames, M, g)).
    """
    n_total = code.N_pvn
    m_total = code.M
    g = _parity_counts(code, punct).size
    scale = 2.0 / point.sigma_ch**2
    pvn = np.empty((frames, n_total))
    d1h = np.empty((frames, m_total, g))
    for f in range(frames):
        rng = np.random.Generator(
            np.random.Philox(key=[seed, first_frame + f]))
        pvn[f] = scale * (1.0 + point.sigma_ch * rng.standard_normal(n_total))
        d1h[f] = scale * (1.0 + point.sigma_ch
                          * rng.standard_normal((m_total, g)))
    if punct is not None and punct.pvn_columns:
        span = code.z1 * code.z2
        for j in punct.pvn_columns:
            pvn[:, j * span:(j + 1) * span] = 0.0
    return pvn, d1h


def _assert_early_stop(code: QcCode, hard: np.ndarray,
                       conv: np.ndarray) -> None:
    """Converged frames must satisfy every check's parity identity."""
    g = _graph(code)
    parity = hard[..., g.var_by_cn].sum(axis=-1) & 1
    ok = (parity == 0).all(axis=-1)
    if bool((conv & ~ok).any()):
        raise AssertionError(
            "early-stop violation: a converged frame fails a parity check")


def run_point(code: QcCode, point: ChannelPoint,
              punct: PunctureSpec | None = None,
              cfg: DecoderConfig | None = None,
              stop: StopRule | None = None, seed: int = 0,
              workers: int = 1) -> SimStats:
    """Decode all-zero frames at one operating point until the stop
    rule trips at a chunk boundary.

    The frame sequence, chunking and stop decisions are fixed by
    (seed, stop) alone; worker count only changes how many chunks are
    decoded speculatively past the stopping prefix.
    """
    cfg = cfg or DecoderConfig()
    stop = stop or StopRule()
    k = info_bit_count(code)

    def run_chunk(index: int) -> SimStats:
        f0 = index * CHUNK_FRAMES
        count = min(CHUNK_FRAMES, stop.max_frames - f0)
        if count <= 0:
            # speculative chunk past the frame budget
            return SimStats()
        pvn, d1h = transmit_all_zero(code, point, punct, seed,
                                     frames=count, first_frame=f0)
        hard, iters, conv = decode_many(code, pvn, d1h, cfg)
        _assert_early_stop(code, hard, conv)
        info = hard[:, :k]
        frame_err = (info.any(axis=1)) | ~conv
        return SimStats(count, int(info.sum()), int(frame_err.sum()),
                        int(iters.sum()))

    total = SimStats()

    def stop_now() -> bool:
        return (total.frame_errors >= stop.max_frame_errors
                or total.frames >= stop.max_frames)

    next_chunk = 0
    if workers <= 1:
        while not stop_now():
            total = total.merged(run_chunk(next_chunk))
            next_chunk += 1
        return total
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while not stop_now():
            batch = list(pool.map(run_chunk,
                                  range(next_chunk, next_chunk + workers)))
            for part in batch:
                total = total.merged(part)
                next_chunk += 1
                if stop_now():
                    break
    return total


def emit_results(rows, k: int) -> str:
    """Comma-separated table of per-point statistics, ordered by Eb/N0.

    rows: iterable of (ebn0_db, SimStats).
    """
    lines = ["ebn0_db,frames,ber,fer,avg_iters"]
    for db, st in sorted(rows, key=lambda t: t[0]):
        lines.append(f"{db:.2f},{st.frames},{st.ber(k):.6e},"
                     f"{st.fer:.6e},{st.avg_iters:.2f}")
    return "\n".join(lines) + "\n"


# ── campaign files ───────────────────────────────────────────────────

@dataclass
class Campaign:
    proto: Path
    z1: int
    z2: int
    ebn0_db: tuple[float, ...]
    seed: int
    frame_errors: int = 100
    max_frames: int = 10_000_000
    max_iters: int = 300
    puncture_cols: tuple[int, ...] = ()
    puncture_d1h: int = 0
    workers: int = 1
    out: Path | None = None


def load_campaign(path) -> Campaign:
    """Read a key-value campaign description.

    Required keys in a [campaign] section: proto, z1, z2, ebn0_db
    (comma-separated), seed.  Optional: frame_errors, max_frames,
    max_iters, puncture_cols, puncture_d1h, workers, out.  Relative
    paths resolve against the campaign file's directory.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"cannot read campaign file {path}")
    if "campaign" not in parser:
        raise ValueError(f"{path}: missing [campaign] section")
    sec = parser["campaign"]
    base = Path(path).parent
    try:
        proto = base / sec["proto"]
        ebn0 = tuple(float(tok) for tok in sec["ebn0_db"].split(",") if tok.strip())
        camp = Campaign(
            proto=proto,
            z1=sec.getint("z1"),
            z2=sec.getint("z2"),
            ebn0_db=ebn0,
            seed=sec.getint("seed"),
            frame_errors=sec.getint("frame_errors", fallback=100),
            max_frames=sec.getint("max_frames", fallback=10_000_000),
            max_iters=sec.getint("max_iters", fallback=300),
            puncture_cols=tuple(
                int(tok) for tok in sec.get("puncture_cols", "").split(",")
                if tok.strip()),
            puncture_d1h=sec.getint("puncture_d1h", fallback=0),
            workers=sec.getint("workers", fallback=1),
            out=(base / sec["out"]) if sec.get("out") else None,
        )
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from exc
    if not camp.ebn0_db:
        raise ValueError(f"{path}: ebn0_db must list at least one point")
    return camp
