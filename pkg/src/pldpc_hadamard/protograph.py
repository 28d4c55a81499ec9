"""Protograph handling and quasi-cyclic code construction.

A protomatrix B (m x n, small non-negative integers) describes a
bipartite multigraph: n variable classes, m check classes, entry b[i][j]
parallel edges.  Each check row of weight d acts as a Hadamard-codeword
constraint of order r = d - 2 on its incident bits.  The full code is
obtained by lifting twice: a z1-fold lift that spreads each entry into
distinct permutation blocks (removing parallel edges), then a z2-fold
lift that turns every remaining 1 into a circulant permutation matrix
(CPM).  Both steps are guided by a progressive-edge-growth heuristic
that tries to keep the shortest cycle long.

CPM convention: shift s means the z2 x z2 identity cyclically
left-shifted by s columns, i.e. row t has its 1 in column (t - s) mod z2.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

PEG_LOOKAHEAD = 8      # cycle search horizon: cycles up to length 2*PEG_LOOKAHEAD
_STEP1_ATTEMPTS = 20   # PEG restarts before the structured fallback


class ParseError(ValueError):
    """Malformed protomatrix or CPM table text; carries a 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InfeasibleError(ValueError):
    """Requested construction cannot exist for the given parameters."""


@dataclass(eq=False)
class Protomatrix:
    """Base matrix plus the Hadamard order its check rows decode with."""
    b: np.ndarray
    r: int

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=np.int64)
        if self.b.ndim != 2 or self.b.size == 0:
            raise ValueError("protomatrix must be a non-empty 2-D array")
        if (self.b < 0).any():
            raise ValueError("protomatrix entries must be non-negative")
        if self.r < 1:
            raise ValueError(f"Hadamard order must be positive, got {self.r}")

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def n(self) -> int:
        return self.b.shape[1]

    @property
    def d(self) -> int:
        """Uniform row weight; raises if rows disagree."""
        weights = self.b.sum(axis=1)
        if not (weights == weights[0]).all():
            raise ValueError(f"row weights are not uniform: {weights.tolist()}")
        return int(weights[0])

    def __eq__(self, other):
        return (isinstance(other, Protomatrix) and self.r == other.r
                and np.array_equal(self.b, other.b))


@dataclass(frozen=True)
class PunctureSpec:
    """Bits withheld from transmission.

    pvn_columns: protograph column indices whose P-VNs are punctured
        (n_p = len).  d1h_per_hcn: number n_h of Hadamard parity bits
        punctured per check, taken from positions 2^(k-1) for
        k = r-n_h+1 .. r; only meaningful for odd r.
    """
    pvn_columns: tuple[int, ...] = ()
    d1h_per_hcn: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pvn_columns", tuple(sorted(set(self.pvn_columns))))
        if self.d1h_per_hcn < 0:
            raise ValueError("punctured parity count cannot be negative")

    @property
    def n_p(self) -> int:
        return len(self.pvn_columns)


@dataclass(frozen=True)
class ProtoConstraints:
    """Search-space constraints: fixed row weight, column weight range,
    and the largest entry allowed."""
    row_weight: int
    col_weight_min: int = 1
    col_weight_max: int = 10**9
    max_entry: int = 10**9


@dataclass
class QcCode:
    """Quasi-cyclic code: the z1-lifted block matrix with one CPM shift
    per nonzero block.

    blocks holds (block_row, block_col, shift) triples sorted by row
    then column; block_row < m*z1, block_col < n*z1, 0 <= shift < z2.
    Expanded size: M = m*z1*z2 checks, N_pvn = n*z1*z2 bit nodes.
    """
    m: int
    n: int
    z1: int
    z2: int
    r: int
    blocks: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def M(self) -> int:
        return self.m * self.z1 * self.z2

    @property
    def N_pvn(self) -> int:
        return self.n * self.z1 * self.z2

    @property
    def d(self) -> int:
        """Nonzero blocks per block row; raises if rows disagree."""
        counts = np.zeros(self.m * self.z1, dtype=int)
        for br, _, _ in self.blocks:
            counts[br] += 1
        if not (counts == counts[0]).all():
            raise ValueError("block rows do not share a common degree")
        return int(counts[0])


def validate(proto: Protomatrix, constraints: ProtoConstraints) -> list[str]:
    """Check a protomatrix against construction constraints.

    Returns a list of human-readable violations, empty when the matrix
    conforms.  Never raises: a search loop wants the full report.
    """
    found = []
    b = proto.b
    for i, w in enumerate(b.sum(axis=1)):
        if w != constraints.row_weight:
            found.append(f"row {i}: weight {w} != {constraints.row_weight}")
    for j, w in enumerate(b.sum(axis=0)):
        if not constraints.col_weight_min <= w <= constraints.col_weight_max:
            found.append(
                f"column {j}: weight {w} outside "
                f"[{constraints.col_weight_min}, {constraints.col_weight_max}]")
    for i, j in zip(*np.nonzero(b > constraints.max_entry)):
        found.append(f"entry ({i}, {j}): value {b[i, j]} > {constraints.max_entry}")
    return found


def _check_puncture(proto: Protomatrix, punct: PunctureSpec) -> PunctureSpec:
    if punct is None:
        return PunctureSpec()
    if punct.n_p >= proto.n:
        raise InfeasibleError(
            f"cannot puncture {punct.n_p} of {proto.n} bit-node columns")
    if any(c < 0 or c >= proto.n for c in punct.pvn_columns):
        raise InfeasibleError(f"puncture column out of range: {punct.pvn_columns}")
    if punct.d1h_per_hcn > proto.r:
        raise InfeasibleError(
            f"cannot puncture {punct.d1h_per_hcn} parity bits at order {proto.r}")
    if punct.d1h_per_hcn > 0 and proto.r % 2 == 0:
        raise InfeasibleError(
            "per-check parity puncturing applies to odd orders only")
    return punct


def code_rate_terms(proto: Protomatrix,
                    punct: PunctureSpec | None = None) -> tuple[int, int]:
    """Unreduced (numerator, denominator) of the code rate: (n - m) over
    the transmitted-bits-per-protograph-copy count.

    Even r:  (n - m) / (m*(2^(d-2) - d) + n - n_p)
    Odd r:   (n - m) / (m*(2^(d-2) - 2 - n_h) + n - n_p)

    Raises:
        ValueError: non-uniform row weight or d != r + 2.
        InfeasibleError: puncture spec illegal for this matrix.
    """
    d = proto.d
    if d != proto.r + 2:
        raise ValueError(f"row weight {d} inconsistent with order {proto.r}")
    punct = _check_puncture(proto, punct)
    m, n = proto.m, proto.n
    q = 1 << proto.r
    if proto.r % 2 == 0:
        denom = m * (q - d) + n - punct.n_p
    else:
        denom = m * (q - 2 - punct.d1h_per_hcn) + n - punct.n_p
    return n - m, denom


def code_rate(proto: Protomatrix, punct: PunctureSpec | None = None) -> Fraction:
    """Exact code rate of the lifted code (independent of z1, z2).

    See code_rate_terms for the formulas and error conditions.
    """
    return Fraction(*code_rate_terms(proto, punct))


@dataclass(frozen=True)
class CodeGeometry:
    rate: Fraction
    k: int
    n_total: int


def geometry(proto: Protomatrix, z1: int, z2: int,
             punct: PunctureSpec | None = None) -> CodeGeometry:
    """Information length and transmitted length of the lifted code.

    k = z1*z2*(n - m); N_total = k / rate, which expands to
    z1*z2*(m*(2^(d-2) - d) + n - n_p) for even r and
    z1*z2*(m*(2^(d-2) - 2 - n_h) + n - n_p) for odd r.
    """
    rate = code_rate(proto, punct)
    k = z1 * z2 * (proto.n - proto.m)
    n_total = Fraction(k, 1) / rate
    assert n_total.denominator == 1
    return CodeGeometry(rate=rate, k=k, n_total=int(n_total))


# ── protomatrix text format ──────────────────────────────────────────
# First line "m n r", then m lines of n integers.

def parse_protomatrix(text: str) -> Protomatrix:
    lines = text.splitlines()
    rows = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if not rows:
        raise ParseError("empty protomatrix file", 1)
    lineno, header = rows[0]
    parts = header.split()
    if len(parts) != 3:
        raise ParseError(f"header must be 'm n r', got {header!r}", lineno)
    try:
        m, n, r = (int(p) for p in parts)
    except ValueError:
        raise ParseError(f"non-integer header field in {header!r}", lineno) from None
    if m < 1 or n < 1 or r < 1:
        raise ParseError(f"header values must be positive: {header!r}", lineno)
    if len(rows) - 1 != m:
        raise ParseError(f"expected {m} matrix rows, found {len(rows) - 1}", lineno)
    b = np.zeros((m, n), dtype=np.int64)
    for i, (lineno, ln) in enumerate(rows[1:]):
        fields = ln.split()
        if len(fields) != n:
            raise ParseError(f"expected {n} entries, found {len(fields)}", lineno)
        try:
            b[i] = [int(f) for f in fields]
        except ValueError:
            raise ParseError(f"non-integer entry in {ln!r}", lineno) from None
        if (b[i] < 0).any():
            raise ParseError("negative entry", lineno)
    return Protomatrix(b=b, r=r)


def serialize_protomatrix(proto: Protomatrix) -> str:
    lines = [f"{proto.m} {proto.n} {proto.r}"]
    lines += [" ".join(str(x) for x in row) for row in proto.b]
    return "\n".join(lines) + "\n"


def load_protomatrix(path) -> Protomatrix:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_protomatrix(fh.read())


# ── two-step lifting ─────────────────────────────────────────────────

def _bfs_distances(adj_var, adj_chk, start_var: int, n_chk: int) -> np.ndarray:
    """Hop counts from one bit node to every check node; -1 if unreached."""
    dist = np.full(n_chk, -1, dtype=np.int64)
    seen_var = {start_var}
    var_front = [start_var]
    level = 0
    while var_front:
        chk_front = []
        for v in var_front:
            for c in adj_var[v]:
                if dist[c] < 0:
                    dist[c] = level + 1
                    chk_front.append(c)
        var_front = []
        for c in chk_front:
            for v in adj_chk[c]:
                if v not in seen_var:
                    seen_var.add(v)
                    var_front.append(v)
        level += 2
    return dist


def _peg_spread(b: np.ndarray, z1: int, rng) -> list[tuple[int, int]] | None:
    """First lifting step: place each entry's parallel edges on distinct
    row copies, one bit-node copy at a time, preferring distant and
    lightly-loaded checks.  Returns edges as (check_copy, var_copy) in
    placement order, or None when a capacity dead end is hit.
    """
    m, n = b.shape
    n_chk = m * z1
    adj_var = [[] for _ in range(n * z1)]
    adj_chk = [[] for _ in range(n_chk)]
    # residual[t, j]: edges check copy t may still take from base column j
    residual = np.repeat(b, z1, axis=0).copy()
    edges = []
    for j in range(n):
        for c in range(z1):
            v = j * z1 + c
            for i in np.nonzero(b[:, j])[0]:
                for _ in range(b[i, j]):
                    cands = [t for t in range(i * z1, (i + 1) * z1)
                             if residual[t, j] > 0 and v not in adj_chk[t]]
                    if not cands:
                        return None
                    dist = _bfs_distances(adj_var, adj_chk, v, n_chk)
                    far = np.where(dist < 0, np.iinfo(np.int64).max, dist)
                    best = max((far[t], -len(adj_chk[t])) for t in cands)
                    pool = [t for t in cands
                            if (far[t], -len(adj_chk[t])) == best]
                    t = pool[rng.integers(len(pool))] if len(pool) > 1 else pool[0]
                    adj_var[v].append(t)
                    adj_chk[t].append(v)
                    residual[t, j] -= 1
                    edges.append((t, v))
    return edges


def _structured_spread(b: np.ndarray, z1: int) -> list[tuple[int, int]]:
    """Deterministic fallback: entry b[i][j] becomes b distinct cyclic
    shifts, which always yields non-overlapping permutations."""
    m, n = b.shape
    edges = []
    for j in range(n):
        for c in range(z1):
            v = j * z1 + c
            for i in range(m):
                off = (7 * i + 13 * j) % z1
                for k in range(b[i, j]):
                    t = i * z1 + (c + off + k) % z1
                    edges.append((t, v))
    return edges


def _rotl(mask: int, s: int, z2: int, full: int) -> int:
    s %= z2
    return ((mask << s) | (mask >> (z2 - s))) & full if s else mask


def _choose_shifts(edges: list[tuple[int, int]], n_chk: int, n_var: int,
                   z2: int, lookahead: int) -> list[int]:
    """Second lifting step: assign one CPM shift per edge, greedily
    maximizing the length of the shortest cycle the edge creates.

    Achievable alternating shift sums are tracked as z2-bit masks and
    pushed breadth-first from the edge's bit node; a path of 2t-1 hops
    reaching the edge's check with sum w closes a 2t cycle exactly when
    the new shift is in w's residue set.  Shifts surviving the longest
    prefix of those forbidden sets win, smallest value on ties.
    """
    full = (1 << z2) - 1
    adj_var = [[] for _ in range(n_var)]   # var  -> [(check, shift)]
    adj_chk = [[] for _ in range(n_chk)]   # check -> [(var, shift)]
    shifts = []
    for u, v in edges:
        var_masks = {v: 1}  # residue 0 at depth 0
        forbidden = []
        for _ in range(lookahead):
            chk_masks = {}
            for a, mask in var_masks.items():
                for cnode, s in adj_var[a]:
                    prev = chk_masks.get(cnode, 0)
                    chk_masks[cnode] = prev | _rotl(mask, s, z2, full)
            forbidden.append(chk_masks.get(u, 0))
            if not chk_masks:
                break
            var_masks = {}
            for cnode, mask in chk_masks.items():
                for a, s in adj_chk[cnode]:
                    prev = var_masks.get(a, 0)
                    var_masks[a] = prev | _rotl(mask, -s, z2, full)
        allowed = full
        for f in forbidden:
            nxt = allowed & ~f
            if nxt == 0:
                break
            allowed = nxt
        s = (allowed & -allowed).bit_length() - 1
        shifts.append(s)
        adj_var[v].append((u, s))
        adj_chk[u].append((v, s))
    return shifts


def lift_two_step(proto: Protomatrix, z1: int, z2: int, seed: int) -> QcCode:
    """Expand a protomatrix into a quasi-cyclic code.

    Step 1 lifts by z1, turning entry b[i][j] into b[i][j] distinct
    permutation blocks (so the result is 0/1); step 2 lifts by z2,
    replacing each 1 with a shifted identity.  Both placements use a
    progressive-edge-growth search; the whole construction is a pure
    function of (proto, z1, z2, seed).

    Raises:
        InfeasibleError: z1/z2 < 1, or an entry exceeds z1 (no set of
            that many non-overlapping permutations exists).
    """
    if z1 < 1 or z2 < 1:
        raise InfeasibleError(f"lifting factors must be >= 1, got {z1}, {z2}")
    if (proto.b > z1).any():
        worst = int(proto.b.max())
        raise InfeasibleError(
            f"entry {worst} exceeds z1 = {z1}; distinct permutations impossible")
    edges = None
    for attempt in range(_STEP1_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt])
        edges = _peg_spread(proto.b, z1, rng)
        if edges is not None:
            break
    if edges is None:
        edges = _structured_spread(proto.b, z1)
    shifts = _choose_shifts(edges, proto.m * z1, proto.n * z1, z2, PEG_LOOKAHEAD)
    blocks = sorted((u, v, s) for (u, v), s in zip(edges, shifts))
    return QcCode(m=proto.m, n=proto.n, z1=z1, z2=z2, r=proto.r, blocks=blocks)


def expand_edges(code: QcCode) -> tuple[np.ndarray, np.ndarray]:
    """Edge list of the expanded binary matrix as (check_ids, var_ids).

    Edges are grouped by expanded check row, ascending block column
    within the row; this is the edge-slot order every consumer of a
    QcCode shares.  Check t of block (br, bc, s) connects to bit
    (t - s) mod z2 of block column bc.
    """
    z2 = code.z2
    t = np.arange(z2)
    chk, var = [], []
    for br, bc, s in code.blocks:
        chk.append(br * z2 + t)
        var.append(bc * z2 + (t - s) % z2)
    if not chk:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    chk = np.concatenate(chk)
    var = np.concatenate(var)
    order = np.lexsort((var, chk))
    return chk[order], var[order]


def girth(code: QcCode, cap: int = 12) -> int | str:
    """Shortest cycle length in the expanded Tanner graph, or ">cap".

    Breadth-first search from one check per circulant orbit (cyclic
    z2-shifts map cycles to cycles, so these roots see every cycle).
    Levels run until any cycle of length <= cap would have been found.

    Args:
        cap: search horizon, at most 12.
    """
    if not 2 <= cap <= 12:
        raise ValueError(f"girth cap must be in [2, 12], got {cap}")
    chk, var = expand_edges(code)
    if chk.size == 0:
        return ">cap"
    n_chk, n_var = code.M, code.N_pvn
    # one undirected edge id per (check, var) incidence
    eid = np.arange(chk.size)
    # adjacency in CSR form for both sides
    chk_order = np.argsort(chk, kind="stable")
    chk_ptr = np.searchsorted(chk[chk_order], np.arange(n_chk + 1))
    var_order = np.argsort(var, kind="stable")
    var_ptr = np.searchsorted(var[var_order], np.arange(n_var + 1))

    def neighbors(side_order, side_ptr, nodes, other, ids):
        starts, stops = side_ptr[nodes], side_ptr[nodes + 1]
        counts = stops - starts
        take = np.repeat(starts, counts) + _ranges(counts)
        slots = side_order[take]
        return np.repeat(nodes, counts), other[slots], ids[slots]

    best = cap + 2
    max_level = cap // 2 + 1
    for root in range(0, n_chk, code.z2):
        dist_c = np.full(n_chk, -1, dtype=np.int64)
        dist_v = np.full(n_var, -1, dtype=np.int64)
        dist_c[root] = 0
        front = np.array([root])
        front_in = np.array([-1])
        on_chk = True
        found = 0
        for level in range(1, max_level + 1):
            if on_chk:
                src, dst, via = neighbors(chk_order, chk_ptr, front, var, eid)
                dist_near, dist_far = dist_c, dist_v
            else:
                src, dst, via = neighbors(var_order, var_ptr, front, chk, eid)
                dist_near, dist_far = dist_v, dist_c
            # drop the tree edge each frontier node arrived on
            keep = via != np.repeat(front_in, chk_ptr[front + 1] - chk_ptr[front]) \
                if on_chk else \
                via != np.repeat(front_in, var_ptr[front + 1] - var_ptr[front])
            src, dst, via = src[keep], dst[keep], via[keep]
            if level >= 2 and (dist_far[dst] == level - 2).any():
                found = 2 * level - 2
                break
            fresh = dist_far[dst] < 0
            dst, via = dst[fresh], via[fresh]
            uniq, first = np.unique(dst, return_index=True)
            if uniq.size != dst.size:
                found = 2 * level
                # a same-level merge; nothing shorter can appear later
                dist_far[uniq] = level
                break
            dist_far[uniq] = level
            front, front_in = uniq, via[first]
            on_chk = not on_chk
            if front.size == 0:
                break
        if found and found < best:
            best = found
            if best == 4:
                break
    return best if best <= cap else ">cap"


def _ranges(counts: np.ndarray) -> np.ndarray:
    """concatenate(arange(c) for c in counts) without a Python loop."""
    total = int(counts.sum())
    group_starts = np.cumsum(counts) - counts
    return np.arange(total) - np.repeat(group_starts, counts)


# ── CPM table text format ────────────────────────────────────────────
# Header "m n z1 z2 r", then one line per block row listing its nonzero
# CPMs as "(c,s)" pairs with 1-based block column c.

_PAIR_RE = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def serialize_cpm_table(code: QcCode) -> str:
    rows = [[] for _ in range(code.m * code.z1)]
    for br, bc, s in sorted(code.blocks):
        rows[br].append(f"({bc + 1},{s})")
    lines = [f"{code.m} {code.n} {code.z1} {code.z2} {code.r}"]
    lines += [" ".join(row) for row in rows]
    return "\n".join(lines) + "\n"


def parse_cpm_table(text: str) -> QcCode:
    lines = [ln.strip() for ln in text.splitlines()]
    first = next((i for i, ln in enumerate(lines) if ln), None)
    if first is None:
        raise ParseError("empty CPM table", 1)
    header = lines[first]
    parts = header.split()
    if len(parts) != 5:
        raise ParseError(f"header must be 'm n z1 z2 r', got {header!r}", first + 1)
    try:
        m, n, z1, z2, r = (int(p) for p in parts)
    except ValueError:
        raise ParseError(f"non-integer header field in {header!r}",
                         first + 1) from None
    if min(m, n, z1, z2, r) < 1:
        raise ParseError(f"header values must be positive: {header!r}", first + 1)
    # data rows are positional: a blank row is a block row with no CPMs
    body = lines[first + 1:]
    while len(body) > m * z1 and not body[-1]:
        body.pop()
    if len(body) != m * z1:
        raise ParseError(
            f"expected {m * z1} block rows, found {len(body)}", first + 1)
    blocks = []
    for br, ln in enumerate(body):
        lineno = first + 2 + br
        pairs = _PAIR_RE.findall(ln)
        if _PAIR_RE.sub("", ln).strip() or (ln and not pairs):
            raise ParseError(f"malformed CPM list {ln!r}", lineno)
        seen = set()
        for c_str, s_str in pairs:
            c, s = int(c_str), int(s_str)
            if not 1 <= c <= n * z1:
                raise ParseError(f"block column {c} outside [1, {n * z1}]", lineno)
            if s >= z2:
                raise ParseError(f"shift {s} must be below z2 = {z2}", lineno)
            if c in seen:
                raise ParseError(f"duplicate block column {c}", lineno)
            seen.add(c)
            blocks.append((br, c - 1, s))
    return QcCode(m=m, n=n, z1=z1, z2=z2, r=r, blocks=sorted(blocks))


def save_cpm_table(code: QcCode, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_cpm_table(code))


def load_cpm_table(path) -> QcCode:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_cpm_table(fh.read())
