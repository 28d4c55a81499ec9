"""Protograph-based LDPC-Hadamard codes: construction, analysis, simulation."""

from .decoder import DecodeOutcome, DecoderConfig, decode, decode_many
from .hadamard import (
    LLR_CLAMP,
    HadamardDecodeResult,
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
from .pexit import (
    ConvergenceResult,
    ThresholdQuery,
    ThresholdResult,
    format_report,
    hadamard_mi_mc,
    j_fun,
    j_inv,
    pexit_converges,
    random_protomatrix,
    sigma_lch,
    threshold_search,
)
from .protograph import (
    CodeGeometry,
    InfeasibleError,
    ParseError,
    ProtoConstraints,
    Protomatrix,
    PunctureSpec,
    QcCode,
    code_rate,
    code_rate_terms,
    expand_edges,
    geometry,
    girth,
    lift_two_step,
    load_cpm_table,
    load_protomatrix,
    parse_cpm_table,
    parse_protomatrix,
    save_cpm_table,
    serialize_cpm_table,
    serialize_protomatrix,
    validate,
)
from .sim import (
    Campaign,
    ChannelPoint,
    SimStats,
    StopRule,
    channel_point,
    emit_results,
    info_bit_count,
    load_campaign,
    run_point,
    transmit_all_zero,
)

__version__ = "0.1.0"
