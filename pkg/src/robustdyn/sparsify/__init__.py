from .decomposition import Change, DecompConfig, ExpanderDecomposition, Piece, decomp_update, decompose
from .sampling import next_pow2, piece_sampling_prob, subset_sample
from .sparsifier import SamplingConfig, SparsifierHandle, refresh, sample_piece, sparsify

__all__ = [
    "Change", "DecompConfig", "ExpanderDecomposition", "Piece", "decomp_update", "decompose",
    "next_pow2", "piece_sampling_prob", "subset_sample",
    "SamplingConfig", "SparsifierHandle", "refresh", "sample_piece", "sparsify",
]
