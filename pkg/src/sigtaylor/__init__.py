"""Signatures, functional derivatives and pathwise Taylor expansions."""
from .pathcore import Path, Horizon, PartitionSeq, concat, stop_extend, bump, bump_to
from .words import WordPoly, enumerate_words, shuffle, basis_reduce
from .signature import Signature, signature, signature_strat, chen_concat, seg_signature
from .funcderiv import DiffConfig, Functional, delta_word, sig_coordinate, sig_linear
from .expansion import fte, maclaurin, ive_expand, remainder_bound, chaos_coeffs
from .pricing import BachelierMeasure, MCConfig, payoff_library, price, sig_price

__version__ = "0.1.0"
