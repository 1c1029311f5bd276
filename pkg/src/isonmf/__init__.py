"""Non-negative factorizations that preserve local distances.

Classic L2 NMF, clipped SVD, an exact constructive NMF, Maximum Furthest
Neighbor Unfolding and isometric NMF, with dual-tree kd-tree neighbor search.
"""

from .isometric import IsoNmfConfig, IsoNmfProblem, isonmf_solve
from .metrics import EvalReport, distance_error, evaluate, reconstruction_error, sparsity, spectrum
from .mfnu import MfnuConfig, mfnu_solve, unfold_spectrum
from .neighbors import NeighborGraph, all_furthest, all_k_nearest, build_kdtree, neighbor_graph
from .nmf import FactorPair, NmfConfig, clipped_svd, exact_nmf_construction, nmf_solve
from .optimize import AugLagConfig, LbfgsbConfig, SolveReport

__version__ = "0.1.0"
