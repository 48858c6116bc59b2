"""Spectral clustering with the Fiedler carpet.

Normalized Laplacian and contingency-table spectra, optimal vertex and
correspondence-analysis representatives, weighted k-means, the
piecewise-linear carpet map and its roots, and multiway discrepancy.
"""

__version__ = "0.1.0"

from .carpet import (
    Carpet,
    CarpetResult,
    GapReport,
    build_y,
    carpet_eval,
    carpet_image,
    carpet_root,
    orient,
    orientation_of,
    theorem_bound_report,
)
from .clustering import Partition, weighted_k_variance, weighted_kmeans
from .discrepancy import BiPartition, chi_square, md_directed, md_exact, md_sampled
from .errors import CarpetError
from .formats import encode_graph6, parse_csv_table, parse_edge_list, parse_graph6
from .graphs import ContingencyTable, WeightedGraph
from .spectra import correspondence_representatives, eigh, svd, vertex_representatives
