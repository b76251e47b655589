"""Bundled examples: the yeast galactose network, the seven-vertex
homogeneous graph and the fifty-vertex simulation graph."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .graph import graph_from_hasse_tree, hasse_order, parse_graph
from .io import parse_matrix
from .wishart import DataSummary

__all__ = [
    "YEAST_GENES",
    "YEAST_N",
    "YEAST_ALT_ORDER",
    "YeastReference",
    "yeast_graph",
    "yeast_covariance",
    "yeast_summary",
    "yeast_reference",
    "fig1_graph",
    "FIG1_PUBLISHED_ORDER",
    "sim50_graph",
    "sim50_sigma",
    "data_path",
]

YEAST_GENES = ("GAL11", "GAL4", "GAL80", "GAL3", "GAL7", "GAL10", "GAL1", "GAL2")
YEAST_N = 134
# new label of each vertex: GAL11 GAL4 GAL80 GAL10 GAL2 GAL3 GAL1 GAL7
YEAST_ALT_ORDER = (1, 2, 3, 6, 8, 4, 7, 5)
# published labelling of vertices a..g
FIG1_PUBLISHED_ORDER = (4, 5, 1, 3, 7, 6, 2)


def data_path(name):
    """Filesystem path of a bundled data file."""
    return resources.files("cgwish") / "data" / name


def _read(name):
    return data_path(name).read_text()


def yeast_graph():
    return parse_graph(_read("yeast.graph"))


def yeast_covariance():
    """Centred sample covariance (divisor ``n``), primary ordering."""
    return parse_matrix(_read("yeast_cov.txt"))


def yeast_summary():
    return DataSummary(YEAST_N, yeast_covariance(), centered=True)


def _upper(rows):
    m = len(rows)
    A = np.zeros((m, m))
    for i, row in enumerate(rows):
        A[i, i:] = row
    return A + np.triu(A, 1).T


@dataclass(frozen=True)
class YeastReference:
    """Published posterior means and the likelihood estimate, primary ordering."""

    icf: np.ndarray
    by1: np.ndarray
    by2: np.ndarray
    by1_alt: np.ndarray
    by2_alt: np.ndarray


def yeast_reference():
    icf = _upper([
        [0.152, 0.030, 0, -0.052, 0, 0, 0, -0.068],
        [0.128, 0.040, 0.042, 0, 0, 0, 0.030],
        [0.223, 0.082, 0.197, 0.198, 0.239, 0.227],
        [0.612, 0.723, 0.549, 0.515, 0.582],
        [3.422, 2.593, 2.768, 2.540],
        [2.372, 2.409, 2.267],
        [2.890, 2.502],
        [2.870],
    ])
    by1 = _upper([
        [0.164, 0.030, 0, -0.050, 0, 0, 0, -0.068],
        [0.142, 0.040, 0.041, 0, 0, 0, 0.027],
        [0.237, 0.072, 0.193, 0.194, 0.235, 0.216],
        [0.626, 0.713, 0.544, 0.509, 0.575],
        [3.462, 2.584, 2.756, 2.533],
        [2.373, 2.400, 2.266],
        [2.961, 2.501],
        [3.003],
    ])
    by2 = _upper([
        [0.156, 0.030, 0, -0.052, 0, 0, 0, -0.068],
        [0.133, 0.041, 0.042, 0, 0, 0, 0.028],
        [0.232, 0.076, 0.199, 0.2, 0.243, 0.223],
        [0.643, 0.747, 0.568, 0.532, 0.599],
        [3.588, 2.682, 2.866, 2.636],
        [2.453, 2.497, 2.358],
        [3.086, 2.604],
        [3.153],
    ])
    by1_alt = _upper([
        [0.152, 0.030, 0, -0.051, 0, 0, 0, -0.069],
        [0.128, 0.039, 0.040, 0, 0, 0, 0.026],
        [0.224, 0.076, 0.197, 0.197, 0.240, 0.218],
        [0.628, 0.719, 0.549, 0.517, 0.582],
        [3.541, 2.588, 2.761, 2.532],
        [2.389, 2.407, 2.277],
        [2.969, 2.496],
        [2.892],
    ])
    by2_alt = _upper([
        [0.155, 0.030, 0, -0.052, 0, 0, 0, -0.070],
        [0.132, 0.040, 0.042, 0, 0, 0, 0.0278],
        [0.232, 0.076, 0.202, 0.203, 0.245, 0.227],
        [0.667, 0.749, 0.574, 0.531, 0.605],
        [3.708, 2.681, 2.865, 2.627],
        [2.473, 2.489, 2.356],
        [3.087, 2.582],
        [3.005],
    ])
    return YeastReference(icf, by1, by2, by1_alt, by2_alt)


def fig1_graph():
    """Vertices ``a..g`` as ``1..7``; ``e`` is the root of the Hasse tree."""
    return parse_graph(_read("fig1.graph"))


def _sim50_tree():
    weights = [2]
    parent = [None]
    for _ in range(4):
        top = len(weights)
        weights.append(2)
        parent.append(0)
        for _ in range(2):
            mid = len(weights)
            weights.append(1)
            parent.append(top)
            for _ in range(2):
                weights.append(2)
                parent.append(mid)
    return weights, parent


def sim50_graph():
    """Fifty-vertex homogeneous graph, labelled in its Hasse ordering.

    The Hasse tree has a root class of two vertices and four identical
    subtrees: a class of two with two single-vertex children, each of which
    has two leaf classes of two.
    """
    g = graph_from_hasse_tree(*_sim50_tree())
    return g.relabel(hasse_order(g))


def sim50_sigma(g=None):
    """Diagonal 50, one on every edge, zero elsewhere."""
    g = sim50_graph() if g is None else g
    return 50.0 * np.eye(g.m) + g.adjacency().astype(float)

