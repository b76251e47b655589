"""Covariance-graph Wishart priors: Cholesky-space densities, a block Gibbs
sampler and closed forms for homogeneous graphs."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .graph import (  # noqa: F401
    Graph,
    clique_decomposition,
    hasse_diagram,
    hasse_order,
    is_decomposable,
    is_homogeneous,
    neighbor_index,
    perfect_vertex_order,
    read_graph,
    verify_order_in_SD,
    verify_order_in_SH,
    write_graph,
)
from .linalg import CholFactor, modified_cholesky, reconstruct  # noqa: F401
from .wishart import (  # noqa: F401
    DataSummary,
    PriorSpec,
    is_integrable,
    log_unnorm_density_pg,
    log_unnorm_density_qg,
    log_unnorm_density_theta,
    posterior_update,
    sample_covariance,
)
from .gibbs import GibbsConfig, gibbs_step, run_chain, run_chains  # noqa: F401
from .homogeneous import (  # noqa: F401
    exact_sample,
    expected_sigma,
    layer_sets,
    log_normalizing_constant,
)
