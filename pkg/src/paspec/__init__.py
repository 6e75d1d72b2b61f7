"""Numerical laboratory for normalized Laplacian spectra of preferential-attachment multigraphs."""

__version__ = "0.1.0"

from .errors import DenseLimitError, DomainError, GraphFormatError, NumericalError, PaspecError
from .pa_graph import Graph, deserialize, generate, load, save, serialize
from .operators import Kind, OperatorView
from .local import (
    DecoratedBall,
    LocalFunctionalSpec,
    extract_ball,
    local_average,
    max_ball_degree,
    return_probability,
)
from .spectral import (
    SpectrumResult,
    StieltjesEval,
    eigenvalues,
    kolmogorov_distance,
    moment_trace,
    stieltjes_direct,
    stieltjes_solve,
)
from .neumann import in_domain, limit_estimate, required_K, stieltjes_neumann, tail_bound
from .experiments import (
    StudyConfig,
    StudyReport,
    azuma_bound,
    concentration_study,
    convergence_study,
    n_ball_bound,
)
