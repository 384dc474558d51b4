"""Cut norms, step kernels, sampling and nondeterministic testing for uniform hypergraphs."""
__version__ = "0.1.0"

from .core import ColoredHypergraph, Coloring, Hypergraph, sample_q, tstar_density  # noqa: E402
from .errors import (EnumerationTooLarge, FormatError, HyperpropError, IncompatibleKernels,  # noqa: E402
                     InvalidColor, InvalidSample, NonTermination, RangeError)
from .kernels import CellPartition, ColoredStepKernel, StepKernel, step_average  # noqa: E402
from .norms import cut_distance, cut_star_norm, l1_distance, weak_regularity  # noqa: E402
from .energy import DensityTensor, PartitionFamily, RealArray, ggse, gse_graph  # noqa: E402
from .ndtest import NDParameter, coloring_lemma, coloring_transfer, nd_eval, tester  # noqa: E402

__all__ = [
    "CellPartition", "ColoredHypergraph", "ColoredStepKernel", "Coloring", "DensityTensor",
    "EnumerationTooLarge", "FormatError", "Hypergraph", "HyperpropError", "IncompatibleKernels",
    "InvalidColor", "InvalidSample", "NDParameter", "NonTermination", "PartitionFamily", "RangeError",
    "RealArray", "StepKernel", "coloring_lemma", "coloring_transfer", "cut_distance", "cut_star_norm",
    "ggse", "gse_graph", "l1_distance", "nd_eval", "sample_q", "step_average", "tester",
    "tstar_density", "weak_regularity",
]
