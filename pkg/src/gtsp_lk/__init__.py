"""Lin-Kernighan style heuristics for the Generalized Traveling Salesman Problem."""

from .estimators import (FarthestPointClustering, LinKernighan, NearestNeighbour, ThreeOpt,
                         TwoOpt, make_heuristic)
from .exact import ExactPathTables, close_up_exact, w_co
from .instance import (GtspInstance, InstanceFormatError, cluster_tsp, from_matrix,
                       parse_instance, read_instance, weight_of, weight_of_path,
                       weight_of_tour, write_instance)
from .lk import SolverConfig, Variation, lk_run
from .local_search import AdaptationOption, nearest_neighbour, three_opt, two_opt
from .tour import (InfeasibleTourError, Tour, brute_force_optimum, cluster_optimize,
                   local_optimize)

__version__ = "0.1.0"

__all__ = [
    "AdaptationOption", "ExactPathTables", "FarthestPointClustering", "GtspInstance",
    "InfeasibleTourError", "InstanceFormatError", "LinKernighan", "NearestNeighbour",
    "SolverConfig", "ThreeOpt", "Tour", "TwoOpt", "Variation", "brute_force_optimum",
    "close_up_exact", "cluster_optimize", "cluster_tsp", "from_matrix", "lk_run",
    "local_optimize", "make_heuristic", "nearest_neighbour", "parse_instance",
    "read_instance", "three_opt", "two_opt", "w_co", "weight_of", "weight_of_path",
    "weight_of_tour", "write_instance",
]
