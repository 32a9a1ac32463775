"""Tag-graph community recommender for folksonomies."""

from .community import Partition, louvain, modularity
from .evaluation import VARIANTS, EvalReport, VariantSpec, compare, precision_recall_at_k, run_experiment
from .folksonomy import Assignment, FolkIndex, Folksonomy, build_index
from .graph import TagGraph, build_graph, edge_weight
from .ingest import CleaningRules, SplitSpec, clean, parse_hetrec, split
from .recommender import MembershipTable, Recommender, RecommendationList, recommend
from .similarity import SimParams, jaccard, levenshtein, nco, sim_lev, sim_time

__version__ = "0.1.0"
