"""Fixed point forests on permutations and their Poisson point process limit."""
from .errors import (BasePermutationError, BudgetExceededError, CoincidentPointError,
                     ForestError, InvalidBumpError, NotAnAtomError, PermutationError,
                     SizeLimitError)
from .forest import (Ball, ForestGraph, RootedTreeShape, brute_farthest_leaf,
                     brute_nearest_leaf, build_forest, canonical_shape, export_dot,
                     lehmer_rank, lehmer_unrank, local_r_ball)
from .limit import (PointProcessFamily, UniformStream, backward_map, build_r_ball_limit,
                    descend_tree, forward_map, limit_bumped_scan, limit_farthest_leaf,
                    limit_nearest_leaf, sample_limit_ball, sample_limit_statistic,
                    sample_ppp, yule_count)
from .paths import (BumpedSet, BumpPath, b_x_subset, bumped_set, longest_length,
                    longest_path, lub_bound, scan_shortest_positions, shortest_length,
                    shortest_path, simple_upper_bound)
from .permutation import (Permutation, SeparationWord, base_of, bump, children,
                          distance_to_base, exit_order, in_identity_tree, is_derangement,
                          is_leaf, one_line, parse_permutation, random_permutation,
                          separation_word, sort_step, true_fixed_points)
from .stats import (EmpiricalDistribution, GeometricLaw, IndicatorLaw, PoissonLaw,
                    bx_tail_check, geometric_pmf, indicator_law_exact,
                    indicator_tv_experiment, mc_forest_stats, poisson_pmf,
                    poisson_vector_tv_bound, rball_histogram_compare, tail_decay_check,
                    tv_distance)

__version__ = "0.1.0"
