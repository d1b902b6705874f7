"""Glass-box / black-box ensembles with explainability-level guarantees."""

from .allocation import (AllocationPolicy, DesirabilityRanking, LearnedAllocator, allocate_top_q,
                         build_allocator_features, desirability_percentile, desirability_score,
                         ensemble_allocators, estimate_sufficiency_category,
                         feature_independent_scores, oracle_allocation,
                         random_expectation_curve, train_learned_allocator)
from .config import ExperimentConfig, load_config
from .dataset import (Dataset, Scaler, SplitDataset, apply_scaler, fit_scaler,
                      gen_complementary_2d, load_csv, split)
from .experiment import replicate, run_experiment, run_feature_ablation, select_components
from .metrics import (MetricsReport, PerformanceCurve, auc, curve, max_acc_argmax, pcfa, ppcr,
                      pqeom, pqom, s_acc, tqm95)
from .sufficiency import (SufficiencyConfig, SufficiencyPartition, epsilon_from_validation,
                          partition, sufficiency, underlying_loss)

__version__ = "0.1.0"
