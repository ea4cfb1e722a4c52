"""Adversarial training and tradeoff analysis for fairness and attribute privacy.

Train a classifier alongside two conditional adversaries (one per attribute),
sweep the adversary strengths over a grid, and evaluate every model on task
utility, group fairness gap, and resistance to a linear attribute-inference
attack.
"""

from .analysis import (CsrBest, CsrWeights, HeatmapGrid, RunRecord, SweepResult,
                       best_csr, csr, grid_values, group_label, heatmap, normalize,
                       pearson, seed_medians, tradeoff_correlations)
from .data import (LabeledDataset, SplitSpec, SyntheticSpec, generate, load_csv,
                   make_splits, sample_labels, save_csv)
from .evaluation import (LinearAttacker, MetricTriple, accuracy, attack_accuracy,
                         balanced_accuracy, fit_attacker, group_gap, tpr, tpr_at_fpr)
from .learncore import (AdamState, Matrix, Mlp, ShapeError, Tape, Tensor, adam_step,
                        backward, matmul, mlp_init, relu,
                        weighted_softmax_cross_entropy)
from .training import (ModelBundle, TrainConfig, TrainedModel, TrainingDivergedError,
                       alternating_epoch, build_bundle, objective, train)

__version__ = "0.1.0"
