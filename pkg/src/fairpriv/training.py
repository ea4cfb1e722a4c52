"""Min-max training of one (alpha, beta, seed) configuration.

The extractor and classifier minimize the task cross entropy minus
alpha/beta-scaled adversary cross entropies, so the extractor is pushed to
make the sensitive and private attributes hard to read off its features. The
adversaries minimize their own cross entropies against frozen features.
Updates alternate between the two parameter groups every ``switch_period``
batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import learncore as lc
from .data import LabeledDataset, one_hot
from .learncore import AdamState, Mlp, Tensor


class TrainingDivergedError(RuntimeError):
    """Raised when a loss goes non-finite mid-training."""


@dataclass
class ModelBundle:
    extractor: Mlp  # input dim -> feature_dim
    classifier: Mlp  # feature_dim -> k_y
    fairness_adv: Mlp  # feature_dim + k_y -> k_a
    privacy_adv: Mlp  # feature_dim + k_y -> k_p

    def __post_init__(self):
        feature_dim = self.extractor.layer_sizes[-1]
        k_y = self.classifier.layer_sizes[-1]
        if self.classifier.layer_sizes[0] != feature_dim:
            raise ValueError("classifier input width != extractor output width")
        for name, adv in (("fairness", self.fairness_adv), ("privacy", self.privacy_adv)):
            if adv.layer_sizes[0] != feature_dim + k_y:
                raise ValueError(f"{name} adversary input width must be "
                                 f"feature_dim + k_y = {feature_dim + k_y}")

    @property
    def feature_dim(self) -> int:
        return self.extractor.layer_sizes[-1]

    @property
    def k_y(self) -> int:
        return self.classifier.layer_sizes[-1]

    def main_params(self) -> list[Tensor]:
        return self.extractor.params() + self.classifier.params()

    def adversary_params(self) -> list[Tensor]:
        return self.fairness_adv.params() + self.privacy_adv.params()

    def copy(self) -> "ModelBundle":
        return ModelBundle(self.extractor.copy(), self.classifier.copy(),
                           self.fairness_adv.copy(), self.privacy_adv.copy())


@dataclass
class TrainConfig:
    alpha: float
    beta: float
    seed: int
    epochs: int = 40
    batch_size: int = 64
    lr: float = 1e-3
    feature_dim: int = 8
    extractor_hidden: tuple = (32,)
    adversary_hidden: tuple = (32, 32)
    switch_period: int = 1
    select_by: str = "classifier-ce"  # or "objective"

    def validate(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.switch_period < 1:
            raise ValueError("switch_period must be >= 1")
        if self.batch_size < 1 or self.feature_dim < 1 or self.lr <= 0:
            raise ValueError("batch_size/feature_dim must be >= 1 and lr > 0")
        if self.select_by not in ("classifier-ce", "objective"):
            raise ValueError(f"unknown select_by {self.select_by!r}")


@dataclass
class TrainedModel:
    bundle: ModelBundle  # weights at the best-validation epoch
    best_val_loss: float
    history: list  # per-epoch (mean train objective, val loss)


@dataclass
class OptimizerStates:
    main: AdamState
    adversaries: AdamState
    batch_count: int = 0  # persists across epochs so phases carry over


def build_bundle(cfg: TrainConfig, input_dim: int, k_y: int, k_a: int, k_p: int) -> ModelBundle:
    """Seeded networks; the classifier is a linear head on the features."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(5)
    adv_in = cfg.feature_dim + k_y
    return ModelBundle(
        extractor=lc.mlp_init([input_dim, *cfg.extractor_hidden, cfg.feature_dim], seeds[0]),
        classifier=lc.mlp_init([cfg.feature_dim, k_y], seeds[1]),
        fairness_adv=lc.mlp_init([adv_in, *cfg.adversary_hidden, k_a], seeds[2]),
        privacy_adv=lc.mlp_init([adv_in, *cfg.adversary_hidden, k_p], seeds[3]),
    )


def shuffle_seed(cfg: TrainConfig) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.seed).spawn(5)[4]


def objective(bundle: ModelBundle, batch: LabeledDataset, alpha: float, beta: float
              ) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """Build the min-max objective graph for one batch.

    Returns (total, ce_c, ce_a, ce_p) where
    total = ce_c - alpha * ce_a - beta * ce_p, all with unit class weights.
    The adversaries see the features concatenated with the one-hot task label.
    When alpha (or beta) is exactly 0 the corresponding term is left out of
    the graph, so total == ce_c bitwise at (0, 0).
    """
    if len(batch) == 0:
        raise ValueError("objective over an empty batch")
    feats = bundle.extractor.forward(Tensor(batch.x))
    ce_c = lc.weighted_softmax_cross_entropy(
        bundle.classifier.forward(feats), batch.y, np.ones(batch.k_y))
    adv_in = lc.concat_cols(feats, Tensor(one_hot(batch.y, batch.k_y)))
    ce_a = lc.weighted_softmax_cross_entropy(
        bundle.fairness_adv.forward(adv_in), batch.y_a, np.ones(batch.k_a))
    ce_p = lc.weighted_softmax_cross_entropy(
        bundle.privacy_adv.forward(adv_in), batch.y_p, np.ones(batch.k_p))
    total = ce_c
    if alpha != 0.0:
        total = lc.sub(total, lc.scale(ce_a, alpha))
    if beta != 0.0:
        total = lc.sub(total, lc.scale(ce_p, beta))
    return total, ce_c, ce_a, ce_p


def _step(params: list[Tensor], state: AdamState) -> None:
    grads = [p.grad for p in params]
    lc.adam_step(params, grads, state)


def alternating_epoch(bundle: ModelBundle, train_data: LabeledDataset, cfg: TrainConfig,
                      states: OptimizerStates, shuffle_rng: np.random.Generator,
                      update_adversaries: bool = True, epoch: int = 0) -> float:
    """One pass over the data, alternating parameter groups every k batches.

    MAIN phases update only the extractor and classifier on the full
    objective; ADV phases update only the adversaries on their own cross
    entropies. With update_adversaries=False the ADV phases do nothing, which
    turns the schedule into plain risk minimization over the same batches.
    Returns the mean objective value across batches.
    """
    n = len(train_data)
    if n == 0:
        raise ValueError("empty training set")
    order = shuffle_rng.permutation(n)
    k = cfg.switch_period
    totals = []
    for start in range(0, n, cfg.batch_size):
        batch = train_data.subset(order[start:start + cfg.batch_size])
        main_phase = (states.batch_count // k) % 2 == 0
        phase = "MAIN" if main_phase else "ADV"
        with lc.Tape() as tape:
            total, ce_c, ce_a, ce_p = objective(bundle, batch, cfg.alpha, cfg.beta)
            adv_loss = lc.add(ce_a, ce_p)
        if not np.isfinite(total.data[0, 0]) or not np.isfinite(adv_loss.data[0, 0]):
            raise TrainingDivergedError(
                f"non-finite loss at epoch {epoch}, {phase} phase, "
                f"batch {states.batch_count}")
        if main_phase:
            lc.backward(tape, total)
            _step(bundle.main_params(), states.main)
        elif update_adversaries:
            lc.backward(tape, adv_loss)
            _step(bundle.adversary_params(), states.adversaries)
        for p in bundle.main_params() + bundle.adversary_params():
            p.grad = None
        totals.append(total.data[0, 0])
        states.batch_count += 1
    return float(np.mean(totals))


def validation_loss(bundle: ModelBundle, ds: LabeledDataset, cfg: TrainConfig) -> float:
    """Selection loss on a split: classifier CE, or the full objective."""
    total, ce_c, _, _ = objective(bundle, ds, cfg.alpha, cfg.beta)
    value = total if cfg.select_by == "objective" else ce_c
    return float(value.data[0, 0])


def train(train_data: LabeledDataset, val_data: LabeledDataset, cfg: TrainConfig,
          update_adversaries: bool = True) -> TrainedModel:
    """Run cfg.epochs alternating epochs; keep the best-validation snapshot."""
    cfg.validate()
    if len(train_data) == 0 or len(val_data) == 0:
        raise ValueError("train and validation splits must be nonempty")
    bundle = build_bundle(cfg, train_data.dim, train_data.k_y, train_data.k_a,
                          train_data.k_p)
    states = OptimizerStates(
        main=AdamState(bundle.main_params(), cfg.lr),
        adversaries=AdamState(bundle.adversary_params(), cfg.lr),
    )
    shuffle_rng = np.random.default_rng(shuffle_seed(cfg))
    best_loss = math.inf
    best_bundle = None
    history = []
    for epoch in range(cfg.epochs):
        mean_total = alternating_epoch(bundle, train_data, cfg, states, shuffle_rng,
                                       update_adversaries=update_adversaries, epoch=epoch)
        val_loss = validation_loss(bundle, val_data, cfg)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        history.append((mean_total, val_loss))
        if val_loss < best_loss:
            best_loss = val_loss
            best_bundle = bundle.copy()
    return TrainedModel(bundle=best_bundle, best_val_loss=best_loss, history=history)
