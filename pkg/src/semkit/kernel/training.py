"""Mini-batch Adam training with a two-phase loss schedule.

Phase one trains with the assignment term switched off until validation
loss stops improving; phase two switches the term on and continues from
the best phase-one weights.  The returned weights are the ones with the
best validation loss under the final objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..base import BaseEstimator, InputError, NotFittedError, rng_for
from .config import ModelConfig
from .network import (forced_assignments, greedy_decode, init_params,
                      loss_and_grads, sequence_nll, zero_like_params)


@dataclass(frozen=True)
class TrainingPlan:
    """Optimizer and schedule knobs.

    phase0_epochs, when set, caps the pretraining phase at that many epochs;
    the patience rule still applies within the cap.
    """

    lr: float = 2e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 16
    max_epochs: int = 60
    patience: int = 3
    phase0_epochs: int | None = None


class AdamState:
    """First and second moment accumulators."""

    def __init__(self, params):
        self.m = zero_like_params(params)
        self.v = zero_like_params(params)
        self.t = 0

    def step(self, params, grads, plan: TrainingPlan):
        self.t += 1
        b1, b2 = plan.beta1, plan.beta2
        correction1 = 1.0 - b1 ** self.t
        correction2 = 1.0 - b2 ** self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            params[name] -= plan.lr * (m / correction1) / (np.sqrt(v / correction2) + plan.eps)


def mean_loss(examples, params, config, mu):
    if not examples:
        raise InputError("cannot evaluate on an empty example list")
    return sum(sequence_nll(ex, params, config, mu) for ex in examples) / len(examples)


def _run_epoch(examples, params, config, mu, plan, adam, rng):
    perm = rng.permutation(len(examples))
    total = 0.0
    for start in range(0, len(perm), plan.batch_size):
        batch = [examples[i] for i in perm[start:start + plan.batch_size]]
        grads = zero_like_params(params)
        for ex in batch:
            loss, g = loss_and_grads(ex, params, config, mu)
            total += loss
            for name in grads:
                grads[name] += g[name]
        for name in grads:
            grads[name] /= len(batch)
        adam.step(params, grads, plan)
    return total / len(examples)


def _train_phase(phase, mu, examples, val, params, config, plan, history, max_epochs=None):
    adam = AdamState(params)
    best_val = float("inf")
    best = {k: v.copy() for k, v in params.items()}
    stale = 0
    if max_epochs is None:
        max_epochs = plan.max_epochs
    for epoch in range(max_epochs):
        rng = rng_for(config.seed, 3, phase, epoch)
        train_loss = _run_epoch(examples, params, config, mu, plan, adam, rng)
        val_loss = mean_loss(val, params, config, mu)
        history.append({"phase": phase, "epoch": epoch,
                        "train_loss": train_loss, "val_loss": val_loss})
        if val_loss < best_val - 1e-9:
            best_val = val_loss
            best = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= plan.patience:
                break
    return best


def train(train_examples, val_examples, config: ModelConfig, plan: TrainingPlan | None = None):
    """Two-phase training; returns (best params, history of epoch records)."""
    if not train_examples:
        raise InputError("training set is empty")
    if not val_examples:
        raise InputError("validation set is empty")
    plan = plan or TrainingPlan()
    params = init_params(config, rng_for(config.seed, 2))
    history = []
    params = _train_phase(0, 0.0, train_examples, val_examples, params, config, plan,
                          history, max_epochs=plan.phase0_epochs)
    if config.mu != 0.0:
        params = _train_phase(1, config.mu, list(train_examples), val_examples,
                              params, config, plan, history)
    return params, history


class CopyParser(BaseEstimator):
    """Trainable parser: generation plus antecedent assignment.

    fit expects an object with train, val, src_vocab, and tgt_vocab
    attributes, as produced by the synthetic data generator.
    """

    def __init__(self, embed_dim=16, hidden_dim=24, layers=1, ffnn_dim=16,
                 mu=1.0, seed=0, lr=2e-3, batch_size=16, max_epochs=60, patience=3,
                 phase0_epochs=None):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.layers = layers
        self.ffnn_dim = ffnn_dim
        self.mu = mu
        self.seed = seed
        self.lr = lr
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.phase0_epochs = phase0_epochs

    def fit(self, dataset):
        config = ModelConfig(
            src_vocab=dataset.src_vocab.size, tgt_vocab=dataset.tgt_vocab.size,
            embed_dim=self.embed_dim, hidden_dim=self.hidden_dim,
            layers=self.layers, ffnn_dim=self.ffnn_dim, mu=self.mu, seed=self.seed)
        plan = TrainingPlan(lr=self.lr, batch_size=self.batch_size,
                            max_epochs=self.max_epochs, patience=self.patience,
                            phase0_epochs=self.phase0_epochs)
        examples = [ex.example for ex in dataset.train]
        val = [ex.example for ex in dataset.val]
        self.params_, self.history_ = train(examples, val, config, plan)
        self.config_ = config
        self.src_vocab_ = dataset.src_vocab
        self.tgt_vocab_ = dataset.tgt_vocab
        return self

    def _fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("CopyParser is not fitted")

    def predict(self, example):
        """Forced-target antecedent predictions for one example."""
        self._fitted()
        return forced_assignments(example, self.params_, self.config_)

    def generate(self, X, max_len=200):
        """Greedy generation from source ids."""
        self._fitted()
        return greedy_decode(X, self.params_, self.config_, self.tgt_vocab_, max_len=max_len)
