"""Seeded mini-batch logistic regression shared by the scorer and the heading classifier.

Small by design: the models in this package are linear probes over hand-built
features, so a dependency-free fitter with deterministic behavior is all
that's needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingDiagnosticsError, ValidationError


@dataclass
class FitConfig:
    learning_rate: float = 0.4
    lr_decay: float = 0.03  # per-epoch: lr / (1 + decay * epoch)
    epochs: int = 120
    batch_size: int = 256
    l2: float = 1e-4
    seed: int = 0
    val_fraction: float = 0.1
    patience: int = 8
    min_rel_improvement: float = 1e-7
    max_backtracks: int = 6  # epoch rejections before training is declared divergent


@dataclass
class FitResult:
    weights: np.ndarray
    bias: float
    epochs_run: int
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def binary_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-based AUC (Mann-Whitney); ties share rank mass."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    pos_rank_sum = float(ranks[labels].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def fit_logistic(X: np.ndarray, y: np.ndarray, config: FitConfig | None = None) -> FitResult:
    """Fit a logistic model with seeded mini-batch gradient descent.

    The full-dataset training loss is checked after every epoch and the
    recorded trace decreases monotonically: an epoch that raises it is rolled
    back and retried at half the learning rate (mini-batch steps jitter near
    the optimum). When ``max_backtracks`` rejections cannot restore descent
    the run has genuinely diverged and a TrainingDiagnosticsError is raised.
    Deterministic given the seed.
    """
    config = config or FitConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValidationError(f"bad training shapes X={X.shape} y={y.shape}")
    if y.min() == y.max():
        raise ValidationError("degenerate single-class training input")

    rng = np.random.default_rng(config.seed)
    n = X.shape[0]
    n_val = int(n * config.val_fraction) if n >= 20 else 0
    perm = rng.permutation(n)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if n_val and (y[train_idx].min() == y[train_idx].max()):
        # all of one class landed in the validation slice; train on everything
        val_idx, train_idx = perm[:0], perm
        n_val = 0
    Xt, yt = X[train_idx], y[train_idx]
    Xv, yv = X[val_idx], y[val_idx]

    w = np.zeros(X.shape[1])
    b = 0.0
    result = FitResult(weights=w, bias=b, epochs_run=0)

    def full_loss() -> float:
        p = sigmoid(Xt @ w + b)
        return log_loss(p, yt) + 0.5 * config.l2 * float(w @ w)

    prev_loss = full_loss()
    result.train_losses.append(prev_loss)
    best = (w.copy(), b, np.inf)
    stale = 0
    shrink = 1.0
    backtracks = 0

    for epoch in range(config.epochs):
        lr = shrink * config.learning_rate / (1.0 + config.lr_decay * epoch)
        snapshot = (w.copy(), b)
        order = rng.permutation(len(yt))
        for start in range(0, len(yt), config.batch_size):
            bi = order[start : start + config.batch_size]
            Xb, yb = Xt[bi], yt[bi]
            err = sigmoid(Xb @ w + b) - yb
            w -= lr * (Xb.T @ err / len(bi) + config.l2 * w)
            b -= lr * float(err.mean())

        loss = full_loss()
        if loss > prev_loss + 1e-12:
            # reject the epoch and retry smaller; repeated failures = divergence
            w[:] = snapshot[0]
            b = snapshot[1]
            backtracks += 1
            shrink *= 0.5
            if backtracks > config.max_backtracks:
                raise TrainingDiagnosticsError(
                    f"training loss kept rising after {backtracks} learning-rate "
                    f"reductions (epoch {epoch + 1}: {prev_loss:.6f} -> {loss:.6f})"
                )
            continue

        result.train_losses.append(loss)
        result.epochs_run = epoch + 1
        converged = prev_loss - loss < config.min_rel_improvement * max(prev_loss, 1e-12)
        prev_loss = loss

        if n_val:
            vloss = log_loss(sigmoid(Xv @ w + b), yv)
            result.val_losses.append(vloss)
            if vloss < best[2] - 1e-9:
                best = (w.copy(), b, vloss)
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
        if converged:
            break

    if n_val and best[2] < np.inf:
        w, b = best[0], best[1]
    result.weights = w
    result.bias = float(b)
    return result
