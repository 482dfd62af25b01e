"""Prequential bookkeeping and every reported quantity.

The ledger enforces test-then-train: an instance's score and prediction are
recorded before the learner trains on it.  Headline numbers (AUC, GMEANS,
F1, GII) are computed from the full cumulative record at the end of a run;
per-checkpoint snapshots are kept for trace export.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import LinearModel, KernelModel, SoftmaxModel, LossKind, loss_and_gradient_factor

log = logging.getLogger(__name__)


class MetricLedger:
    """Confusion counts, score records, and traces for one prequential run."""

    def __init__(self, binary=True, n_classes=2):
        self.binary = binary
        self.n_classes = n_classes
        self.tp = self.fp = self.tn = self.fn = 0
        self.scores = []
        self.true_labels = []
        self.gi_trace = []      # one entry per step; nan = undefined
        self.losses = []        # per-step online loss
        self.class_correct = [0] * n_classes
        self.class_total = [0] * n_classes

    @property
    def n_records(self):
        return len(self.true_labels)

    @property
    def cumulative_loss(self):
        return float(sum(self.losses))

    def record_prediction(self, score, predicted_label, true_label):
        self.scores.append(score)
        self.true_labels.append(true_label)
        if self.binary:
            if true_label > 0:
                if predicted_label > 0:
                    self.tp += 1
                else:
                    self.fn += 1
            else:
                if predicted_label > 0:
                    self.fp += 1
                else:
                    self.tn += 1
        else:
            self.class_total[true_label] += 1
            if predicted_label == true_label:
                self.class_correct[true_label] += 1

    def record_loss(self, loss):
        self.losses.append(loss)

    def record_gi(self, gi):
        self.gi_trace.append(math.nan if gi is None else gi)


def gmeans(ledger):
    """sqrt(TPR * TNR); zero-denominator rates count as 0."""
    tpr = ledger.tp / (ledger.tp + ledger.fn) if ledger.tp + ledger.fn else 0.0
    tnr = ledger.tn / (ledger.tn + ledger.fp) if ledger.tn + ledger.fp else 0.0
    return math.sqrt(tpr * tnr)


def f1(ledger):
    """Harmonic mean of precision and recall; 0 when there are no true positives."""
    if ledger.tp == 0:
        return 0.0
    precision = ledger.tp / (ledger.tp + ledger.fp)
    recall = ledger.tp / (ledger.tp + ledger.fn)
    return 2.0 * precision * recall / (precision + recall)


def auc(ledger):
    """Exact Mann-Whitney statistic over all recorded scores, ties counting half.

    None when only one class was recorded.
    """
    return auc_from_scores(ledger.scores, ledger.true_labels)


def auc_from_scores(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    # average ranks within tie groups (1-based)
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[pos].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def gii(ledger):
    """Cumulative squared deviation of the gradient-imbalance trace from 1.

    Undefined trace entries are excluded rather than imputed.
    """
    trace = np.asarray(ledger.gi_trace, dtype=float)
    if trace.size == 0:
        return 0.0
    dev = trace[~np.isnan(trace)] - 1.0
    return float(dev @ dev)


# -- batch oracle and regret ----------------------------------------------------


def _oracle_descent(params, value_grad, max_iter, tol):
    """Full-batch descent with Armijo backtracking on a convex objective."""
    obj, grads = value_grad(params)
    step = 1.0
    for _ in range(max_iter):
        gnorm_sq = sum(float(np.sum(g * g)) for g in grads)
        if gnorm_sq == 0.0:
            return params, obj, True
        step = min(step * 2.0, 1e6)
        while True:
            trial = [p - step * g for p, g in zip(params, grads)]
            trial_obj, trial_grads = value_grad(trial)
            if trial_obj <= obj - 0.5 * step * gnorm_sq or step < 1e-16:
                break
            step *= 0.5
        improved = obj - trial_obj
        params, obj, grads = trial, trial_obj, trial_grads
        if improved <= tol * max(abs(obj), 1.0):
            return params, obj, True
    return params, obj, False


@dataclass
class OracleResult:
    model: object
    objective: float          # summed loss over the dataset at the optimum
    per_instance_losses: np.ndarray
    converged: bool

    @property
    def cumulative_loss(self):
        return float(self.per_instance_losses.sum())


def batch_oracle(dataset, loss_kind, learner_family="linear", gamma=None,
                 max_iter=5000, tol=1e-8):
    """Approximate best fixed model in hindsight for the regret comparator.

    Minimizes the summed convex loss over the whole stream by full-batch
    descent with backtracking line search, stopping at relative objective
    change below tol or the iteration budget (a warning reports the achieved
    tolerance on non-convergence).
    """
    X = dataset.X
    y = dataset.y.astype(float)
    n, d = X.shape

    if loss_kind is LossKind.SOFTMAX:
        C = dataset.n_classes
        yi = dataset.y.astype(int)

        def value_grad(params):
            W, b = params
            Z = X @ W.T + b
            Z = Z - Z.max(axis=1, keepdims=True)
            P = np.exp(Z)
            P /= P.sum(axis=1, keepdims=True)
            loss = float(-np.log(np.maximum(P[np.arange(n), yi], 1e-300)).sum())
            G = P.copy()
            G[np.arange(n), yi] -= 1.0
            return loss, [G.T @ X, G.sum(axis=0)]

        params, obj, ok = _oracle_descent([np.zeros((C, d)), np.zeros(C)], value_grad,
                                          max_iter, tol)
        model = SoftmaxModel(C, d, W=params[0], b=params[1])
        Z = X @ params[0].T + params[1]
        Z = Z - Z.max(axis=1, keepdims=True)
        P = np.exp(Z)
        P /= P.sum(axis=1, keepdims=True)
        per = -np.log(np.maximum(P[np.arange(n), yi], 1e-300))
    elif learner_family == "linear":
        def value_grad(params):
            w, b = params
            loss, gfac = _linear_loss_on_scores(X @ w + b, y, loss_kind)
            return loss, [gfac @ X, float(gfac.sum())]

        params, obj, ok = _oracle_descent([np.zeros(d), 0.0], value_grad, max_iter, tol)
        model = LinearModel(d, w=params[0], b=params[1])
        scores = X @ params[0] + params[1]
        per = _per_instance_losses(scores, y, loss_kind)
    elif learner_family == "kernel":
        g = gamma if gamma is not None else 1.0 / d
        sq = (X * X).sum(axis=1)
        K = np.exp(-g * (sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)))

        def value_grad(params):
            beta, b = params
            scores = K @ beta + b
            loss, gfac = _linear_loss_on_scores(scores, y, loss_kind)
            return loss, [K @ gfac, float(gfac.sum())]

        params, obj, ok = _oracle_descent([np.zeros(n), 0.0], value_grad, max_iter, tol)
        model = KernelModel(d, gamma=g)
        for i in range(n):
            if params[0][i] != 0.0:
                model.step(X[i], -params[0][i])
        model.bias = params[1]
        scores = K @ params[0] + params[1]
        per = _per_instance_losses(scores, y, loss_kind)
    else:
        raise ValueError(f"unknown learner family {learner_family!r}")

    if not ok:
        log.warning(
            "batch oracle stopped at iteration budget; objective %.6g (tol %.1e not met)",
            obj, tol,
        )
    return OracleResult(model, obj, per, ok)


def _linear_loss_on_scores(scores, y, loss_kind):
    if loss_kind is LossKind.HINGE:
        margins = 1.0 - y * scores
    else:
        margins = -y * scores
    active = margins > 0.0
    return float(margins[active].sum()), np.where(active, -y, 0.0)


def _per_instance_losses(scores, y, loss_kind):
    if loss_kind is LossKind.HINGE:
        return np.maximum(0.0, 1.0 - y * scores)
    if loss_kind is LossKind.PERCEPTRON:
        return np.maximum(0.0, -y * scores)
    raise ValueError("per-instance losses for binary losses only")


@dataclass
class RegretReport:
    online_cum_loss: float
    oracle_cum_loss: float
    regret: float
    avg_regret_trace: list  # (t, regret_t / t) at checkpoint indices


def regret_report(online_losses, oracle_losses, checkpoints=None):
    """Cumulative-loss gap against the fixed comparator, with a checkpoint trace."""
    online = np.cumsum(np.asarray(online_losses, dtype=float))
    oracle = np.cumsum(np.asarray(oracle_losses, dtype=float))
    if len(online) != len(oracle):
        raise ValueError("online and oracle loss sequences must align")
    T = len(online)
    if checkpoints is None:
        checkpoints = [T]
    trace = [(t, float(online[t - 1] - oracle[t - 1]) / t) for t in checkpoints if 1 <= t <= T]
    return RegretReport(
        online_cum_loss=float(online[-1]),
        oracle_cum_loss=float(oracle[-1]),
        regret=float(online[-1] - oracle[-1]),
        avg_regret_trace=trace,
    )


# -- cross-method normalization ---------------------------------------------------


def normalize_across_methods(table, higher_is_better=True):
    """Scale each dataset row so the best method gets 1; rank with averaged ties.

    table maps dataset -> {method: value}.  For lower-is-better metrics the
    row minimum is divided by each value instead.  Returns (normalized,
    ranks), both with the table's shape.
    """
    normalized = {}
    ranks = {}
    for ds, row in table.items():
        methods = list(row)
        vals = np.array([row[m] for m in methods], dtype=float)
        if higher_is_better:
            best = vals.max()
            norm = vals / best if best > 0 else np.zeros_like(vals)
            order_key = -vals
        else:
            best = vals.min()
            with np.errstate(divide="ignore", invalid="ignore"):
                norm = np.where(vals > 0, best / np.where(vals > 0, vals, 1.0), 0.0)
            if best == 0.0:
                norm = np.where(vals == 0.0, 1.0, norm)
            order_key = vals
        normalized[ds] = dict(zip(methods, norm.tolist()))
        ranks[ds] = dict(zip(methods, _average_ranks(order_key)))
    return normalized, ranks


def _average_ranks(keys):
    """1-based ranks of keys in ascending order, ties averaged."""
    keys = np.asarray(keys, dtype=float)
    order = np.argsort(keys, kind="mergesort")
    ranks = np.empty(len(keys))
    i = 0
    while i < len(keys):
        j = i
        while j + 1 < len(keys) and keys[order[j + 1]] == keys[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks.tolist()


def average_rank_table(rank_tables):
    """Mean rank per method across datasets, from normalize_across_methods output."""
    sums = {}
    counts = {}
    for row in rank_tables.values():
        for m, r in row.items():
            sums[m] = sums.get(m, 0.0) + r
            counts[m] = counts.get(m, 0) + 1
    return {m: sums[m] / counts[m] for m in sums}
