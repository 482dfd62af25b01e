"""Dataset ingestion, normalization, and stream construction.

Every stream construction here is a pure function of its inputs and a seed,
and never fabricates instances: static-imbalance variants subsample one
class without replacement, and dynamic schedules draw each emission's class
from a Bernoulli whose negative probability is ir/(1+ir).
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .core import LabeledInstance
from .exceptions import (
    ConfigError,
    DataParseError,
    EmptyDatasetError,
    InfeasibleScheduleError,
)

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    """Feature matrix, label vector, and per-class counts for one source."""

    X: np.ndarray
    y: np.ndarray
    name: str = "dataset"
    class_counts: dict = field(init=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ValueError("X must be (n, d) with one label per row")
        if not np.isfinite(self.X).all():
            raise ValueError(f"{self.name}: features contain NaN/Inf")
        labels, counts = np.unique(self.y, return_counts=True)
        if len(labels) < 2:
            raise ValueError(f"{self.name}: fewer than 2 classes present")
        self.class_counts = dict(zip(labels.tolist(), counts.tolist()))

    def __len__(self):
        return len(self.y)

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def n_classes(self):
        return len(self.class_counts)

    def is_binary(self):
        return set(self.class_counts) == {-1, 1}

    def imbalance_ratio(self):
        if not self.is_binary():
            raise ValueError("imbalance ratio is defined for binary datasets")
        return self.class_counts[-1] / self.class_counts[1]

    def instances(self):
        for i in range(len(self.y)):
            yield LabeledInstance(self.X[i], int(self.y[i]))


# -- loaders -------------------------------------------------------------------


def load_csv(path, label_column, positive_label, header=False, name=None):
    """Load a rectangular numeric CSV with one label column.

    The designated label value maps to +1 and the single remaining value to
    -1; a third distinct label value is a parse error.  Logs a warning when
    the positive class is not the minority.
    """
    rows = []
    raw_labels = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if lineno == 1 and header:
                continue
            if not rec:
                continue
            if width is None:
                width = len(rec)
                if label_column >= width or label_column < -width:
                    raise DataParseError(
                        f"label column {label_column} outside row of width {width}",
                        path, lineno,
                    )
            elif len(rec) != width:
                raise DataParseError(
                    f"ragged row: expected {width} cells, got {len(rec)}", path, lineno
                )
            lab = rec[label_column]
            feats = rec[:label_column % width] + rec[(label_column % width) + 1:]
            try:
                rows.append([float(v) for v in feats])
            except ValueError as exc:
                raise DataParseError(f"non-numeric cell: {exc}", path, lineno) from None
            raw_labels.append((lab, lineno))
    if not rows:
        raise EmptyDatasetError("no data rows", path)

    pos = str(positive_label)
    negatives = set()
    y = np.empty(len(raw_labels), dtype=int)
    for i, (lab, lineno) in enumerate(raw_labels):
        if lab == pos:
            y[i] = 1
        else:
            negatives.add(lab)
            if len(negatives) > 1:
                raise DataParseError(
                    f"unknown label value {lab!r} (labels seen: "
                    f"{sorted(negatives | {pos})!r})",
                    path, lineno,
                )
            y[i] = -1
    if (y == 1).sum() == 0:
        raise DataParseError(f"positive label {pos!r} never occurs", path)
    ds = Dataset(np.array(rows), y, name=name or str(path))
    if ds.class_counts[1] > ds.class_counts[-1]:
        log.warning(
            "%s: positive label %r is the majority class (counts %s)",
            ds.name, pos, ds.class_counts,
        )
    return ds


def write_csv(dataset, path, label_column=0):
    """Write a dataset as numeric CSV; labels round-trip through load_csv."""
    if label_column != 0:
        raise ValueError("only label_column=0 is supported when writing")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for i in range(len(dataset)):
            w.writerow([int(dataset.y[i])] + [repr(v) for v in dataset.X[i]])


_LIBSVM_TOKEN = re.compile(r"^(\d+):([^\s]+)$")


def load_libsvm(path, name=None):
    """Load sparse `label idx:val` lines, densified to the file's max index."""
    entries = []
    labels = []
    max_idx = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            try:
                lab = float(tokens[0])
            except ValueError:
                raise DataParseError(f"malformed label {tokens[0]!r}", path, lineno) from None
            if lab not in (1.0, -1.0):
                raise DataParseError(f"label must be +1/-1, got {tokens[0]!r}", path, lineno)
            pairs = []
            prev = 0
            for tok in tokens[1:]:
                m = _LIBSVM_TOKEN.match(tok)
                if m is None:
                    raise DataParseError(f"malformed token {tok!r}", path, lineno)
                idx = int(m.group(1))
                if idx <= prev:
                    raise DataParseError(
                        f"feature indices must increase: {idx} after {prev}", path, lineno
                    )
                prev = idx
                try:
                    val = float(m.group(2))
                except ValueError:
                    raise DataParseError(f"malformed value in {tok!r}", path, lineno) from None
                pairs.append((idx, val))
            max_idx = max(max_idx, prev)
            labels.append(int(lab))
            entries.append(pairs)
    if not entries:
        raise EmptyDatasetError("no data rows", path)
    X = np.zeros((len(entries), max_idx))
    for i, pairs in enumerate(entries):
        for idx, val in pairs:
            X[i, idx - 1] = val
    return Dataset(X, np.array(labels), name=name or str(path))


# -- transforms ---------------------------------------------------------------


def normalize(dataset, method="minmax"):
    """Per-feature affine rescale; constant features map to zero."""
    X = dataset.X
    if method == "minmax":
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        safe = np.where(span == 0.0, 1.0, span)
        Xn = (X - lo) / safe
        Xn[:, span == 0.0] = 0.0
    elif method == "zscore":
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        safe = np.where(sd == 0.0, 1.0, sd)
        Xn = (X - mu) / safe
        Xn[:, sd == 0.0] = 0.0
    elif method == "none":
        Xn = X.copy()
    else:
        raise ConfigError(f"unknown normalization {method!r}")
    return Dataset(Xn, dataset.y.copy(), name=dataset.name)


def shuffle(dataset, seed):
    """Deterministic random reordering of the rows."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(dataset))
    return Dataset(dataset.X[perm], dataset.y[perm], name=dataset.name)


def resample_to_ir(dataset, target_ir, seed):
    """Subsample one class without replacement to hit a target imbalance ratio.

    Keeps the class that would otherwise need growing; realized ratio is
    within one instance's rounding of the target.
    """
    if target_ir < 1.0:
        raise ConfigError(f"target imbalance ratio must be >= 1, got {target_ir}")
    if not dataset.is_binary():
        raise ConfigError("imbalance resampling requires binary labels")
    rng = np.random.default_rng(seed)
    neg_idx = np.flatnonzero(dataset.y == -1)
    pos_idx = np.flatnonzero(dataset.y == 1)
    n_neg, n_pos = len(neg_idx), len(pos_idx)
    current = n_neg / n_pos
    if current < target_ir:
        keep_pos = int(round(n_neg / target_ir))
        if keep_pos < 1:
            raise ConfigError(
                f"target IR {target_ir} unreachable: max achievable is {n_neg} "
                f"({n_neg} negatives over a single positive)"
            )
        pos_idx = rng.choice(pos_idx, size=keep_pos, replace=False)
    elif current > target_ir:
        keep_neg = int(round(n_pos * target_ir))
        if keep_neg > n_neg:  # only via rounding at the boundary
            keep_neg = n_neg
        neg_idx = rng.choice(neg_idx, size=keep_neg, replace=False)
    idx = np.sort(np.concatenate([neg_idx, pos_idx]))
    out = Dataset(dataset.X[idx], dataset.y[idx], name=dataset.name)
    log.info("%s: resampled to IR %.3f (target %.3f)", out.name, out.imbalance_ratio(), target_ir)
    return out


# -- dynamic imbalance schedules ----------------------------------------------


@dataclass(frozen=True)
class Segment:
    end_index: int
    ir_start: float
    ir_end: float

    @property
    def is_ramp(self):
        return self.ir_start != self.ir_end


@dataclass(frozen=True)
class IRSchedule:
    """Imbalance ratio over emission index: constant and ramp segments."""

    segments: tuple

    def __post_init__(self):
        if not self.segments:
            raise ConfigError("schedule needs at least one segment")
        prev = 0
        for seg in self.segments:
            if seg.end_index <= prev:
                raise ConfigError(
                    f"segment end indices must increase: {seg.end_index} after {prev}"
                )
            if seg.ir_start < 1.0 or seg.ir_end < 1.0:
                raise ConfigError("imbalance ratios must be >= 1")
            prev = seg.end_index

    @property
    def length(self):
        return self.segments[-1].end_index

    def ir_at(self, segment, offset, seg_len):
        if not segment.is_ramp:
            return segment.ir_start
        frac = (offset + 1) / seg_len
        return segment.ir_start + (segment.ir_end - segment.ir_start) * frac


def parse_schedule(text):
    """Parse schedule syntax like "1@6000,2.5@11000,4@15000" or "ramp:4..2@15000"."""
    segments = []
    for part in str(text).split(","):
        part = part.strip()
        m = re.fullmatch(r"ramp:([0-9.]+)\.\.([0-9.]+)@(\d+)", part)
        if m:
            segments.append(Segment(int(m.group(3)), float(m.group(1)), float(m.group(2))))
            continue
        m = re.fullmatch(r"([0-9.]+)@(\d+)", part)
        if m:
            ir = float(m.group(1))
            segments.append(Segment(int(m.group(2)), ir, ir))
            continue
        raise ConfigError(f"bad schedule segment {part!r} in {text!r}")
    return IRSchedule(tuple(segments))


def schedule_stream(dataset, schedule, seed):
    """Emit instances under a time-varying imbalance ratio.

    Each emission is negative with probability ir/(1+ir) for the segment's
    (possibly ramping) ratio; classes are drawn without replacement.  Raises
    InfeasibleScheduleError naming the first segment that exhausts a class.
    """
    if isinstance(schedule, str):
        schedule = parse_schedule(schedule)
    if not dataset.is_binary():
        raise ConfigError("imbalance schedules require binary labels")
    rng = np.random.default_rng(seed)
    pools = {
        -1: list(rng.permutation(np.flatnonzero(dataset.y == -1))),
        1: list(rng.permutation(np.flatnonzero(dataset.y == 1))),
    }
    order = []
    prev_end = 0
    for si, seg in enumerate(schedule.segments):
        seg_len = seg.end_index - prev_end
        for off in range(seg_len):
            ir = schedule.ir_at(seg, off, seg_len)
            label = -1 if rng.random() < ir / (1.0 + ir) else 1
            if not pools[label]:
                raise InfeasibleScheduleError(si, label, len(order))
            order.append(pools[label].pop())
        prev_end = seg.end_index
    idx = np.array(order)
    return Dataset(dataset.X[idx], dataset.y[idx], name=dataset.name)


# -- synthetic data -------------------------------------------------------------


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Isotropic Gaussian blobs with exact per-class counts.

    Two classes are labeled (-1, +1) in prior order (index 0 = majority);
    more classes are labeled 0..C-1.
    """

    d: int
    means: tuple
    sigma: float
    priors: tuple
    n: int
    seed: int = 0
    name: str = "gaussian-mixture"

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ConfigError("sigma must be positive")
        if len(self.means) != len(self.priors):
            raise ConfigError("one mean per prior required")
        if abs(sum(self.priors) - 1.0) > 1e-9:
            raise ConfigError("priors must sum to 1")
        for m in self.means:
            if len(m) != self.d:
                raise ConfigError("mean dimension mismatch")


def _largest_remainder_counts(priors, n):
    raw = [p * n for p in priors]
    counts = [math.floor(v) for v in raw]
    short = n - sum(counts)
    order = sorted(range(len(priors)), key=lambda i: raw[i] - counts[i], reverse=True)
    for i in order[:short]:
        counts[i] += 1
    return counts


def gen_gaussian_mixture(spec):
    """Draw the mixture deterministically; class blocks in label order."""
    rng = np.random.default_rng(spec.seed)
    counts = _largest_remainder_counts(spec.priors, spec.n)
    C = len(spec.priors)
    labels = [-1, 1] if C == 2 else list(range(C))
    blocks = []
    ys = []
    for c in range(C):
        block = np.asarray(spec.means[c], dtype=float) + spec.sigma * rng.standard_normal(
            (counts[c], spec.d)
        )
        blocks.append(block)
        ys.append(np.full(counts[c], labels[c], dtype=int))
    return Dataset(np.vstack(blocks), np.concatenate(ys), name=spec.name)


def two_gaussians(d, n, ir, sigma=1.0, seed=0, name=None):
    """Binary blobs at +/- 1/sqrt(d) per coordinate with majority fraction ir/(1+ir)."""
    if ir < 1.0:
        raise ConfigError(f"imbalance ratio must be >= 1, got {ir}")
    mu = np.ones(d) / math.sqrt(d)
    spec = GaussianMixtureSpec(
        d=d,
        means=(tuple(-mu), tuple(mu)),
        sigma=sigma,
        priors=(ir / (1.0 + ir), 1.0 / (1.0 + ir)),
        n=n,
        seed=seed,
        name=name or f"gauss-d{d}-ir{ir:g}",
    )
    return gen_gaussian_mixture(spec)
