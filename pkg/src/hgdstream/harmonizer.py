"""Per-class gradient bookkeeping and the harmonization weight.

The weight for the current instance is computed from accumulators built
strictly from earlier instances: weighted gradient-norm sums S_c, class
counts N_c, and (in dynamic mode) exponentially smoothed class frequencies.
Every returned weight is clamped to [1/rho_max, 2*rho_max], where rho_max is
the running maximum of the observed imbalance-ratio estimate.
"""

from __future__ import annotations

from .exceptions import WarmupIncomplete

NEG = 0  # index of the majority/negative class in binary mode
POS = 1  # index of the minority/positive class


class HarmonizerState:
    """Accumulators for the harmonized-descent weight.

    Binary mode maps label -1 to index 0 and +1 to index 1; multiclass mode
    uses labels 0..C-1 directly.  ``mode`` is "static" (exact count ratio) or
    "dynamic" (exponentially smoothed class frequencies with parameter lam).
    """

    def __init__(self, n_classes=2, binary=True, mode="static", lam=0.99):
        if mode not in ("static", "dynamic"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "dynamic" and not 0.0 < lam < 1.0:
            raise ValueError("smoothing parameter must lie in (0, 1)")
        if binary and n_classes != 2:
            raise ValueError("binary mode implies two classes")
        self.n_classes = n_classes
        self.binary = binary
        self.mode = mode
        self.lam = lam
        self.weighted_sum = [0.0] * n_classes      # S_c = sum of alpha_i * G_i
        self.count = [0] * n_classes               # N_c
        self.effective_norm_sum = [0.0] * n_classes  # sum of ||eta*alpha*grad||^2
        self.raw_norm_sum = [0.0] * n_classes        # sum of ||eta*grad||^2
        self.smoothed_freq = [1.0 / n_classes] * n_classes
        self.rho_max = 1.0

    def _idx(self, label):
        if self.binary:
            return POS if label > 0 else NEG
        if not 0 <= label < self.n_classes:
            raise ValueError(f"label {label} outside 0..{self.n_classes - 1}")
        return label

    # -- imbalance-ratio estimate ------------------------------------------

    def rho(self):
        """Negative-to-positive ratio estimate; updates the running maximum.

        Raises WarmupIncomplete until both classes have been observed.
        """
        if not self.binary:
            raise ValueError("rho is defined for binary streams only")
        if self.count[NEG] == 0 or self.count[POS] == 0:
            raise WarmupIncomplete
        if self.mode == "static":
            r = self.count[NEG] / self.count[POS]
        else:
            if self.smoothed_freq[POS] <= 0.0:
                raise WarmupIncomplete
            r = self.smoothed_freq[NEG] / self.smoothed_freq[POS]
        if r > self.rho_max:
            self.rho_max = r
        return r

    def update_rho_dynamic(self, label):
        """One smoothing step: decay all class frequencies, bump the observed one."""
        lam = self.lam
        c = self._idx(label)
        for k in range(self.n_classes):
            self.smoothed_freq[k] *= lam
        self.smoothed_freq[c] += 1.0 - lam

    # -- weight computation -------------------------------------------------

    def compute_alpha_binary(self, label):
        """Harmonization weight for a binary instance.

        Falls back to 1 while either class is unseen or no gradient mass has
        accumulated; otherwise weights the step by the opposite class's share
        of cumulative weighted gradient mass (scaled by the imbalance ratio
        for minority instances), clamped to [1/rho_max, 2*rho_max].
        """
        s_neg = self.weighted_sum[NEG]
        s_pos = self.weighted_sum[POS]
        denom = s_neg + s_pos
        if denom == 0.0 or self.count[NEG] == 0 or self.count[POS] == 0:
            return 1.0
        rho = self.rho()
        if label > 0:
            raw = 2.0 * rho * s_neg / denom
        else:
            raw = 2.0 * s_pos / denom
        return self._clamp(raw)

    def compute_alpha_multiclass(self, label):
        """Harmonization weight for a multiclass instance.

        Product of the count ratio max_c N_c / N_label and the class's share
        of cumulative weighted gradient mass scaled by C, with the same
        warm-up fallback and clamp as the binary weight.
        """
        c = self._idx(label)
        total = sum(self.weighted_sum)
        if self.count[c] == 0 or total == 0.0:
            return 1.0
        seen = [n for n in self.count if n > 0]
        ratio = max(seen) / min(seen)
        if ratio > self.rho_max:
            self.rho_max = ratio
        raw = (max(self.count) / self.count[c]) * (
            self.n_classes * self.weighted_sum[c] / total
        )
        return self._clamp(raw)

    def compute_alpha(self, label):
        if self.binary:
            return self.compute_alpha_binary(label)
        return self.compute_alpha_multiclass(label)

    def _clamp(self, raw):
        lo = 1.0 / self.rho_max
        hi = 2.0 * self.rho_max
        if raw < lo:
            return lo
        if raw > hi:
            return hi
        return raw

    # -- bookkeeping ----------------------------------------------------------

    def record_step(self, label, alpha, grad_norm_sq, effective_norm_sq):
        """Fold one completed step into the accumulators.

        grad_norm_sq is the eta-scaled squared gradient norm; effective_norm_sq
        is the squared norm of the update actually applied (weight included).
        Counts advance even for zero-gradient steps.
        """
        if alpha < 0.0 or grad_norm_sq < 0.0:
            raise ValueError("alpha and grad_norm_sq must be nonnegative")
        c = self._idx(label)
        self.weighted_sum[c] += alpha * grad_norm_sq
        self.count[c] += 1
        self.effective_norm_sum[c] += effective_norm_sq
        self.raw_norm_sum[c] += grad_norm_sq
        if self.mode == "dynamic":
            self.update_rho_dynamic(label)

    # -- gradient imbalance -----------------------------------------------------

    def gi(self):
        """Majority/minority ratio of cumulative applied-step norms.

        None while either class has contributed no update mass (and for
        multiclass states, where the two-class ratio is not defined).
        """
        if not self.binary:
            return None
        num = self.effective_norm_sum[NEG]
        den = self.effective_norm_sum[POS]
        if num == 0.0 or den == 0.0:
            return None
        return num / den

    def gi_raw(self):
        """Same ratio over unweighted eta-scaled gradient norms."""
        if not self.binary:
            return None
        num = self.raw_norm_sum[NEG]
        den = self.raw_norm_sum[POS]
        if num == 0.0 or den == 0.0:
            return None
        return num / den


def export_alpha_trace(path, rows):
    """Write a (t, label, alpha, G, GI) trace as CSV. GI may be None."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "label", "alpha", "G", "GI"])
        for t, label, alpha, g, gi in rows:
            w.writerow([t, label, repr(alpha), repr(g), "" if gi is None else repr(gi)])


def load_alpha_trace(path):
    """Read back a trace written by export_alpha_trace."""
    import csv

    rows = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["t", "label", "alpha", "G", "GI"]:
            raise ValueError(f"unexpected trace header: {header}")
        for rec in r:
            t, label, alpha, g, gi = rec
            rows.append(
                (int(t), int(label), float(alpha), float(g), None if gi == "" else float(gi))
            )
    return rows
