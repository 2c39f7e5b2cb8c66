"""Pure-numpy fallback for the Monte Carlo trial kernel.

Mirrors the compiled extension in ``_kernels.pyx``: given the records that
survive a removal trial, produce the weighted agreement for a stack of
weighting schemes in one pass.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


class TrialKernel:
    """Per-trial agreement evaluator over a fixed table layout.

    weight_table has one row per scheme; column n holds the weight of an
    item with n surviving annotations (0 for n < 2).
    """

    def __init__(
        self,
        item_idx: np.ndarray,
        label_idx: np.ndarray,
        n_items: int,
        n_classes: int,
        weight_table: np.ndarray,
    ):
        self.n_items = int(n_items)
        self.n_classes = int(n_classes)
        self.weight_table = np.ascontiguousarray(weight_table, dtype=np.float64)
        self._flat = item_idx.astype(np.int64) * self.n_classes + label_idx.astype(np.int64)

    def spa_given_kept(self, kept: np.ndarray) -> tuple[np.ndarray, int, int]:
        """Weighted agreement per scheme for one kept-mask; NaN where the
        scheme's total weight is zero. Also returns the computable item
        count and the number of annotations sitting on computable items."""
        I, C = self.n_items, self.n_classes
        counts = np.bincount(self._flat[kept.view(bool)], minlength=I * C).reshape(I, C)
        n = counts.sum(axis=1)
        pair_sum = np.einsum("ij,ij->i", counts, counts) - n
        ok = n >= 2
        agreement = np.zeros(I)
        n_ok = n[ok]
        agreement[ok] = pair_sum[ok] / (n_ok * (n_ok - 1.0))
        weights = self.weight_table[:, n]
        weight_sum = weights.sum(axis=1)
        values = np.full(self.weight_table.shape[0], np.nan)
        positive = weight_sum > 0.0
        values[positive] = (weights[positive] @ agreement) / weight_sum[positive]
        return values, int(ok.sum()), int(n_ok.sum())
