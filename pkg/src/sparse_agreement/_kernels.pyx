# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo trial kernel.

Same contract as the pure-numpy fallback in ``_kernels_py``: accumulate
per-item class counts over the kept records, turn them into per-item
agreements, and reduce to one weighted mean per scheme row.
"""

import numpy as np

from libc.math cimport NAN

NAME = "cython"


cdef class TrialKernel:
    cdef const int[::1] item_idx
    cdef const int[::1] label_idx
    cdef const double[:, ::1] weight_table
    cdef long long[::1] counts
    cdef long long[::1] per_item_n
    cdef double[::1] weight_sum
    cdef double[::1] weighted
    cdef Py_ssize_t n_records, n_items, n_classes, n_schemes, max_n

    def __init__(self, item_idx, label_idx, n_items, n_classes, weight_table):
        self.item_idx = np.ascontiguousarray(item_idx, dtype=np.int32)
        self.label_idx = np.ascontiguousarray(label_idx, dtype=np.int32)
        self.weight_table = np.ascontiguousarray(weight_table, dtype=np.float64)
        self.n_records = self.item_idx.shape[0]
        self.n_items = n_items
        self.n_classes = n_classes
        self.n_schemes = self.weight_table.shape[0]
        self.max_n = self.weight_table.shape[1] - 1
        self.counts = np.zeros(self.n_items * self.n_classes, dtype=np.int64)
        self.per_item_n = np.zeros(self.n_items, dtype=np.int64)
        self.weight_sum = np.zeros(self.n_schemes, dtype=np.float64)
        self.weighted = np.zeros(self.n_schemes, dtype=np.float64)

    def spa_given_kept(self, kept):
        """Weighted agreement per scheme row for one kept-mask; NaN where the
        scheme's total weight is zero. Also returns the computable item
        count and the number of annotations sitting on computable items."""
        cdef const unsigned char[::1] mask = np.ascontiguousarray(kept, dtype=np.uint8)
        if mask.shape[0] != self.n_records:
            raise ValueError("kept mask does not match the record count")
        out = np.empty(self.n_schemes, dtype=np.float64)
        cdef double[::1] values = out
        cdef long long pairable = 0
        cdef Py_ssize_t computable = self._run(mask, values, &pairable)
        return out, int(computable), int(pairable)

    cdef Py_ssize_t _run(self, const unsigned char[::1] mask, double[::1] values,
                         long long* pairable) except -1:
        cdef Py_ssize_t r, i, c, s, base, computable = 0
        cdef long long n, cnt, pair_sum
        cdef double agreement, w

        self.counts[:] = 0
        self.per_item_n[:] = 0
        self.weight_sum[:] = 0.0
        self.weighted[:] = 0.0

        for r in range(self.n_records):
            if mask[r]:
                i = self.item_idx[r]
                self.counts[i * self.n_classes + self.label_idx[r]] += 1
                self.per_item_n[i] += 1

        for i in range(self.n_items):
            n = self.per_item_n[i]
            if n < 2:
                continue
            if n > self.max_n:
                raise ValueError("item depth exceeds the weight table")
            computable += 1
            pairable[0] += n
            base = i * self.n_classes
            pair_sum = 0
            for c in range(self.n_classes):
                cnt = self.counts[base + c]
                pair_sum += cnt * (cnt - 1)
            agreement = <double>pair_sum / <double>(n * (n - 1))
            for s in range(self.n_schemes):
                w = self.weight_table[s, n]
                if w != 0.0:
                    self.weight_sum[s] += w
                    self.weighted[s] += w * agreement

        for s in range(self.n_schemes):
            if self.weight_sum[s] > 0.0:
                values[s] = self.weighted[s] / self.weight_sum[s]
            else:
                values[s] = NAN
        return computable
