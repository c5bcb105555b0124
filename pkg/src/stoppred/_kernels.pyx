# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scan kernel; see _kernels_py for the reference semantics."""

import numpy as np


def scan_first_accept(double[:, ::1] values, double[:, ::1] qvals, double[:, ::1] thresh):
    cdef Py_ssize_t rows = values.shape[0]
    cdef Py_ssize_t n = values.shape[1]
    pos_arr = np.full(rows, -1, dtype=np.int64)
    acc_arr = np.zeros(rows, dtype=np.float64)
    cdef long long[::1] pos = pos_arr
    cdef double[::1] acc = acc_arr
    cdef Py_ssize_t i, j
    cdef double prevmax, x
    for i in range(rows):
        prevmax = 0.0
        for j in range(n):
            x = values[i, j]
            if x >= prevmax:
                if qvals[i, j] > thresh[i, j] or thresh[i, j] == 0.0:
                    pos[i] = j
                    acc[i] = x
                    break
                prevmax = x
    return pos_arr, acc_arr
