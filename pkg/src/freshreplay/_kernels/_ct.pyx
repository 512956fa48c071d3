# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the sum/min segment trees and the priority refresh.

Mirrors ``_py`` exactly; see that module for the array layout contract.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport HUGE_VAL, exp, pow

BACKEND_NAME = "compiled"

DECAY_FLOOR = 1e-300

cdef double _DECAY_FLOOR = 1e-300


def set_leaf(double[::1] sum_tree, double[::1] min_tree, Py_ssize_t base,
             Py_ssize_t idx, double value):
    cdef Py_ssize_t i = base + idx
    cdef Py_ssize_t left
    cdef double a, b
    sum_tree[i] = value
    min_tree[i] = value if value > 0.0 else HUGE_VAL
    i >>= 1
    while i >= 1:
        left = 2 * i
        sum_tree[i] = sum_tree[left] + sum_tree[left + 1]
        a = min_tree[left]
        b = min_tree[left + 1]
        min_tree[i] = a if a < b else b
        i >>= 1


def prefix_find(double[::1] sum_tree, Py_ssize_t base, double x):
    cdef Py_ssize_t i = 1
    cdef Py_ssize_t left
    cdef double left_sum
    while i < base:
        left = 2 * i
        left_sum = sum_tree[left]
        if x < left_sum:
            i = left
        else:
            x -= left_sum
            i = left + 1
    return i - base


def prefix_find_batch(double[::1] sum_tree, Py_ssize_t base, double[::1] xs):
    cdef Py_ssize_t n = xs.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t k, i, left
    cdef double x, left_sum
    for k in range(n):
        x = xs[k]
        i = 1
        while i < base:
            left = 2 * i
            left_sum = sum_tree[left]
            if x < left_sum:
                i = left
            else:
                x -= left_sum
                i = left + 1
        out[k] = i - base
    return out_arr


cdef void _rebuild(double[::1] sum_tree, double[::1] min_tree, Py_ssize_t base) noexcept:
    cdef Py_ssize_t n = base
    cdef Py_ssize_t i, left
    cdef double a, b
    while n > 1:
        for i in range(n >> 1, n):
            left = 2 * i
            sum_tree[i] = sum_tree[left] + sum_tree[left + 1]
            a = min_tree[left]
            b = min_tree[left + 1]
            min_tree[i] = a if a < b else b
        n >>= 1


def rebuild(double[::1] sum_tree, double[::1] min_tree, Py_ssize_t base):
    _rebuild(sum_tree, min_tree, base)


def decay_compute(double[::1] bases, double[::1] ages, double tau, double alpha,
                  double[::1] decays_out, double[::1] effectives_out,
                  double[::1] leaves_out):
    cdef Py_ssize_t n = bases.shape[0]
    cdef Py_ssize_t k
    cdef double d, eff
    with nogil:
        for k in range(n):
            d = exp(-(ages[k] / tau))
            if d < _DECAY_FLOOR:
                d = _DECAY_FLOOR
            eff = bases[k] * d
            decays_out[k] = d
            effectives_out[k] = eff
            leaves_out[k] = pow(eff, alpha)
