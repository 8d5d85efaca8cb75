# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled digit kernels, same contracts as _kernels_py."""

from libc.stdlib cimport malloc, free


def conv_trunc(tuple a, tuple b, Py_ssize_t n, long long p):
    cdef Py_ssize_t la = len(a), lb = len(b), i, j, lim
    cdef long long ai
    if n <= 0:
        return ()
    cdef long long *A = <long long *> malloc(la * sizeof(long long) + 1)
    cdef long long *B = <long long *> malloc(lb * sizeof(long long) + 1)
    cdef long long *out = <long long *> malloc(n * sizeof(long long))
    try:
        for i in range(la):
            A[i] = a[i]
        for j in range(lb):
            B[j] = b[j]
        for i in range(n):
            out[i] = 0
        for i in range(min(la, n)):
            ai = A[i]
            if ai == 0:
                continue
            lim = min(lb, n - i)
            for j in range(lim):
                out[i + j] = (out[i + j] + ai * B[j]) % p
        return tuple([out[i] for i in range(n)])
    finally:
        free(A)
        free(B)
        free(out)


def inv_trunc(tuple a, Py_ssize_t n, long long p):
    cdef Py_ssize_t la = len(a), k, j, lim
    cdef long long s, a0inv
    if n <= 0:
        return ()
    a0inv = pow(a[0], p - 2, p)
    cdef long long *A = <long long *> malloc(la * sizeof(long long) + 1)
    cdef long long *out = <long long *> malloc(n * sizeof(long long))
    try:
        for j in range(la):
            A[j] = a[j]
        for k in range(n):
            s = 1 if k == 0 else 0
            lim = min(k, la - 1)
            for j in range(1, lim + 1):
                s = (s - A[j] * out[k - j]) % p
            out[k] = ((s % p + p) % p * a0inv) % p
        return tuple([out[k] for k in range(n)])
    finally:
        free(A)
        free(out)


def add_shifted(tuple a, tuple b, Py_ssize_t shift, Py_ssize_t n, long long p):
    cdef Py_ssize_t i, j
    cdef list out = [0] * n
    for i in range(min(len(a), n)):
        out[i] = a[i]
    for j in range(min(len(b), n - shift)):
        out[j + shift] = (out[j + shift] + b[j]) % p
    return tuple([c % p for c in out])
