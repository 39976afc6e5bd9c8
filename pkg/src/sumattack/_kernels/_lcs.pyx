# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled longest-common-subsequence kernel over integer token ids."""

from libc.stdlib cimport free, malloc


def lcs_length(int[::1] a, int[::1] b):
    """Length of the longest common subsequence of two int sequences.

    Two-row dynamic program, O(len(a)*len(b)) time, O(min) memory.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    if n == 0 or m == 0:
        return 0
    # keep the inner dimension small
    if m > n:
        a, b = b, a
        n, m = m, n
    cdef int *prev = <int *> malloc((m + 1) * sizeof(int))
    cdef int *curr = <int *> malloc((m + 1) * sizeof(int))
    if prev == NULL or curr == NULL:
        free(prev)
        free(curr)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef int ai, best
    cdef int *tmp
    try:
        for j in range(m + 1):
            prev[j] = 0
        for i in range(n):
            ai = a[i]
            curr[0] = 0
            for j in range(m):
                if ai == b[j]:
                    curr[j + 1] = prev[j] + 1
                else:
                    best = prev[j + 1]
                    if curr[j] > best:
                        best = curr[j]
                    curr[j + 1] = best
            tmp = prev
            prev = curr
            curr = tmp
        return prev[m]
    finally:
        free(prev)
        free(curr)
