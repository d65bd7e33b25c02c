# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels; must return bit-identical results to _pure.py."""

from libc.math cimport sqrt

cdef unsigned long long FNV_OFFSET = 0xCBF29CE484222325ULL
cdef unsigned long long FNV_PRIME = 0x100000001B3ULL


def trigram_embed(str text, int dim):
    """Hashed character-trigram term frequencies, L2-normalized."""
    cdef list counts = [0] * dim
    cdef Py_ssize_t n = len(text)
    cdef Py_ssize_t i, j, blen
    cdef unsigned long long h
    cdef bytes tri
    cdef const unsigned char[:] view
    if n >= 3:
        for i in range(n - 2):
            tri = text[i : i + 3].encode("utf-8")
            blen = len(tri)
            h = FNV_OFFSET
            for j in range(blen):
                h = (h ^ (<unsigned char> tri[j])) * FNV_PRIME
            counts[<Py_ssize_t> (h % <unsigned long long> dim)] += 1
    cdef double acc = 0.0
    cdef long c
    for i in range(dim):
        c = counts[i]
        acc += <double> c * <double> c
    cdef double norm = sqrt(acc)
    if norm == 0.0:
        return [0.0] * dim
    cdef list out = [0.0] * dim
    for i in range(dim):
        out[i] = (<double> (<long> counts[i])) / norm
    return out


def matmul_cycles(long long m, long long k, long long n,
                  long long rows, long long cols, long long n_arrays):
    """Cycle count for an MxKxN matmul tiled onto n_arrays rows x cols arrays."""
    cdef long long tiles = ((m + rows - 1) // rows) * ((n + cols - 1) // cols)
    cdef long long per_tile = k + rows + cols - 1
    return ((tiles + n_arrays - 1) // n_arrays) * per_tile
