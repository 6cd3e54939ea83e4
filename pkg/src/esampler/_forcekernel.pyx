# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loop for pairwise inverse-power force accumulation.

The arithmetic here is kept operation-for-operation identical to the pure
NumPy fallback (see ``_force_fallback.py``): squared distances accumulate
per coordinate, integer powers of r are built by repeated multiplication,
and contributions are summed in ascending source order. Together with
``-ffp-contract=off`` this makes both backends bit-identical.
"""

from libc.math cimport sqrt


cpdef void accumulate(const double[:, ::1] src, const double[::1] q_src,
                      const double[:, ::1] field, const double[::1] q_field,
                      double constant, double min_dist,
                      double[:, ::1] out, Py_ssize_t j0, Py_ssize_t j1) noexcept nogil:
    """Add sum_i constant*q_src[i]*q_field[j]*(field[j]-src[i])/r^d to out[j].

    Pairs at exactly zero separation contribute nothing (covers both the
    self-pair when src is field and a particle sitting on a grid point);
    separations below ``min_dist`` are clamped to it.
    """
    cdef Py_ssize_t n_src = src.shape[0]
    cdef Py_ssize_t dim = src.shape[1]
    cdef Py_ssize_t i, j, k, p
    cdef double r2, r, rd, w, dk

    for j in range(j0, j1):
        for i in range(n_src):
            r2 = 0.0
            for k in range(dim):
                dk = field[j, k] - src[i, k]
                r2 += dk * dk
            if r2 == 0.0:
                continue
            r = sqrt(r2)
            if r < min_dist:
                r = min_dist
            rd = r
            for p in range(dim - 1):
                rd = rd * r
            w = ((constant * q_src[i]) * q_field[j]) / rd
            for k in range(dim):
                out[j, k] += w * (field[j, k] - src[i, k])
