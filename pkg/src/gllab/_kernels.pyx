# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sweeps for the projected SOR obstacle solver."""


def psor_sweeps(double[:, ::1] h, double psi, double omega, double denom, Py_ssize_t sweeps):
    """Lexicographic projected SOR sweeps in place on the interior of ``h``.

    Each node update is ``max(psi, h + omega * ((n + s + w + e) / denom - h))``
    with the neighbour sum taken in the order (i-1, i+1, j-1, j+1).
    """
    cdef Py_ssize_t nx = h.shape[0]
    cdef Py_ssize_t ny = h.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double g, old, new
    with nogil:
        for k in range(sweeps):
            for i in range(1, nx - 1):
                for j in range(1, ny - 1):
                    old = h[i, j]
                    g = (h[i - 1, j] + h[i + 1, j] + h[i, j - 1] + h[i, j + 1]) / denom
                    new = old + omega * (g - old)
                    if new < psi:
                        new = psi
                    h[i, j] = new
