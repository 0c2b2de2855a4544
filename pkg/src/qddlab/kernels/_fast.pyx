# cython: language_level=3
"""Compiled hot kernels: same contracts as ``qddlab.kernels.pure``.

The scalars are opaque Python objects (complex or gmpy2.mpc), so arithmetic
still goes through the C API; the win over the pure kernels is the removal
of interpreter dispatch and index bookkeeping in the inner loops.
"""

BACKEND = "compiled"


def matmul(a, b, Py_ssize_t n, Py_ssize_t m, Py_ssize_t p):
    """(n x m) @ (m x p) -> flat list of length n*p."""
    cdef list out = [None] * (n * p)
    cdef Py_ssize_t i, j, k, im
    cdef object s
    for i in range(n):
        im = i * m
        for j in range(p):
            s = a[im] * b[j]
            for k in range(1, m):
                s = s + a[im + k] * b[k * p + j]
            out[i * p + j] = s
    return out


def kron(a, Py_ssize_t ar, Py_ssize_t ac, b, Py_ssize_t br, Py_ssize_t bc):
    """Kronecker product of (ar x ac) and (br x bc) -> flat list."""
    cdef list out = [None] * (ar * ac * br * bc)
    cdef Py_ssize_t i, j, k, l, row
    cdef object x
    for i in range(ar):
        for k in range(br):
            row = (i * br + k) * ac * bc
            for j in range(ac):
                x = a[i * ac + j]
                for l in range(bc):
                    out[row + j * bc + l] = x * b[k * bc + l]
    return out


def frob_sq(a, zero):
    """Sum of |a_ij|^2 as a real scalar; `zero` fixes the accumulator type."""
    cdef object acc = zero
    cdef object x, re, im
    for x in a:
        re = x.real
        im = x.imag
        acc = acc + re * re + im * im
    return acc


def rot_cols(list a, Py_ssize_t n, Py_ssize_t rows, Py_ssize_t p, Py_ssize_t q,
             c, s, sbar):
    """In-place A <- A @ J on a flat (rows x n) list."""
    cdef Py_ssize_t i, ip, iq
    cdef object ap, aq
    ip = p
    iq = q
    for i in range(rows):
        ap = a[ip]
        aq = a[iq]
        a[ip] = ap * c - aq * sbar
        a[iq] = ap * s + aq * c
        ip += n
        iq += n


def rot_rows(list a, Py_ssize_t n, Py_ssize_t p, Py_ssize_t q, c, s, sbar):
    """In-place A <- J^dagger @ A on a flat (n-column) list."""
    cdef Py_ssize_t k, ip, iq
    cdef object ap, aq
    ip = p * n
    iq = q * n
    for k in range(n):
        ap = a[ip + k]
        aq = a[iq + k]
        a[ip + k] = ap * c - aq * s
        a[iq + k] = ap * sbar + aq * c
