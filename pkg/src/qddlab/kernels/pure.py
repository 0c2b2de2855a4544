"""Pure-Python hot kernels.

All functions operate on flat row-major sequences of scalar objects
(``complex`` or ``gmpy2.mpc``) and never touch the precision context;
callers activate it first. The compiled twin in ``_fast.pyx`` implements
the identical signatures.
"""
from operator import mul

BACKEND = "pure"


def matmul(a, b, n, m, p):
    """(n x m) @ (m x p) -> flat list of length n*p."""
    cols = [b[j::p] for j in range(p)]
    out = []
    extend = out.extend
    for i in range(n):
        row = a[i * m:(i + 1) * m]
        extend(sum(map(mul, row, col)) for col in cols)
    return out


def kron(a, ar, ac, b, br, bc):
    """Kronecker product of (ar x ac) and (br x bc) -> flat list."""
    out = []
    extend = out.extend
    for i in range(ar):
        arow = a[i * ac:(i + 1) * ac]
        for k in range(br):
            brow = b[k * bc:(k + 1) * bc]
            for x in arow:
                extend(x * y for y in brow)
    return out


def frob_sq(a, zero):
    """Sum of |a_ij|^2 as a real scalar; `zero` fixes the accumulator type."""
    acc = zero
    for x in a:
        re = x.real
        im = x.imag
        acc = acc + re * re + im * im
    return acc


def rot_cols(a, n, rows, p, q, c, s, sbar):
    """In-place A <- A @ J on a flat (rows x n) list.

    J is the identity apart from J[p,p]=J[q,q]=c (real), J[p,q]=s,
    J[q,p]=-conj(s).
    """
    ip = p
    iq = q
    for _ in range(rows):
        ap = a[ip]
        aq = a[iq]
        a[ip] = ap * c - aq * sbar
        a[iq] = ap * s + aq * c
        ip += n
        iq += n


def rot_rows(a, n, p, q, c, s, sbar):
    """In-place A <- J^dagger @ A on a flat (n-column) list."""
    ip = p * n
    iq = q * n
    for k in range(n):
        ap = a[ip + k]
        aq = a[iq + k]
        a[ip + k] = ap * c - aq * s
        a[iq + k] = ap * sbar + aq * c
