"""Precision-generic dense complex matrices.

``CMatrix`` stores a flat row-major tuple of scalar objects whose type is
fixed by a :class:`~qddlab.precision.PrecisionContext`. Matrices are
immutable after construction: every operation allocates a fresh result, so
values can be shared freely between worker processes or threads.

The eigensolver is a cyclic Jacobi iteration with complex rotations. It is
slower than LAPACK on hardware floats but is the simplest algorithm that is
correct at *any* precision, and at dimension 32 it is entirely adequate.
Singular values are obtained from the eigenvalues of A^dagger A, clamped at
zero before the square root.

All tolerances below scale with ``eps * dim`` of the owning context, never
with absolute constants, so identical checks pass at every precision.
"""
from __future__ import annotations

from typing import NamedTuple

from . import kernels as K
from .errors import BadDimension, NoConvergence, NotHermitian
from .precision import PrecisionContext

#: dimension guard for the eigensolver; override per call if really needed
EIG_DIM_CAP = 64

#: default sweep limit for the Jacobi iteration
MAX_JACOBI_SWEEPS = 100


class Norms(NamedTuple):
    frobenius: object
    nuclear: object
    spectral: object


class CMatrix:
    """Immutable dense complex matrix at a fixed working precision."""

    __slots__ = ("ctx", "rows", "cols", "_d")

    def __init__(self, ctx: PrecisionContext, rows: int, cols: int, data,
                 _raw: bool = False):
        if rows <= 0 or cols <= 0:
            raise BadDimension(f"invalid shape {rows}x{cols}")
        data = tuple(data) if _raw else tuple(ctx.from_complex(z) for z in data)
        if len(data) != rows * cols:
            raise BadDimension(
                f"shape {rows}x{cols} needs {rows * cols} entries, got {len(data)}")
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "_d", data)

    def __setattr__(self, name, value):
        raise AttributeError("CMatrix is immutable")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zeros(cls, ctx, rows, cols=None):
        cols = rows if cols is None else cols
        z = ctx.cplx(0)
        return cls(ctx, rows, cols, [z] * (rows * cols), _raw=True)

    @classmethod
    def identity(cls, ctx, n):
        z = ctx.cplx(0)
        one = ctx.cplx(1)
        data = [z] * (n * n)
        for i in range(n):
            data[i * n + i] = one
        return cls(ctx, n, n, data, _raw=True)

    @classmethod
    def from_rows(cls, ctx, rows_of_entries):
        rows = len(rows_of_entries)
        cols = len(rows_of_entries[0])
        flat = [z for row in rows_of_entries for z in row]
        return cls(ctx, rows, cols, flat)

    @classmethod
    def diagonal(cls, ctx, values):
        n = len(values)
        m = cls.zeros(ctx, n, n)
        data = list(m._d)
        for i, v in enumerate(values):
            data[i * n + i] = ctx.from_complex(v)
        return cls(ctx, n, n, data, _raw=True)

    # -- element access --------------------------------------------------------

    def __getitem__(self, idx):
        i, j = idx
        return self._d[i * self.cols + j]

    def row(self, i):
        return self._d[i * self.cols:(i + 1) * self.cols]

    def to_lists(self):
        """Nested lists of hardware ``complex`` (lossy at high precision)."""
        c = self.ctx.to_complex
        return [[c(z) for z in self.row(i)] for i in range(self.rows)]

    @property
    def flat(self):
        return self._d

    def __repr__(self):
        return f"CMatrix({self.rows}x{self.cols}, digits={self.ctx.digits})"

    # -- arithmetic -------------------------------------------------------------

    def _check_ctx(self, other):
        if self.ctx != other.ctx:
            raise ValueError("matrices built under different precision contexts")

    def __add__(self, other):
        self._check_ctx(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise BadDimension("shape mismatch in addition")
        self.ctx.activate()
        data = [x + y for x, y in zip(self._d, other._d)]
        return CMatrix(self.ctx, self.rows, self.cols, data, _raw=True)

    def __sub__(self, other):
        self._check_ctx(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise BadDimension("shape mismatch in subtraction")
        self.ctx.activate()
        data = [x - y for x, y in zip(self._d, other._d)]
        return CMatrix(self.ctx, self.rows, self.cols, data, _raw=True)

    def __neg__(self):
        self.ctx.activate()
        return CMatrix(self.ctx, self.rows, self.cols,
                       [-x for x in self._d], _raw=True)

    def scale(self, s):
        """Scalar multiple; `s` may be any scalar coercible to this context."""
        self.ctx.activate()
        s = self.ctx.from_complex(s)
        return CMatrix(self.ctx, self.rows, self.cols,
                       [s * x for x in self._d], _raw=True)

    def __mul__(self, s):
        return self.scale(s)

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check_ctx(other)
        if self.cols != other.rows:
            raise BadDimension(
                f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        self.ctx.activate()
        data = K.matmul(self._d, other._d, self.rows, self.cols, other.cols)
        return CMatrix(self.ctx, self.rows, other.cols, data, _raw=True)

    def adjoint(self):
        """Conjugate transpose."""
        self.ctx.activate()
        n, m = self.rows, self.cols
        d = self._d
        data = [d[i * m + j].conjugate() for j in range(m) for i in range(n)]
        return CMatrix(self.ctx, m, n, data, _raw=True)

    @property
    def H(self):
        return self.adjoint()

    def trace(self):
        if self.rows != self.cols:
            raise BadDimension("trace of a non-square matrix")
        self.ctx.activate()
        acc = self.ctx.cplx(0)
        for i in range(self.rows):
            acc = acc + self._d[i * self.cols + i]
        return acc

    # -- norms & checks -----------------------------------------------------------

    def frobenius_norm(self):
        self.ctx.activate()
        return self.ctx.sqrt(K.frob_sq(self._d, self.ctx.real(0)))

    def is_hermitian(self, factor: float = 10) -> bool:
        """||A - A^dagger||_F <= factor * eps * ||A||_F."""
        if self.rows != self.cols:
            return False
        diff = self - self.adjoint()
        return diff.frobenius_norm() <= factor * self.ctx.eps * self.frobenius_norm()

    def unitary_residual(self):
        """||A^dagger A - I||_F (the quantity compared against tol_u)."""
        if self.rows != self.cols:
            raise BadDimension("unitarity check needs a square matrix")
        return (self.adjoint() @ self - CMatrix.identity(self.ctx, self.rows)
                ).frobenius_norm()

    def is_unitary(self) -> bool:
        return self.unitary_residual() <= unitary_tolerance(self.ctx, self.rows)


def unitary_tolerance(ctx: PrecisionContext, dim: int):
    """tol_u = 100 * eps * dim."""
    return 100 * ctx.eps * ctx.real(dim)


def kron(a: CMatrix, b: CMatrix) -> CMatrix:
    """Kronecker product; dimensions multiply."""
    a._check_ctx(b)
    a.ctx.activate()
    data = K.kron(a._d, a.rows, a.cols, b._d, b.rows, b.cols)
    return CMatrix(a.ctx, a.rows * b.rows, a.cols * b.cols, data, _raw=True)


def hermitian_eig(h: CMatrix, vectors: bool = True,
                  max_sweeps: int = MAX_JACOBI_SWEEPS,
                  dim_cap: int = EIG_DIM_CAP):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with real eigenvalues in ascending order
    and unitary ``V`` whose columns are the matching eigenvectors, so that
    ``h = V diag(eigenvalues) V^dagger``. With ``vectors=False`` the second
    element is ``None`` (saves a third of the work when only the spectrum
    is needed).

    Raises
    ------
    NotHermitian
        if ``h`` fails the 10*eps Hermiticity check.
    NoConvergence
        if the off-diagonal mass has not reached eps * ||h||_F after
        ``max_sweeps`` sweeps.
    """
    ctx = h.ctx
    if h.rows != h.cols:
        raise BadDimension("eigendecomposition needs a square matrix")
    n = h.rows
    if n > dim_cap:
        raise BadDimension(f"dimension {n} exceeds the eigensolver cap {dim_cap}")
    if not h.is_hermitian():
        raise NotHermitian("matrix failed the Hermiticity tolerance check")

    ctx.activate()
    # work on the Hermitian average so tiny asymmetries cannot bias the sweep
    hH = h.adjoint()
    a = [(x + y) * ctx.real("0.5") for x, y in zip(h._d, hH._d)]
    v = list(CMatrix.identity(ctx, n)._d) if vectors else None

    scale = ctx.sqrt(K.frob_sq(a, ctx.real(0)))
    zero_r = ctx.real(0)
    if scale == zero_r:
        vals = [zero_r] * n
        return vals, (CMatrix.identity(ctx, n) if vectors else None)

    conv = ctx.eps * scale          # target for the off-diagonal Frobenius mass
    skip = conv / (2 * n)           # pivots below this cannot spoil convergence
    skip_sq = skip * skip
    one = ctx.real(1)
    half = ctx.real("0.5")

    for _ in range(max_sweeps):
        off_sq = zero_r
        for p in range(n):
            base = p * n
            for q in range(p + 1, n):
                x = a[base + q]
                re, im = x.real, x.imag
                off_sq = off_sq + re * re + im * im
        if 2 * off_sq <= conv * conv:
            break
        for p in range(n):
            for q in range(p + 1, n):
                beta = a[p * n + q]
                b_sq = beta.real * beta.real + beta.imag * beta.imag
                if b_sq <= skip_sq:
                    continue
                babs = ctx.sqrt(b_sq)
                alpha = a[p * n + p].real
                gamma = a[q * n + q].real
                zeta = (alpha - gamma) * half / babs
                if zeta == zero_r:
                    t = one
                else:
                    r = ctx.sqrt(zeta * zeta + one)
                    t = -one / (zeta + ctx.copysign(r, zeta))
                c = one / ctx.sqrt(one + t * t)
                s = beta * (t * c / babs)     # includes the phase of beta
                sbar = s.conjugate()
                K.rot_cols(a, n, n, p, q, c, s, sbar)
                K.rot_rows(a, n, p, q, c, s, sbar)
                # pivot entries are exactly zero / real in exact arithmetic
                zc = ctx.cplx(0)
                a[p * n + q] = zc
                a[q * n + p] = zc
                a[p * n + p] = ctx.cplx(a[p * n + p].real)
                a[q * n + q] = ctx.cplx(a[q * n + q].real)
                if vectors:
                    K.rot_cols(v, n, n, p, q, c, s, sbar)
    else:
        raise NoConvergence(
            f"Jacobi sweep limit {max_sweeps} exceeded at dimension {n}")

    vals = [a[i * n + i].real for i in range(n)]
    order = sorted(range(n), key=vals.__getitem__)
    vals_sorted = [vals[i] for i in order]
    if not vectors:
        return vals_sorted, None
    vdata = [v[i * n + j] for i in range(n) for j in order]
    return vals_sorted, CMatrix(ctx, n, n, vdata, _raw=True)


def singular_values(a: CMatrix):
    """Singular values in descending order, via the spectrum of A^dagger A."""
    ctx = a.ctx
    ctx.activate()
    gram = a.adjoint() @ a
    vals, _ = hermitian_eig(gram, vectors=False)
    zero = ctx.real(0)
    out = [ctx.sqrt(x if x > zero else zero) for x in vals]
    out.reverse()
    return out


def norms(a: CMatrix) -> Norms:
    """Frobenius, nuclear (sum of singular values) and spectral norms."""
    ctx = a.ctx
    ctx.activate()
    sv = singular_values(a)
    nuclear = ctx.real(0)
    for s in sv:
        nuclear = nuclear + s
    return Norms(frobenius=a.frobenius_norm(), nuclear=nuclear, spectral=sv[0])
