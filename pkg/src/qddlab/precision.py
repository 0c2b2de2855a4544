"""Working-precision control and the scalar layer underneath all matrices.

Two scalar backends are selected at construction time:

* ``"double"`` — hardware ``complex``/``float``; fast, 15 usable digits.
* ``"mp"``     — gmpy2 ``mpc``/``mpfr`` at an arbitrary decimal digit count.

The error signals measured by this package behave like (J*tau)**n next to
O(1) matrix entries, so resolving them at small J*tau requires far more
relative precision than 64-bit floats provide; the mp backend is the default
for anything beyond quick smoke checks.

gmpy2 reads its precision from a thread-local context, so every public
matrix operation calls :meth:`PrecisionContext.activate` on entry. Contexts
are immutable value objects; matrices carry a reference to the context they
were built with and refuse to mix with another one.
"""
from __future__ import annotations

import math

import gmpy2

_MIN_DIGITS = 15
_LOG2_10 = 3.321928094887362
_GUARD_BITS = 10


class PrecisionContext:
    """Decimal working precision plus the scalar operations bound to it.

    Parameters
    ----------
    digits:
        Decimal digits of working precision, at least 15.
    backend:
        ``"auto"`` picks hardware doubles at exactly 15 digits and gmpy2
        above; ``"double"``/``"mp"`` force a backend.
    """

    __slots__ = ("digits", "backend", "bits")

    def __init__(self, digits: int = 30, backend: str = "auto"):
        digits = int(digits)
        if digits < _MIN_DIGITS:
            raise ValueError(f"digits must be >= {_MIN_DIGITS}, got {digits}")
        if backend == "auto":
            backend = "double" if digits <= _MIN_DIGITS else "mp"
        if backend not in ("double", "mp"):
            raise ValueError(f"unknown backend {backend!r}")
        object.__setattr__(self, "digits", digits)
        object.__setattr__(self, "backend", backend)
        object.__setattr__(self, "bits", int(digits * _LOG2_10) + _GUARD_BITS)

    def __setattr__(self, name, value):
        raise AttributeError("PrecisionContext is immutable")

    def __eq__(self, other):
        return (isinstance(other, PrecisionContext)
                and self.digits == other.digits
                and self.backend == other.backend)

    def __hash__(self):
        return hash((self.digits, self.backend))

    def __repr__(self):
        return f"PrecisionContext(digits={self.digits}, backend={self.backend!r})"

    # -- backend plumbing ---------------------------------------------------

    @property
    def is_mp(self) -> bool:
        return self.backend == "mp"

    def activate(self) -> None:
        """Point the thread-local gmpy2 context at this precision."""
        if self.backend == "mp":
            gmpy2.get_context().precision = self.bits

    # -- scalar constructors -------------------------------------------------

    @property
    def eps(self):
        """Roundoff scale 10**(1 - digits) as a real scalar."""
        return self.real(10) ** (1 - self.digits)

    @property
    def eps_float(self) -> float:
        return 10.0 ** (1 - self.digits)

    def real(self, x):
        if self.backend == "double":
            return float(x)
        self.activate()
        return gmpy2.mpfr(x)

    def cplx(self, re, im=0):
        if self.backend == "double":
            return complex(float(re), float(im))
        self.activate()
        return gmpy2.mpc(gmpy2.mpfr(re), gmpy2.mpfr(im))

    def from_complex(self, z):
        """Coerce any scalar (complex, mpfr, mpc, int, str-real) to this backend."""
        if isinstance(z, complex):
            return self.cplx(z.real, z.imag)
        if isinstance(z, (int, float, str)):
            return self.cplx(z)
        return self.cplx(z.real, z.imag)

    # -- real functions -------------------------------------------------------

    def sqrt(self, x):
        if self.backend == "double":
            return math.sqrt(x)
        self.activate()
        return gmpy2.sqrt(gmpy2.mpfr(x))

    def sin(self, x):
        if self.backend == "double":
            return math.sin(x)
        self.activate()
        return gmpy2.sin(x)

    def cos(self, x):
        if self.backend == "double":
            return math.cos(x)
        self.activate()
        return gmpy2.cos(x)

    def pi(self):
        if self.backend == "double":
            return math.pi
        self.activate()
        return gmpy2.const_pi()

    def copysign(self, x, y):
        if self.backend == "double":
            return math.copysign(x, y)
        self.activate()
        return gmpy2.copy_sign(gmpy2.mpfr(x), gmpy2.mpfr(y))

    # -- conversions ----------------------------------------------------------

    @staticmethod
    def to_float(x) -> float:
        return float(x)

    @staticmethod
    def to_complex(z) -> complex:
        if isinstance(z, complex):
            return z
        return complex(float(z.real), float(z.imag))

    def fmt(self, x, sig: int = 25) -> str:
        """Scientific-notation decimal string with `sig` significant digits.

        Hardware floats carry fewer than 25 digits; the tail is then padded
        by the float formatter, which keeps the column layout uniform.
        """
        if self.backend == "double":
            return f"{float(x):.{sig - 1}e}"
        x = gmpy2.mpfr(x)
        if not gmpy2.is_finite(x):
            return str(float(x))
        if x == 0:
            return "0." + "0" * (sig - 1) + "e+00"
        ds, exp, _ = x.digits(10, sig)
        neg = ds.startswith("-")
        if neg:
            ds = ds[1:]
        return ("-" if neg else "") + ds[0] + "." + ds[1:] + f"e{exp - 1:+03d}"


#: convenience context used by tests and small utilities
DOUBLE = PrecisionContext(15, "double")
