"""System-bath Hamiltonian model: one qubit coupled to a small random bath.

The full Hamiltonian is H = H_B + H_SB with

    H_B  = I (x) B_I
    H_SB = sx (x) B_x + sy (x) B_y + sz (x) B_z

where each bath block is a sum of one- and two-body terms over ordered
bath-qubit pairs,

    B_mu = sum_{i != j} sum_{alpha, beta} c (sigma_i^alpha (x) sigma_j^beta),

with coefficients c drawn i.i.d. uniform on [0, 1]. After assembly the
interaction and pure-bath parts are rescaled so their spectral norms hit the
requested strengths exactly.

Coefficients are sampled per (mu, pair, alpha, beta) with the SplitMix64
generator (Steele, Lea & Flood 2014): a 64-bit state advanced by a Weyl
constant and finalized by two xor-shift multiplications; doubles come from
the top 53 output bits. The full coefficient table is therefore a pure
function of (seed, n_bath_qubits) and is bit-stable across platforms.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

from .errors import BadDimension, DegenerateBath, InvalidBathSize
from .mpmatrix import CMatrix, hermitian_eig, kron, norms
from .precision import PrecisionContext

#: index order of single-site operators in coefficient tables
SITE_LABELS = ("1", "x", "y", "z")

#: bath-block labels in coefficient-table order
BLOCK_LABELS = ("I", "x", "y", "z")

_PAULI = {
    "1": ((1, 0), (0, 1)),
    "x": ((0, 1), (1, 0)),
    "y": ((0, -1j), (1j, 0)),
    "z": ((1, 0), (0, -1)),
    "I": ((1, 0), (0, 1)),
}

_MASK64 = (1 << 64) - 1


def _splitmix64_stream(seed: int):
    """Infinite stream of uniform doubles in [0, 1) from SplitMix64."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z = z ^ (z >> 31)
        yield (z >> 11) * (2.0 ** -53)


def pauli(ctx: PrecisionContext, label: str) -> CMatrix:
    """2x2 Pauli matrix (label ``"1"``/``"I"`` gives the identity)."""
    rows = _PAULI[label]
    return CMatrix.from_rows(ctx, rows)


def ordered_pairs(n: int):
    """All ordered pairs (i, j), i != j, in lexicographic order."""
    return [(i, j) for i in range(n) for j in range(n) if i != j]


@dataclass(frozen=True)
class BathSpec:
    """Random-bath description, fully determined by (seed, n_bath_qubits).

    ``coefficients`` is a flat tuple in the documented order: block label
    (I, x, y, z) outermost, then ordered qubit pair (lexicographic), then
    the two site labels (1, x, y, z) for the pair, innermost last.
    """

    seed: int
    n_bath_qubits: int
    coefficients: tuple

    @property
    def n_pairs(self) -> int:
        return self.n_bath_qubits * (self.n_bath_qubits - 1)

    @property
    def coeffs_per_block(self) -> int:
        return self.n_pairs * len(SITE_LABELS) ** 2

    def coefficient(self, block: str, pair_index: int, alpha: str, beta: str) -> float:
        base = BLOCK_LABELS.index(block) * self.coeffs_per_block
        offset = (pair_index * 16
                  + SITE_LABELS.index(alpha) * 4 + SITE_LABELS.index(beta))
        return self.coefficients[base + offset]

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "n_bath_qubits": self.n_bath_qubits,
            "layout": "block(I,x,y,z) > ordered pair(lex) > alpha(1,x,y,z) > beta(1,x,y,z)",
            "generator": "splitmix64/top53",
            "coefficients": [c.hex() for c in self.coefficients],
        })

    @classmethod
    def from_json(cls, text: str) -> "BathSpec":
        doc = json.loads(text)
        return cls(seed=doc["seed"], n_bath_qubits=doc["n_bath_qubits"],
                   coefficients=tuple(float.fromhex(c) for c in doc["coefficients"]))


def sample_bath(seed: int, n_bath_qubits: int = 4) -> BathSpec:
    """Draw the full coefficient table for a bath of ``n_bath_qubits`` qubits."""
    if n_bath_qubits < 2:
        raise InvalidBathSize(f"need at least 2 bath qubits, got {n_bath_qubits}")
    stream = _splitmix64_stream(seed)
    count = len(BLOCK_LABELS) * n_bath_qubits * (n_bath_qubits - 1) * 16
    coeffs = tuple(next(stream) for _ in range(count))
    return BathSpec(seed=seed, n_bath_qubits=n_bath_qubits, coefficients=coeffs)


@lru_cache(maxsize=None)
def _pair_term_support(n: int, i: int, j: int, alpha: str, beta: str):
    """Nonzero entries of sigma_i^alpha (x) sigma_j^beta on an n-qubit bath.

    Pauli tensors are monomial matrices (one entry per row), so the embedded
    operator is returned as a tuple of (flat_index, value) with exact
    hardware-complex values from {+-1, +-i}. Qubit 0 owns the most
    significant bit of the row index.
    """
    a_rows = _PAULI[alpha]
    b_rows = _PAULI[beta]
    dim = 1 << n
    entries = []
    for r in range(dim):
        bit_i = (r >> (n - 1 - i)) & 1
        bit_j = (r >> (n - 1 - j)) & 1
        val = 1 + 0j
        col = r
        for site, bit, rows in ((i, bit_i, a_rows), (j, bit_j, b_rows)):
            row = rows[bit]
            cbit, v = (0, row[0]) if row[0] != 0 else (1, row[1])
            val *= v
            if cbit != bit:
                col ^= 1 << (n - 1 - site)
        entries.append((r * dim + col, val))
    return tuple(entries)


def build_block(spec: BathSpec, block: str, ctx: PrecisionContext) -> CMatrix:
    """Assemble the raw (unscaled) bath block B_mu at working precision."""
    ctx.activate()
    n = spec.n_bath_qubits
    dim = 1 << n
    acc = [ctx.cplx(0)] * (dim * dim)
    for p_idx, (i, j) in enumerate(ordered_pairs(n)):
        for alpha in SITE_LABELS:
            for beta in SITE_LABELS:
                c = spec.coefficient(block, p_idx, alpha, beta)
                for flat, val in _pair_term_support(n, i, j, alpha, beta):
                    acc[flat] = acc[flat] + c * val
    return CMatrix(ctx, dim, dim, acc, _raw=True)


@dataclass(frozen=True)
class HamiltonianModel:
    """Assembled Hamiltonian with cached eigendecomposition.

    ``h = h_b + h_sb`` entrywise; the spectral norms of ``h_sb`` and ``h_b``
    equal ``j_coupling`` and ``beta`` by construction (a zero-strength part
    is left as the zero matrix).
    """

    ctx: PrecisionContext
    h: CMatrix
    h_b: CMatrix
    h_sb: CMatrix
    blocks: dict            # label -> rescaled bath block (bath dimension)
    j_coupling: float
    beta: float
    eigenvalues: tuple
    eigenvectors: CMatrix

    @property
    def dim(self) -> int:
        return self.h.rows

    @property
    def bath_dim(self) -> int:
        return self.h.rows // 2


def assemble(spec: BathSpec, j_coupling: float, beta: float,
             ctx: PrecisionContext) -> HamiltonianModel:
    """Build, rescale and eigendecompose the full Hamiltonian."""
    if j_coupling <= 0:
        raise ValueError("j_coupling must be positive")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    ctx.activate()

    raw = {label: build_block(spec, label, ctx) for label in BLOCK_LABELS}
    dim_b = raw["I"].rows
    id2 = pauli(ctx, "1")

    h_sb_raw = CMatrix.zeros(ctx, 2 * dim_b)
    for label in ("x", "y", "z"):
        h_sb_raw = h_sb_raw + kron(pauli(ctx, label), raw[label])
    sb_norm = norms(h_sb_raw).spectral
    if sb_norm == ctx.real(0):
        raise DegenerateBath("raw interaction has zero spectral norm")
    sb_factor = ctx.real(j_coupling) / sb_norm
    h_sb = h_sb_raw.scale(sb_factor)

    if beta == 0:
        h_b = CMatrix.zeros(ctx, 2 * dim_b)
        b_factor = ctx.real(0)
    else:
        b_norm = norms(raw["I"]).spectral
        if b_norm == ctx.real(0):
            raise DegenerateBath("raw pure-bath block has zero spectral norm")
        b_factor = ctx.real(beta) / b_norm
        h_b = kron(id2, raw["I"].scale(b_factor))

    blocks = {label: raw[label].scale(sb_factor) for label in ("x", "y", "z")}
    blocks["I"] = raw["I"].scale(b_factor)

    h = h_b + h_sb
    vals, vecs = hermitian_eig(h)
    return HamiltonianModel(ctx=ctx, h=h, h_b=h_b, h_sb=h_sb, blocks=blocks,
                            j_coupling=j_coupling, beta=beta,
                            eigenvalues=tuple(vals), eigenvectors=vecs)


def pauli_block(u: CMatrix, nu: str) -> CMatrix:
    """Coefficient block of sigma_nu in u = sum_nu sigma_nu (x) B_nu.

    Computed as (1/2) Tr_S[(sigma_nu (x) I) u] directly from the four
    bath-dimension quadrants of ``u``; the 1/2 restores the expansion
    coefficient since Tr(sigma_nu sigma_nu) = 2.
    """
    if u.rows != u.cols or u.rows % 2 != 0:
        raise BadDimension("expected a square matrix on qubit (x) bath space")
    ctx = u.ctx
    ctx.activate()
    d = u.rows // 2
    m = u.cols
    flat = u.flat

    def quad(r0, c0):
        return [flat[(r0 + i) * m + (c0 + j)] for i in range(d) for j in range(d)]

    half = ctx.real("0.5")
    if nu in ("I", "1"):
        data = [(a + b) * half for a, b in zip(quad(0, 0), quad(d, d))]
    elif nu == "x":
        data = [(a + b) * half for a, b in zip(quad(0, d), quad(d, 0))]
    elif nu == "y":
        ii = ctx.cplx(0, 1)
        data = [(a - b) * half * ii for a, b in zip(quad(0, d), quad(d, 0))]
    elif nu == "z":
        data = [(a - b) * half for a, b in zip(quad(0, 0), quad(d, d))]
    else:
        raise ValueError(f"unknown block label {nu!r}")
    return CMatrix(ctx, d, d, data, _raw=True)


def recompose(blocks: dict, ctx: PrecisionContext) -> CMatrix:
    """Inverse of :func:`pauli_block`: sum_nu sigma_nu (x) B_nu."""
    d = next(iter(blocks.values())).rows
    out = CMatrix.zeros(ctx, 2 * d)
    for label, b in blocks.items():
        out = out + kron(pauli(ctx, "1" if label == "I" else label), b)
    return out
