"""Finite matrix truncations of shift, multiplication, and translation operators.

Every operator carries a certificate: `probe_dim` K is the number of leading
basis columns on which the matrix action agrees with the untruncated operator
up to `tail_bound`, and `band` = (lo, hi) bounds the certified column support
(column j lives in rows [j + lo, j + hi] up to the same tail).  Composition,
adjoints, and direct sums propagate the certificate, so corner effects of the
truncation can never contaminate a verdict computed on certified columns.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import BoundTooSmall, NotAMember, ProbeExhausted, SizeMismatch
from .inner import InnerSymbol, l2_tails

BAND_TOL = 1e-12


@dataclass(frozen=True)
class TruncatedOperator:
    """Dense N x N complex truncation with a certified probe window."""

    matrix: np.ndarray
    probe_dim: int
    tail_bound: float = 0.0
    band: tuple[int, int] = (0, 0)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, order="C")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SizeMismatch(f"operator matrix must be square, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if not 1 <= self.probe_dim <= m.shape[0]:
            raise ProbeExhausted(f"probe_dim {self.probe_dim} outside 1..{m.shape[0]}")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def identity(size: int) -> TruncatedOperator:
    return TruncatedOperator(np.eye(size, dtype=complex), probe_dim=size)


def shift_matrix(size: int) -> TruncatedOperator:
    """Coordinate shift e_j -> e_{j+1}; the last column falls off the truncation."""
    if size < 2:
        raise SizeMismatch("shift needs size >= 2")
    m = np.eye(size, k=-1, dtype=complex)
    return TruncatedOperator(m, probe_dim=size - 1, tail_bound=0.0, band=(1, 1))


def mult_operator(sym: InnerSymbol, size: int) -> TruncatedOperator:
    """Lower-triangular Toeplitz truncation of multiplication by `sym`.

    M[j, k] = c_{j-k} from the symbol's coefficients.  The probe dimension is
    size - D_eff where D_eff is the symbol's effective degree (l2 tail below
    1e-12, capped), so certified columns carry their full coefficient mass up
    to the recorded tail bound.
    """
    if size < 1:
        raise SizeMismatch("mult_operator needs size >= 1")
    coeffs = sym.fourier_coeffs(size - 1)
    m = toeplitz(coeffs, np.zeros(size, dtype=complex))
    tails = sym.coeff_l2_tails(size - 1)
    hi = min(sym.effective_degree(tol=BAND_TOL), size - 1)
    lo = min(sym.monomial_power, size - 1)
    probe = max(1, size - hi)
    eps = float(max(tails[size], tails[min(hi + 1, size)]))
    return TruncatedOperator(m, probe_dim=probe, tail_bound=eps, band=(lo, hi))


def mult_operator_from_coeffs(coeffs: np.ndarray, size: int) -> TruncatedOperator:
    """Toeplitz truncation of multiplication by the polynomial c_0 + ... + c_D z^D.

    The polynomial has finite support, so columns up to size - D carry it in
    full and the certificate is exact (zero tail).
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    col = np.zeros(size, dtype=complex)
    col[: min(size, coeffs.size)] = coeffs[:size]
    m = toeplitz(col, np.zeros(size, dtype=complex))
    support = np.nonzero(np.abs(col) > 0)[0]
    hi = int(support[-1]) if support.size else 0
    lo = int(support[0]) if support.size else 0
    probe = max(1, size - hi)
    return TruncatedOperator(m, probe_dim=probe, tail_bound=0.0, band=(lo, hi))


def adjoint(a: TruncatedOperator) -> TruncatedOperator:
    """Conjugate transpose; the probe window moves by the band offset."""
    probe = min(a.size, a.probe_dim + a.band[0])
    if probe < 1:
        raise ProbeExhausted("adjoint has no certified columns left")
    return TruncatedOperator(
        a.matrix.conj().T.copy(),
        probe_dim=probe,
        tail_bound=a.tail_bound,
        band=(-a.band[1], -a.band[0]),
    )


def compose(a: TruncatedOperator, b: TruncatedOperator) -> TruncatedOperator:
    """Matrix product a @ b with the corner rule K_out = min(K_b, K_a - hi_b)."""
    if a.size != b.size:
        raise SizeMismatch(f"compose: sizes {a.size} and {b.size}")
    probe = min(b.probe_dim, a.probe_dim - b.band[1])
    if probe < 1:
        raise ProbeExhausted("composition exhausts the certified window")
    return TruncatedOperator(
        a.matrix @ b.matrix,
        probe_dim=probe,
        tail_bound=a.tail_bound + b.tail_bound,
        band=(a.band[0] + b.band[0], a.band[1] + b.band[1]),
    )


def direct_sum(a: TruncatedOperator, b: TruncatedOperator) -> TruncatedOperator:
    """Block sum on interleaved coordinates (a on even, b on odd).

    Interleaving lets one truncation parameter cut both summands evenly; a
    stacked layout would give the second summand no certified columns at all.
    """
    if a.size != b.size:
        raise SizeMismatch(f"direct_sum: sizes {a.size} and {b.size}")
    n = a.size
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    m[0::2, 0::2] = a.matrix
    m[1::2, 1::2] = b.matrix
    probe = min(2 * a.probe_dim, 2 * b.probe_dim + 1)
    band = (2 * min(a.band[0], b.band[0]), 2 * max(a.band[1], b.band[1]))
    return TruncatedOperator(m, probe_dim=probe, tail_bound=max(a.tail_bound, b.tail_bound), band=band)


def swap_unitary(size: int) -> TruncatedOperator:
    """Summand-swap on interleaved coordinates: e_{2i} <-> e_{2i+1}."""
    if size % 2:
        raise SizeMismatch("swap unitary needs even size")
    m = np.zeros((size, size), dtype=complex)
    idx = np.arange(0, size, 2)
    m[idx + 1, idx] = 1.0
    m[idx, idx + 1] = 1.0
    return TruncatedOperator(m, probe_dim=size, tail_bound=0.0, band=(-1, 1))


# -- regular representation ----------------------------------------------------


@dataclass(frozen=True)
class SemigroupSpec:
    """Additive subsemigroup of the non-negative integers with a membership table."""

    generators: tuple[int, ...]
    bound: int
    members: tuple[int, ...] = ()

    def __post_init__(self):
        gens = tuple(sorted(set(int(g) for g in self.generators)))
        if any(g <= 0 for g in gens):
            raise NotAMember("generators must be positive integers")
        if self.bound < 0:
            raise BoundTooSmall("bound must be non-negative")
        table = np.zeros(self.bound + 1, dtype=bool)
        table[0] = True  # identity of the additive semigroup
        for v in range(self.bound + 1):
            if table[v]:
                for g in gens:
                    if v + g <= self.bound:
                        table[v + g] = True
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "members", tuple(int(i) for i in np.nonzero(table)[0]))

    @classmethod
    def with_capacity(cls, generators, count: int, headroom: int = 0) -> "SemigroupSpec":
        """Bound chosen so at least `count` members exist, plus image headroom."""
        gens = tuple(sorted(set(int(g) for g in generators)))
        bound = max(count, 16)
        while True:
            spec = cls(gens, bound)
            if len(spec.members) >= count and (count == 0 or spec.members[count - 1] + headroom <= bound):
                return spec
            bound *= 2

    def is_member(self, j: int) -> bool:
        if not 0 <= j <= self.bound:
            raise BoundTooSmall(f"{j} is beyond the membership table bound {self.bound}")
        return j in self._member_set

    @property
    def _member_set(self) -> frozenset:
        return frozenset(self.members)


def regular_rep(spec: SemigroupSpec, i: int, size: int) -> TruncatedOperator:
    """Translation by i on the member basis: delta_m -> delta_{m+i}.

    The basis is the ascending member list; columns whose image index falls
    outside the truncation are zero and sit beyond the probe window.
    """
    if i < 0 or i > spec.bound or not spec.is_member(i):
        raise NotAMember(f"{i} is not a member of the semigroup")
    if len(spec.members) < size:
        raise BoundTooSmall(f"table holds {len(spec.members)} members, need {size}")
    index = {m: k for k, m in enumerate(spec.members)}
    m = np.zeros((size, size), dtype=complex)
    probe = size
    offsets = []
    for k in range(size):
        target = spec.members[k] + i
        j = index.get(target)
        if j is not None and j < size:
            m[j, k] = 1.0
            offsets.append(j - k)
        else:
            probe = min(probe, k)
    if probe < 1:
        raise ProbeExhausted("regular representation has no certified columns at this size")
    window = offsets[:probe]
    band = (min(window), max(window)) if window else (0, 0)
    return TruncatedOperator(m, probe_dim=probe, tail_bound=0.0, band=band)


# -- probe-window comparisons ----------------------------------------------------


def probe_distance(a: TruncatedOperator, b: TruncatedOperator) -> float:
    """Max l2 column difference over the shared certified columns."""
    if a.size != b.size:
        raise SizeMismatch(f"probe_distance: sizes {a.size} and {b.size}")
    cols = min(a.probe_dim, b.probe_dim)
    if cols < 1:
        raise ProbeExhausted("no shared certified columns")
    diff = a.matrix[:, :cols] - b.matrix[:, :cols]
    return float(np.max(np.linalg.norm(diff, axis=0)))


def approx_equal(a: TruncatedOperator, b: TruncatedOperator, tol: float) -> bool:
    return probe_distance(a, b) < tol + a.tail_bound + b.tail_bound


def isometry_defect(a: TruncatedOperator) -> float:
    """Max l2 column norm of (A*A - I) restricted to the probe block."""
    block = a.matrix[:, : a.probe_dim]
    gram = block.conj().T @ block
    gram[np.diag_indices_from(gram)] -= 1.0
    return float(np.max(np.linalg.norm(gram, axis=0)))


def is_isometry_on_probe(a: TruncatedOperator, tol: float) -> bool:
    return isometry_defect(a) < tol + 2.0 * a.tail_bound


def kernel_of_adjoint(a: TruncatedOperator, rel_tol: float = 1e-8) -> tuple[int, np.ndarray]:
    """Numerical kernel of A*: dimension and an orthonormal basis (columns).

    Singular values below rel_tol * sigma_max count as zero.
    """
    u, s, vh = np.linalg.svd(a.matrix.conj().T)
    smax = s[0] if s.size else 0.0
    small = s < rel_tol * smax if smax > 0 else np.ones_like(s, dtype=bool)
    basis = vh.conj().T[:, small]
    return int(np.count_nonzero(small)), basis


# -- dump format ------------------------------------------------------------------
#
# Single file: one JSON header line, then raw little-endian float64 pairs
# (re, im) in column-major order.


def dump_operator(a: TruncatedOperator, path: str) -> None:
    header = {
        "N": a.size,
        "K": a.probe_dim,
        "eps": a.tail_bound,
        "band": list(a.band),
        "dtype": "complex128",
        "order": "F",
    }
    payload = a.matrix.astype(np.complex128).tobytes(order="F")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        fh.write(payload)
    os.replace(tmp, path)


def load_operator(path: str) -> TruncatedOperator:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        raw = fh.read()
    n = header["N"]
    m = np.frombuffer(raw, dtype=np.complex128).reshape((n, n), order="F")
    return TruncatedOperator(
        m.copy(), probe_dim=header["K"], tail_bound=header["eps"], band=tuple(header.get("band", (0, 0)))
    )
