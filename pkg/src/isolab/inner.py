"""Inner functions on the unit disk and their Fourier analysis.

An inner symbol is a finite product

    c * z^n * prod_i b_{a_i}(z) * prod_j exp(mu_j (z + zeta_j)/(z - zeta_j))

with |c| = 1, n >= 0, Blaschke factors b_a(z) = (|a|/a)(a - z)/(1 - conj(a) z)
for 0 < |a| < 1 (b_0(z) = z by convention, absorbed into the monomial power),
and atomic singular factors located at boundary points zeta_j = e^{i theta_j}
with masses mu_j > 0.  Such a product is analytic on the open disk, bounded by
one there, and has unit modulus almost everywhere on the circle; its Taylor
coefficients are exactly its non-negative Fourier coefficients on the boundary.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSymbol, SingularAtomHit

# Construction slack for |c| = 1 and |a| < 1.
MODULUS_TOL = 1e-12
# Boundary evaluation refuses angles closer than this to a singular atom.
ATOM_HIT_TOL = 1e-10
# Effective coefficient degrees are capped here; beyond it the l2 tail of an
# atomic singular symbol improves only like D^(-1/4).
DEGREE_CAP = 176

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BlaschkeFactor:
    """Single Blaschke factor b_a with zero `a` strictly inside the disk."""

    zero: complex

    def __post_init__(self):
        object.__setattr__(self, "zero", complex(self.zero))
        if abs(self.zero) >= 1.0 - MODULUS_TOL:
            raise InvalidSymbol(f"Blaschke zero must satisfy |a| < 1 - 1e-12, got |a| = {abs(self.zero)!r}")


@dataclass(frozen=True)
class AtomicSingularPart:
    """Finitely many boundary atoms (angle, mass) of a singular inner factor."""

    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        wrapped = tuple((float(t) % _TWO_PI, float(m)) for t, m in self.atoms)
        for _, m in wrapped:
            if not m > 0.0:
                raise InvalidSymbol(f"atom masses must be strictly positive, got {m!r}")
        angles = sorted(t for t, _ in wrapped)
        for a, b in zip(angles, angles[1:]):
            if b - a <= MODULUS_TOL:
                raise InvalidSymbol("atom angles must be pairwise distinct")
        object.__setattr__(self, "atoms", wrapped)

    def __bool__(self) -> bool:
        return bool(self.atoms)

    @property
    def total_mass(self) -> float:
        return sum(m for _, m in self.atoms)


_EMPTY_SINGULAR = AtomicSingularPart()


@dataclass(frozen=True)
class InnerSymbol:
    """Unimodular constant x monomial x finite Blaschke product x atomic singular part."""

    constant: complex = 1.0 + 0.0j
    monomial_power: int = 0
    factors: tuple[BlaschkeFactor, ...] = ()
    singular: AtomicSingularPart = _EMPTY_SINGULAR

    def __post_init__(self):
        c = complex(self.constant)
        if abs(abs(c) - 1.0) > MODULUS_TOL:
            raise InvalidSymbol(f"constant must be unimodular within 1e-12, got |c| = {abs(c)!r}")
        n = int(self.monomial_power)
        if n < 0:
            raise InvalidSymbol("monomial power must be non-negative")
        # b_0(z) = z: zero factors are the monomial by convention.
        kept = []
        for f in self.factors:
            if not isinstance(f, BlaschkeFactor):
                f = BlaschkeFactor(f)
            if f.zero == 0:
                n += 1
            else:
                kept.append(f)
        sing = self.singular
        if not isinstance(sing, AtomicSingularPart):
            sing = AtomicSingularPart(tuple(sing))
        object.__setattr__(self, "constant", c)
        object.__setattr__(self, "monomial_power", n)
        object.__setattr__(self, "factors", tuple(kept))
        object.__setattr__(self, "singular", sing)

    # -- queries ------------------------------------------------------------

    @property
    def blaschke_degree(self) -> int:
        return len(self.factors)

    @property
    def geometric_ratio(self) -> float | None:
        """Coefficient tail ratio max|a_i| for Blaschke-only symbols, else None."""
        if self.singular:
            return None
        if not self.factors:
            return 0.0
        return max(abs(f.zero) for f in self.factors)

    def is_monomial(self) -> tuple[bool, int]:
        """Structural test: no Blaschke factors and no singular part."""
        return (not self.factors and not self.singular, self.monomial_power)

    # -- evaluation ----------------------------------------------------------

    def eval(self, theta: float) -> complex:
        """Boundary value at e^{i theta}; unit modulus away from atoms.

        Raises SingularAtomHit if theta is within 1e-10 of an atom angle.
        """
        for t0, _ in self.singular.atoms:
            d = (theta - t0) % _TWO_PI
            if min(d, _TWO_PI - d) < ATOM_HIT_TOL:
                raise SingularAtomHit(f"theta = {theta!r} hits the atom at angle {t0!r}")
        return complex(self.eval_at(cmath.exp(1j * theta)))

    def eval_grid(self, thetas: np.ndarray) -> np.ndarray:
        """Vectorized boundary evaluation; the caller keeps the grid off the atoms."""
        return self.eval_at(np.exp(1j * np.asarray(thetas, dtype=float)))

    def eval_at(self, z):
        """Value at complex point(s) z, |z| <= 1 (strictly inside for atoms at z's angle)."""
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.constant, dtype=complex)
        if self.monomial_power:
            out = out * z**self.monomial_power
        for f in self.factors:
            a = f.zero
            out = out * ((abs(a) / a) * (a - z) / (1.0 - np.conj(a) * z))
        for t0, m in self.singular.atoms:
            zeta = cmath.exp(1j * t0)
            out = out * np.exp(m * (z + zeta) / (z - zeta))
        if out.shape == ():
            return complex(out)
        return out

    # -- coefficients ---------------------------------------------------------

    def fourier_coeffs(self, degree: int) -> np.ndarray:
        """Taylor/Fourier coefficients c_0 .. c_degree of the analytic expansion.

        Blaschke/monomial symbols use the closed geometric-series form, exact up
        to convolution roundoff.  Symbols with a singular part are sampled by
        FFT on an interior circle (Cauchy integral) with oversampling >= 8x and
        radius r = amp^(-1/degree) for an amplification budget amp = 100; the
        absolute error per coefficient is then bounded by the aliasing term
        r^M < 1e-15 plus roundoff eps * amp * O(log M) < 1e-12.
        """
        if degree < 0:
            raise ValueError("degree must be >= 0")
        if not self.singular:
            series = np.zeros(degree + 1, dtype=complex)
            if self.monomial_power <= degree:
                series[self.monomial_power] = self.constant
            for f in self.factors:
                series = np.convolve(series, _factor_series(f.zero, degree))[: degree + 1]
            return series
        return self._coeffs_by_interior_fft(degree)

    def _coeffs_by_interior_fft(self, degree: int, oversample: int = 8, amp: float = 100.0) -> np.ndarray:
        M = 1 << max(4, math.ceil(math.log2(oversample * (degree + 1))))
        r = math.exp(-math.log(amp) / max(degree, 1))
        k = np.arange(M)
        # half-step offset keeps the grid away from atom angles
        z = r * np.exp(2j * np.pi * (k + 0.5) / M)
        hat = np.fft.fft(self.eval_at(z)) / M
        ks = np.arange(degree + 1)
        return hat[: degree + 1] * np.exp(-1j * np.pi * ks / M) / r**ks

    def coeff_l2_tails(self, degree: int) -> np.ndarray:
        """tails[j] = sqrt(sum_{k >= j} |c_k|^2) for j = 0 .. degree+1.

        Within the computed range the sum is a reverse cumulative sum (no
        cancellation); beyond it, monomials contribute nothing, Blaschke
        products are bounded by a Cauchy estimate on the circle |z| = 1/sqrt(r)
        (geometric, rigorous), and singular symbols use the Parseval remainder.
        """
        coeffs = self.fourier_coeffs(degree)
        c2 = np.abs(coeffs) ** 2
        rev = np.concatenate([np.cumsum(c2[::-1])[::-1], [0.0]])
        return np.sqrt(np.clip(rev + self._remainder_beyond(degree, c2), 0.0, None))

    def _remainder_beyond(self, degree: int, c2: np.ndarray) -> float:
        if not self.singular:
            if not self.factors:
                return 0.0  # finite support: the monomial ends at its power
            r = self.geometric_ratio
            rho = math.sqrt(1.0 / r)
            peak = rho**self.monomial_power
            for f in self.factors:
                peak *= (abs(f.zero) + rho) / (1.0 - abs(f.zero) * rho)
            q = rho**-2.0
            return peak * peak * q ** (degree + 1) / (1.0 - q)
        return max(0.0, 1.0 - math.fsum(c2))

    def effective_degree(self, tol: float = 1e-12, cap: int = DEGREE_CAP) -> int:
        """Smallest D with l2 coefficient tail from order D below tol, capped."""
        tails = self.coeff_l2_tails(cap)
        below = np.nonzero(tails <= tol)[0]
        if below.size:
            return int(below[0])
        return cap

    def __str__(self) -> str:
        return format_symbol(self)


def _factor_series(a: complex, degree: int) -> np.ndarray:
    # b_a(z) = |a| - (|a|/a)(1-|a|^2) sum_{k>=1} conj(a)^{k-1} z^k
    series = np.zeros(degree + 1, dtype=complex)
    series[0] = abs(a)
    if degree >= 1:
        k = np.arange(1, degree + 1)
        series[1:] = -(abs(a) / a) * (1.0 - abs(a) ** 2) * np.conj(a) ** (k - 1)
    return series


def l2_tails(coeffs: np.ndarray) -> np.ndarray:
    """tails[j] = sqrt(sum_{k >= j} |c_k|^2) for a unit-energy sequence.

    The in-range part is a reverse cumulative sum; the beyond-range remainder
    is the Parseval complement max(0, 1 - sum), resolvable down to ~1e-16.
    """
    c2 = np.abs(np.asarray(coeffs)) ** 2
    remainder = max(0.0, 1.0 - math.fsum(c2))
    rev = np.concatenate([np.cumsum(c2[::-1])[::-1], [0.0]])
    return np.sqrt(np.clip(rev + remainder, 0.0, None))


def multiply(u: InnerSymbol, v: InnerSymbol) -> InnerSymbol:
    """Pointwise product: constants multiply, powers add, factors concatenate, atoms merge."""
    c = u.constant * v.constant
    c /= abs(c)  # keep the unimodularity invariant bit-clean under accumulation
    merged: dict[float, float] = {}
    for t, m in u.singular.atoms + v.singular.atoms:
        hit = next((s for s in merged if abs(s - t) <= MODULUS_TOL), None)
        if hit is None:
            merged[t] = m
        else:
            merged[hit] += m
    return InnerSymbol(
        constant=c,
        monomial_power=u.monomial_power + v.monomial_power,
        factors=u.factors + v.factors,
        singular=AtomicSingularPart(tuple(sorted(merged.items()))),
    )


def is_monomial(sym: InnerSymbol) -> tuple[bool, int]:
    return sym.is_monomial()


def is_monomial_numeric(sym: InnerSymbol, grid: int = 512, tol: float = 1e-8) -> tuple[bool, int | None]:
    """Grid variant: compare against e^{i n theta} with n read off the winding number."""
    thetas = (np.arange(grid) + 0.5) * (_TWO_PI / grid)
    vals = sym.eval_grid(thetas)
    phase = np.unwrap(np.angle(vals))
    n = int(round((phase[-1] - phase[0]) / (_TWO_PI * (grid - 1) / grid)))
    if n < 0:
        return False, None
    dev = np.max(np.abs(vals - np.exp(1j * n * thetas)))
    if dev < tol:
        return True, n
    return False, None


# -- literal form -------------------------------------------------------------
#
# Symbol literal grammar:  parts joined by '*', each of
#     z^N            monomial power
#     B(a1,a2,...)   Blaschke zeros
#     S(t1:m1,...)   singular atoms angle:mass
#     C(c)           unimodular constant
# with complex numbers written as re+imi (e.g. 0.5, -0.3i, 0.5+0.3i).

_PART_RE = re.compile(r"^(z(\^(\d+))?|B\(([^()]*)\)|S\(([^()]*)\)|C\(([^()]*)\))$")


def _parse_complex(text: str) -> complex:
    text = text.strip().replace(" ", "")
    if not text:
        raise InvalidSymbol("empty complex literal")
    try:
        return complex(text.replace("i", "j"))
    except ValueError as exc:
        raise InvalidSymbol(f"bad complex literal {text!r}") from exc


def _format_complex(z: complex) -> str:
    re_part = repr(float(z.real))
    im = float(z.imag)
    sign = "-" if (im < 0 or (im == 0 and math.copysign(1.0, im) < 0)) else "+"
    return f"{re_part}{sign}{repr(abs(im))}i"


def parse_symbol(text: str) -> InnerSymbol:
    """Parse the symbol literal form, e.g. 'z^2 * B(0.5,-0.3i) * S(0.0:1.0)'."""
    constant = 1.0 + 0.0j
    power = 0
    factors: list[BlaschkeFactor] = []
    atoms: list[tuple[float, float]] = []
    parts = [p.strip() for p in text.split("*")]
    if parts == [""]:
        raise InvalidSymbol("empty symbol literal")
    for part in parts:
        m = _PART_RE.match(part)
        if m is None:
            raise InvalidSymbol(f"bad symbol part {part!r}")
        if part.startswith("z"):
            power += int(m.group(3)) if m.group(3) is not None else 1
        elif part.startswith("B"):
            body = m.group(4).strip()
            if body:
                factors.extend(BlaschkeFactor(_parse_complex(tok)) for tok in body.split(","))
        elif part.startswith("S"):
            body = m.group(5).strip()
            if body:
                for tok in body.split(","):
                    angle, _, mass = tok.partition(":")
                    if not mass:
                        raise InvalidSymbol(f"atom needs angle:mass, got {tok!r}")
                    atoms.append((float(angle), float(mass)))
        else:
            constant = _parse_complex(m.group(6))
    return InnerSymbol(
        constant=constant,
        monomial_power=power,
        factors=tuple(factors),
        singular=AtomicSingularPart(tuple(atoms)),
    )


def format_symbol(sym: InnerSymbol) -> str:
    """Canonical literal form; parse_symbol(format_symbol(s)) reproduces s bit-exactly."""
    parts = []
    if sym.monomial_power:
        parts.append(f"z^{sym.monomial_power}")
    if sym.factors:
        parts.append("B(" + ",".join(_format_complex(f.zero) for f in sym.factors) + ")")
    if sym.singular:
        parts.append("S(" + ",".join(f"{repr(t)}:{repr(m)}" for t, m in sym.singular.atoms) + ")")
    if sym.constant != 1.0 + 0.0j:
        parts.append(f"C({_format_complex(sym.constant)})")
    if not parts:
        return "z^0"
    return " * ".join(parts)
