"""Words over an involutive generator alphabet and the window inverse check.

The rewrite system has two rule families: g* g -> (empty) for isometric
generators, and canonical sorting of adjacent letters from declared commuting
pairs (both unstarred, or both starred).  Both shrink a (length, inversions)
rank, so reduction terminates; the rules only encode operator identities that
hold exactly, so rewriting never changes the realized operator.

The inverse check enumerates the ball of words up to a given length on a
certified probe window, tests every element for the partial-isometry law
x x* x = x, and tests commutation of the idempotents x x*.  For *-closed
semigroups of partial isometries, commuting idempotents is equivalent to
being an inverse semigroup; a pairwise-uniqueness fallback cross-validates
the criterion on small balls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import IsolabError, ProbeExhausted, UnknownGenerator
from .operators import (
    TruncatedOperator,
    adjoint,
    approx_equal,
    compose,
    is_isometry_on_probe,
    isometry_defect,
    probe_distance,
)

Letter = tuple[str, bool]  # (generator id, starred)


@dataclass(frozen=True)
class StarWord:
    """Finite word over an involutive alphabet; empty word is the identity."""

    letters: tuple[Letter, ...] = ()

    def star(self) -> "StarWord":
        return StarWord(tuple((g, not s) for g, s in reversed(self.letters)))

    def __mul__(self, other: "StarWord") -> "StarWord":
        return StarWord(self.letters + other.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "<e>"
        return " ".join(g + ("*" if s else "") for g, s in self.letters)


def parse_word(text: str) -> StarWord:
    """Parse the literal form 's t* s' (whitespace-separated, '*' = adjoint)."""
    letters = []
    for tok in text.split():
        if tok.endswith("*"):
            letters.append((tok[:-1], True))
        else:
            letters.append((tok, False))
    if any(not g for g, _ in letters):
        raise UnknownGenerator(f"empty generator id in {text!r}")
    return StarWord(tuple(letters))


@dataclass
class Generator:
    """Named generator with a truncation factory; `realize(n)` returns the n x n window."""

    gid: str
    realize: Callable[[int], TruncatedOperator]
    isometric: bool = True


class GeneratorSystem:
    """Alphabet, realizations, and declared relations (isometry flags, commuting pairs)."""

    def __init__(
        self,
        generators: Sequence[Generator],
        commuting: Iterable[tuple[str, str]] = (),
        truncation: int = 512,
        tol: float = 1e-10,
        validate: bool = True,
    ):
        self.generators = list(generators)
        self.alphabet = [g.gid for g in self.generators]
        if len(set(self.alphabet)) != len(self.alphabet):
            raise IsolabError(f"duplicate generator ids in {self.alphabet}")
        self._index = {gid: i for i, gid in enumerate(self.alphabet)}
        self._gen = {g.gid: g for g in self.generators}
        pairs = set()
        for a, b in commuting:
            if a not in self._index or b not in self._index:
                raise UnknownGenerator(f"commuting pair ({a}, {b}) outside alphabet")
            if a != b:
                pairs.add(frozenset((a, b)))
        self.commuting = pairs
        self.truncation = truncation
        self.tol = tol
        self.realizations = {g.gid: g.realize(truncation) for g in self.generators}
        if validate:
            self._validate()

    def _validate(self) -> None:
        for g in self.generators:
            op = self.realizations[g.gid]
            if g.isometric and not is_isometry_on_probe(op, self.tol):
                raise IsolabError(
                    f"generator {g.gid!r} declared isometric but defect = {isometry_defect(op):.3e}"
                )
        for pair in self.commuting:
            a, b = sorted(pair)
            ga, gb = self.realizations[a], self.realizations[b]
            if not approx_equal(compose(ga, gb), compose(gb, ga), self.tol):
                raise IsolabError(f"declared commuting pair ({a}, {b}) fails at tolerance {self.tol}")

    def is_isometric(self, gid: str) -> bool:
        return self._gen[gid].isometric

    def commutes(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.commuting

    def letter_index(self, letter: Letter) -> int:
        gid, starred = letter
        if gid not in self._index:
            raise UnknownGenerator(f"letter {gid!r} outside alphabet {self.alphabet}")
        return 2 * self._index[gid] + (1 if starred else 0)

    def word_key(self, w: StarWord) -> tuple:
        return (len(w), tuple(self.letter_index(l) for l in w.letters))

    def realize_letter(self, letter: Letter, size: int) -> TruncatedOperator:
        gid, starred = letter
        if gid not in self._gen:
            raise UnknownGenerator(f"letter {gid!r} outside alphabet {self.alphabet}")
        op = self._gen[gid].realize(size)
        return adjoint(op) if starred else op


# -- rewriting -----------------------------------------------------------------


def _adjacent_allowed(sys: GeneratorSystem, left: Letter, right: Letter) -> bool:
    gl, sl = left
    gr, sr = right
    if sl and not sr and gl == gr and sys.is_isometric(gl):
        return False  # g* g redex
    if not sl and not sr and gl != gr and sys.commutes(gl, gr) and sys._index[gl] > sys._index[gr]:
        return False  # unstarred commuting letters sort ascending
    if sl and sr and gl != gr and sys.commutes(gl, gr) and sys._index[gl] < sys._index[gr]:
        # starred commuting letters sort descending: the rule set is then closed
        # under the involution, which is what makes reduce(w*) = reduce(w)*
        return False
    return True


def reduce_word(w: StarWord, sys: GeneratorSystem) -> StarWord:
    """Confluent normal form: cancel g* g for isometric g, sort commuting letters."""
    letters = list(w.letters)
    for g, _ in letters:
        if g not in sys._index:
            raise UnknownGenerator(f"letter {g!r} outside alphabet {sys.alphabet}")
    changed = True
    while changed:
        changed = False
        for i in range(len(letters) - 1):
            left, right = letters[i], letters[i + 1]
            if _adjacent_allowed(sys, left, right):
                continue
            gl, sl = left
            gr, sr = right
            if sl and not sr and gl == gr:
                del letters[i : i + 2]
            else:
                letters[i], letters[i + 1] = right, left
            changed = True
            break
    return StarWord(tuple(letters))


def is_normal_form(w: StarWord, sys: GeneratorSystem) -> bool:
    return all(_adjacent_allowed(sys, a, b) for a, b in zip(w.letters, w.letters[1:]))


def bicyclic_normal_form(w: StarWord, sys: GeneratorSystem) -> tuple[int, int]:
    """Reduce a single-generator word to s^m s*^n and return (m, n)."""
    if len(sys.alphabet) != 1:
        raise IsolabError("bicyclic normal form needs a single-generator alphabet")
    gid = sys.alphabet[0]
    if not sys.is_isometric(gid):
        raise IsolabError("bicyclic normal form needs an isometric generator")
    nf = reduce_word(w, sys)
    stars = [s for _, s in nf.letters]
    m = stars.count(False)
    n = stars.count(True)
    if stars != [False] * m + [True] * n:
        raise IsolabError(f"word {nf} did not reduce to the s^m s*^n shape")  # unreachable for valid systems
    return m, n


def bicyclic_word(gid: str, m: int, n: int) -> StarWord:
    return StarWord(tuple([(gid, False)] * m + [(gid, True)] * n))


# -- ball enumeration on a certified window --------------------------------------


def _max_col_norm(block: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(block, axis=0))) if block.size else 0.0


@dataclass
class _Element:
    word: StarWord
    block: np.ndarray  # W x W, window realization of the word
    k_cert: int
    lo: int
    hi: int
    eps: float

    def probe_block(self, probe: int) -> np.ndarray:
        return self.block[:, :probe]


class _Dedup:
    """Approximate-equality index: coarse linear signatures, exact column check."""

    def __init__(self, window: int, probe: int, tol: float):
        rng = np.random.default_rng(0xBA11)
        u = rng.standard_normal((2, window)) + 1j * rng.standard_normal((2, window))
        v = rng.standard_normal((probe, 2)) + 1j * rng.standard_normal((probe, 2))
        self.u = u / np.linalg.norm(u, axis=1, keepdims=True)
        self.v = v / np.linalg.norm(v, axis=0, keepdims=True)
        self.tol = tol
        # |delta sig| <= ||delta block||_2 <= sqrt(probe) * (max column norm)
        self.margin = tol * float(np.sqrt(probe)) * 1.0000001 + 1e-15
        self.probe = probe
        self._sigs: list[np.ndarray] = []
        self._blocks: list[np.ndarray] = []

    def signature(self, probe_block: np.ndarray) -> np.ndarray:
        return (self.u @ probe_block @ self.v).ravel()

    def find(self, probe_block: np.ndarray, sig: np.ndarray) -> int | None:
        if not self._sigs:
            return None
        sigs = np.stack(self._sigs)
        close = np.nonzero(np.max(np.abs(sigs - sig), axis=1) <= self.margin)[0]
        for idx in close:
            if _max_col_norm(self._blocks[idx] - probe_block) < self.tol:
                return int(idx)
        return None

    def add(self, probe_block: np.ndarray, sig: np.ndarray) -> int:
        self._sigs.append(sig)
        self._blocks.append(probe_block)
        return len(self._sigs) - 1


class _BallEngine:
    """BFS over normal-form words realized as blocks on a certified window.

    Words extend on the left (new letter times parent block), so only the
    generator windows are ever applied as full matrices; a word's adjoint
    block is exactly the conjugate transpose of its block, which keeps the
    ball engine independent of which representative words survive pruning.
    """

    def __init__(
        self,
        sys: GeneratorSystem,
        max_length: int,
        truncation: int,
        probe: int = 64,
        fingerprint_tol: float = 1e-9,
    ):
        if max_length < 0:
            raise IsolabError("max_length must be >= 0")
        self.sys = sys
        self.max_length = max_length
        self.probe = probe
        self.fingerprint_tol = fingerprint_tol
        height = max(1, max(op.band[1] for op in sys.realizations.values()))
        need = probe + max_length * height
        if truncation < need:
            raise ProbeExhausted(
                f"truncation {truncation} < probe + L*D_eff = {need} (probe {probe}, L {max_length}, D_eff {height})"
            )
        # even window so direct-sum generators can realize at the window size
        window = min(truncation, need + 8)
        window -= window % 2
        if window < need:
            raise ProbeExhausted(f"even window {window} below the required {need}; raise the truncation")
        self.window = window
        self.truncation = truncation
        self.letters: list[Letter] = []
        for gid in sys.alphabet:
            self.letters.append((gid, False))
            self.letters.append((gid, True))
        self.letter_ops = {l: sys.realize_letter(l, self.window) for l in self.letters}
        self.elements: list[_Element] = []
        self.dedup = _Dedup(self.window, probe, fingerprint_tol)

    def run(self) -> list[_Element]:
        if self.elements:
            return self.elements
        root = _Element(StarWord(), np.eye(self.window, dtype=complex), self.window, 0, 0, 0.0)
        self._admit(root)
        frontier = [root]
        for _ in range(self.max_length):
            new_frontier = []
            for letter in self.letters:
                lop = self.letter_ops[letter]
                for parent in frontier:
                    if parent.word.letters and not _adjacent_allowed(self.sys, letter, parent.word.letters[0]):
                        continue
                    k_cert = min(parent.k_cert, lop.probe_dim - parent.hi)
                    if k_cert < self.probe:
                        raise ProbeExhausted(
                            f"word {letter[0]}{'*' if letter[1] else ''} {parent.word} leaves {k_cert} certified columns"
                        )
                    child = _Element(
                        word=StarWord((letter,) + parent.word.letters),
                        block=lop.matrix @ parent.block,
                        k_cert=k_cert,
                        lo=parent.lo + lop.band[0],
                        hi=parent.hi + lop.band[1],
                        eps=parent.eps + lop.tail_bound,
                    )
                    if self._admit(child):
                        new_frontier.append(child)
            frontier = new_frontier
        return self.elements

    def _admit(self, el: _Element) -> bool:
        pb = el.probe_block(self.probe)
        sig = self.dedup.signature(pb)
        if self.dedup.find(pb, sig) is not None:
            return False  # duplicate operator; its extensions realize duplicates too
        self.dedup.add(pb, sig)
        self.elements.append(el)
        return True

    def find_operator(self, probe_block: np.ndarray) -> int | None:
        return self.dedup.find(probe_block, self.dedup.signature(probe_block))


def enumerate_ball(
    sys: GeneratorSystem,
    max_length: int,
    truncation: int | None = None,
    probe: int = 64,
    fingerprint_tol: float = 1e-9,
) -> list[tuple[StarWord, TruncatedOperator]]:
    """All products of at most `max_length` letters, deduplicated by normal form
    and then by probe-action fingerprint; (length, lex) output order.

    The representative operators live on the certified window (size <= the
    requested truncation); their probe metadata reflects the corner rule.
    """
    engine = _BallEngine(sys, max_length, truncation or sys.truncation, probe, fingerprint_tol)
    out = []
    for el in engine.run():
        op = TruncatedOperator(el.block, probe_dim=el.k_cert, tail_bound=el.eps, band=(el.lo, el.hi))
        out.append((el.word, op))
    return out


# -- inverse check ----------------------------------------------------------------


@dataclass
class InverseCheckReport:
    """Outcome of the window inverse-semigroup test."""

    verdict: str  # "inverse" | "not_inverse" | "inconclusive"
    witness: StarWord | None
    residual: float | None
    ball_size: int
    max_length: int
    truncation: int
    window: int
    probe: int
    tol: float
    structural: bool = False
    witness_kind: str | None = None
    max_residual: float = 0.0
    idempotent_count: int | None = None
    closure_ok: bool = True
    eps_budget: float = 0.0
    exhaustive_consistent: bool | None = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": None if self.witness is None else str(self.witness),
            "witness_kind": self.witness_kind,
            "residual": self.residual,
            "ball_size": self.ball_size,
            "max_length": self.max_length,
            "truncation": self.truncation,
            "window": self.window,
            "probe": self.probe,
            "tol": self.tol,
            "structural": self.structural,
            "max_residual": self.max_residual,
            "idempotent_count": self.idempotent_count,
            "closure_ok": self.closure_ok,
            "eps_budget": self.eps_budget,
            "exhaustive_consistent": self.exhaustive_consistent,
        }


def check_inverse(
    sys: GeneratorSystem,
    max_length: int,
    truncation: int | None = None,
    tol: float = 1e-9,
    probe: int = 64,
    exhaustive: bool = False,
    fingerprint_tol: float = 1e-9,
) -> InverseCheckReport:
    """Window decision procedure for inverseness of the generated *-semigroup.

    not_inverse needs a residual above 100*tol (decision margin); inverse needs
    every residual below tol plus the in-window closure cross-check; anything
    in between is reported inconclusive.  The minimal witness is the first
    failure in (length, lex) order.
    """
    engine = _BallEngine(sys, max_length, truncation or sys.truncation, probe, fingerprint_tol)
    elements = engine.run()
    margin = 100.0 * tol

    failures: list[tuple[tuple, StarWord, float, str]] = []
    max_residual = 0.0
    soft_zone = False

    # partial-isometry law x x* x = x on the probe columns
    for el in elements:
        u1 = el.probe_block(probe)
        u2 = el.block.conj().T @ u1
        u3 = el.block @ u2
        r = _max_col_norm(u3 - u1)
        max_residual = max(max_residual, r)
        if r > margin:
            failures.append((engine.sys.word_key(el.word), el.word, r, "partial_isometry"))
        elif r >= tol:
            soft_zone = True

    # idempotents e = x x*, deduplicated, must commute pairwise; when a
    # partial-isometry witness already decides the verdict, the O(ball^2)
    # commutator sweep cannot produce a shorter witness and is skipped
    idempotent_count: int | None = None
    if not failures:
        idem_dedup = _Dedup(engine.window, probe, fingerprint_tol)
        idempotents: list[tuple[_Element, np.ndarray]] = []
        for el in elements:
            e_block = el.block @ el.block.conj().T
            pb = e_block[:, :probe]
            sig = idem_dedup.signature(pb)
            if idem_dedup.find(pb, sig) is None:
                idem_dedup.add(pb, sig)
                idempotents.append((el, e_block))
        idempotent_count = len(idempotents)
        for i in range(len(idempotents)):
            xi, ei = idempotents[i]
            for j in range(i + 1, len(idempotents)):
                xj, ej = idempotents[j]
                comm = ei @ ej[:, :probe] - ej @ ei[:, :probe]
                r = _max_col_norm(comm)
                max_residual = max(max_residual, r)
                if r > margin:
                    w = xi.word * xi.word.star() * xj.word * xj.word.star()
                    failures.append((engine.sys.word_key(w), w, r, "idempotent_commutator"))
                elif r >= tol:
                    soft_zone = True

    # in-window closure: products with combined length <= L-2 must land in the ball
    closure_ok = True
    for i, x in enumerate(elements):
        if not closure_ok:
            break
        for y in elements:
            if len(x.word) + len(y.word) > max_length - 2:
                continue
            prod = x.block @ y.probe_block(probe)
            if engine.find_operator(prod) is None:
                closure_ok = False
                break

    structural = len(sys.alphabet) == 1 and sys.is_isometric(sys.alphabet[0])
    if failures:
        key, witness, residual, kind = min(failures, key=lambda f: f[0])
        verdict = "not_inverse"
    elif soft_zone or not closure_ok:
        verdict, witness, residual, kind = "inconclusive", None, None, None
    else:
        verdict, witness, residual, kind = "inverse", None, None, None

    report = InverseCheckReport(
        verdict=verdict,
        witness=witness,
        residual=residual,
        ball_size=len(elements),
        max_length=max_length,
        truncation=engine.truncation,
        window=engine.window,
        probe=probe,
        tol=tol,
        structural=structural and verdict == "inverse",
        witness_kind=kind,
        max_residual=max_residual,
        idempotent_count=idempotent_count,
        closure_ok=closure_ok,
        eps_budget=float(max((el.eps for el in elements), default=0.0)),
    )

    if exhaustive:
        report.exhaustive_consistent = _exhaustive_agrees(engine, elements, report, tol)
    return report


def _exhaustive_agrees(
    engine: _BallEngine, elements: list[_Element], report: InverseCheckReport, tol: float
) -> bool | None:
    """Pairwise-uniqueness fallback: every x must have exactly one inverse in the ball."""
    if len(elements) > 200:
        raise IsolabError(f"exhaustive cross-validation limited to balls <= 200 (got {len(elements)})")
    probe = engine.probe
    match_tol = 10.0 * tol
    all_unique = True
    for x in elements:
        matches = 0
        xp = x.probe_block(probe)
        for y in elements:
            xyx = x.block @ (y.block @ xp)
            if _max_col_norm(xyx - xp) >= match_tol:
                continue
            yxy = y.block @ (x.block @ y.probe_block(probe))
            if _max_col_norm(yxy - y.probe_block(probe)) < match_tol:
                matches += 1
        if matches != 1:
            all_unique = False
            break
    if report.verdict == "inconclusive":
        return None
    return (report.verdict == "inverse") == all_unique
