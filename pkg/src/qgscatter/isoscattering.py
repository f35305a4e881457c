"""Deciding isophasal, isopolar and conjugacy relations between systems.

Two scattering systems whose matrices are conjugate by one k-independent
invertible matrix share their total phase (det S) and their pole sets; a
conjugator restricted from an eigenspace isomorphism is exactly what makes
two systems "the same seen from outside". The solver looks for such a
conjugator by sampling S at several real k, solving the joint Sylvester-type
system Pi S1(k_j) = S2(k_j) Pi for its null space, and validating any
invertible null vector on held-out samples. Sampling can only ever provide
numerical evidence, never proof, and results are labeled accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DimensionMismatch,
    SampleAtSingularity,
    SingularInterior,
    WindowMismatch,
)
from .contours import Rect
from .global_scattering import Assembly
from .graph_core import OpenGraph
from .resonances import PoleSet, PoleSearchOptions, find_poles

EVIDENCE_LABEL = "numerical evidence"

# Golden-ratio low-discrepancy sequence over (0.5, 15]; deterministic.
_SAMPLE_LO = 0.5
_SAMPLE_HI = 15.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

_COMBINATION_SEED = 20101007
_N_RANDOM_COMBINATIONS = 20


def default_samples(count: int, skip: int = 0) -> List[float]:
    """The fixed low-discrepancy training/holdout points in (0.5, 15]."""
    out = []
    j = skip
    while len(out) < count:
        frac = ((j + 1) * _GOLDEN) % 1.0
        out.append(_SAMPLE_LO + (_SAMPLE_HI - _SAMPLE_LO) * frac)
        j += 1
    return out


@dataclass(frozen=True)
class ConjugacyResult:
    """Outcome of the conjugator search.

    status is "found", "not_found" or "inconclusive"; when found, ``pi`` is
    a unit-Frobenius-norm invertible matrix with
    max_k ||Pi S1(k) - S2(k) Pi||_F <= tolerance over the holdout samples.
    """

    status: str
    pi: Optional[np.ndarray]
    residual: Optional[float]
    solution_dim: int
    training_ks: Tuple[float, ...]
    holdout_ks: Tuple[float, ...]
    label: str = EVIDENCE_LABEL

    @property
    def found(self) -> bool:
        return self.status == "found"


def _evaluate_safely(s_fun, k, *, user_supplied: bool):
    try:
        return np.asarray(s_fun(k), dtype=complex)
    except SingularInterior as exc:
        if user_supplied:
            raise SampleAtSingularity(
                f"sample k = {k} hits a singular interior point"
            ) from exc
        return None


def _collect_samples(s1, s2, ks: Optional[Sequence[float]], count: int, skip: int):
    """Evaluate both matrix functions, skipping auto-generated singular points."""
    pairs = []
    used = []
    if ks is not None:
        for k in ks:
            a = _evaluate_safely(s1, k, user_supplied=True)
            b = _evaluate_safely(s2, k, user_supplied=True)
            pairs.append((a, b))
            used.append(float(k))
        return pairs, used
    j = skip
    while len(pairs) < count:
        frac = ((j + 1) * _GOLDEN) % 1.0
        k = _SAMPLE_LO + (_SAMPLE_HI - _SAMPLE_LO) * frac
        j += 1
        a = _evaluate_safely(s1, k, user_supplied=False)
        b = _evaluate_safely(s2, k, user_supplied=False) if a is not None else None
        if a is None or b is None:
            continue
        pairs.append((a, b))
        used.append(k)
    return pairs, used, j


def find_conjugator(s1: Callable[[float], np.ndarray], s2: Callable[[float], np.ndarray],
                    k_samples: Optional[Sequence[float]] = None, *,
                    n_training: int = 6, n_holdout: int = 5,
                    residual_tol: float = 1e-8, null_rtol: float = 1e-10,
                    ) -> ConjugacyResult:
    """Search for one invertible k-independent Pi with Pi S1(k) = S2(k) Pi.

    The joint homogeneous system over the training samples is solved by a
    singular-value cut at ``null_rtol`` relative to the largest value; the
    null space is then probed for an invertible element (each basis vector,
    then 20 seeded random unit combinations) and the first hit is validated
    on holdout samples. Verdicts: "found" on holdout success, "inconclusive"
    when training succeeds but holdout does not, "not_found" when the null
    space is trivial or contains no invertible element.
    """
    if k_samples is not None:
        if len(k_samples) < 3:
            raise ValueError("need at least 3 training samples")
        pairs, used = _collect_samples(s1, s2, k_samples, 0, 0)
        hold_pairs, hold_used, _ = _collect_samples(s1, s2, None, n_holdout, 1000)
    else:
        pairs, used, consumed = _collect_samples(s1, s2, None, n_training, 0)
        hold_pairs, hold_used, _ = _collect_samples(s1, s2, None, n_holdout, consumed)

    n = pairs[0][0].shape[0]
    for a, b in pairs:
        if a.shape != (n, n) or b.shape != (n, n):
            raise DimensionMismatch(
                f"matrix functions must agree in dimension, got {a.shape} vs {b.shape}"
            )

    eye = np.eye(n)
    rows = []
    for a, b in pairs:
        # vec(Pi A - B Pi) = (kron(I, A^T) - kron(B, I)) vec(Pi), row-major vec.
        rows.append(np.kron(eye, a.T) - np.kron(b, eye))
    stacked = np.vstack(rows)
    _, svals, vh = np.linalg.svd(stacked)
    smax = svals[0] if svals.size else 0.0
    cutoff = null_rtol * max(1.0, smax)
    rank = int(np.sum(svals > cutoff))
    null_dim = n * n - rank
    if null_dim == 0:
        return ConjugacyResult("not_found", None, None, 0,
                               tuple(used), tuple(hold_used))
    basis = vh[rank:].conj()

    candidates = [basis[i] for i in range(null_dim)]
    rng = np.random.default_rng(_COMBINATION_SEED)
    for _ in range(_N_RANDOM_COMBINATIONS):
        coeff = rng.standard_normal(null_dim) + 1j * rng.standard_normal(null_dim)
        candidates.append(coeff @ basis)

    pi = None
    for vec in candidates:
        nrm = np.linalg.norm(vec)
        if nrm == 0:
            continue
        cand = (vec / nrm).reshape(n, n)
        if abs(np.linalg.det(cand)) > 1e-8:
            pi = cand
            break
    if pi is None:
        return ConjugacyResult("not_found", None, None, null_dim,
                               tuple(used), tuple(hold_used))

    residual = 0.0
    for (a, b), k in zip(hold_pairs, hold_used):
        residual = max(residual, float(np.linalg.norm(pi @ a - b @ pi)))
    status = "found" if residual <= residual_tol else "inconclusive"
    return ConjugacyResult(status, pi, residual, null_dim, tuple(used), tuple(hold_used))


def conjugation_residual(pi, s1, s2, ks) -> float:
    """max_k ||Pi S1(k) - S2(k) Pi||_F over the given samples."""
    pi = np.asarray(pi, dtype=complex)
    out = 0.0
    for k in ks:
        a = np.asarray(s1(k), dtype=complex)
        b = np.asarray(s2(k), dtype=complex)
        out = max(out, float(np.linalg.norm(pi @ a - b @ pi)))
    return out


def isophasal_check(s1, s2, k_samples: Optional[Sequence[float]] = None,
                    tol: float = 1e-9) -> Tuple[bool, float]:
    """Equality of det S1(k) and det S2(k) on real samples.

    Both determinants lie on the unit circle for unitary S, so comparing the
    values directly is equivalent to comparing total phases modulo 2 pi and
    avoids branch tracking. Defaults to 64 points in (0.1, 20].
    """
    if k_samples is None:
        k_samples = [0.1 + (20.0 - 0.1) * (j + 1) / 64 for j in range(64)]
    dev = 0.0
    for k in k_samples:
        try:
            d1 = complex(np.linalg.det(np.asarray(s1(k), dtype=complex)))
            d2 = complex(np.linalg.det(np.asarray(s2(k), dtype=complex)))
        except SingularInterior as exc:
            raise SampleAtSingularity(f"sample k = {k} hits a singular point") from exc
        dev = max(dev, abs(d1 - d2))
    return dev <= tol, dev


@dataclass(frozen=True)
class PolePairing:
    matched: Tuple[Tuple[complex, complex, float], ...]
    unmatched_1: Tuple[complex, ...]
    unmatched_2: Tuple[complex, ...]
    max_distance: float


def isopolar_check(p1: PoleSet, p2: PoleSet, match_tol: float = 1e-6,
                   ) -> Tuple[bool, PolePairing]:
    """Greedy nearest pairing of two pole sets from identical searches."""
    if p1.window != p2.window or p1.options != p2.options:
        raise WindowMismatch("pole sets come from different windows or scan parameters")

    ks1 = [p.k for p in p1.poles for _ in range(p.multiplicity)]
    ks2 = [p.k for p in p2.poles for _ in range(p.multiplicity)]
    matched = []
    max_d = 0.0
    remaining1, remaining2 = list(ks1), list(ks2)
    while remaining1 and remaining2:
        best = None
        for i, a in enumerate(remaining1):
            for j, b in enumerate(remaining2):
                d = abs(a - b)
                if best is None or d < best[0]:
                    best = (d, i, j)
        d, i, j = best
        if d > match_tol:
            break
        matched.append((remaining1[i], remaining2[j], d))
        max_d = max(max_d, d)
        remaining1.pop(i)
        remaining2.pop(j)
    ok = not remaining1 and not remaining2 and len(ks1) == len(ks2)
    return ok, PolePairing(tuple(matched), tuple(remaining1), tuple(remaining2), max_d)


@dataclass(frozen=True)
class TransplantabilityReport:
    verdict: str
    conjugacy: ConjugacyResult
    isophasal: bool
    isophasal_deviation: float
    isopolar: bool
    pairing: PolePairing
    poles_1: PoleSet
    poles_2: PoleSet
    warnings: Tuple[str, ...] = ()
    label: str = EVIDENCE_LABEL


def transplantability_verdict(og1: OpenGraph, og2: OpenGraph, window: Rect,
                              k_samples: Optional[Sequence[float]] = None, *,
                              pole_options: Optional[PoleSearchOptions] = None,
                              ) -> TransplantabilityReport:
    """Full pipeline: conjugator search, phase comparison, pole comparison.

    The verdict is "transplantable (numerical evidence)" when a conjugator
    is found, and "no transplantation on these lead sets" when the search
    fails or the pole sets differ.
    """
    if og1.n_leads != og2.n_leads:
        raise DimensionMismatch(
            f"lead counts differ ({og1.n_leads} vs {og2.n_leads}); "
            "conjugacy needs equal dimensions"
        )
    asm1, asm2 = Assembly(og1), Assembly(og2)
    s1 = lambda k: asm1.scattering(k).s
    s2 = lambda k: asm2.scattering(k).s

    conj = find_conjugator(s1, s2, k_samples)
    phases_ok, dev = isophasal_check(s1, s2)
    opts = pole_options if pole_options is not None else PoleSearchOptions()
    poles1 = find_poles(og1, window, opts)
    poles2 = find_poles(og2, window, opts)
    polar_ok, pairing = isopolar_check(poles1, poles2)

    warnings = []
    if conj.found and not polar_ok:
        warnings.append(
            "conjugator found but pole sets disagree; check scan residuals"
        )
    if not conj.found and phases_ok:
        warnings.append(
            "systems are isophasal yet no conjugator was found on these samples"
        )
    if conj.found:
        verdict = f"transplantable ({EVIDENCE_LABEL})"
    elif conj.status == "not_found" or not polar_ok:
        verdict = "no transplantation on these lead sets"
    else:
        verdict = "inconclusive"
    return TransplantabilityReport(
        verdict=verdict,
        conjugacy=conj,
        isophasal=phases_ok,
        isophasal_deviation=dev,
        isopolar=polar_ok,
        pairing=pairing,
        poles_1=poles1,
        poles_2=poles2,
        warnings=tuple(warnings),
    )
