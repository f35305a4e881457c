"""Assembly of the lead-to-lead scattering matrix and compact spectra.

The solver works in directed-bond coordinates: every internal edge carries
two directed bonds, every lead one channel. Per vertex, the local condition
matrix sigma_v maps incoming channel amplitudes to outgoing ones; stacking
all vertices gives the block channel matrix Sigma, split into lead (L) and
internal-bond (B) channels. A wave departing along bond b arrives at the
far end multiplied by exp(ik L_b), collected in the diagonal propagator
T(k). Eliminating the interior unknowns yields

    S(k) = Sigma_LL + Sigma_LB T (I - Sigma_BB T)^(-1) Sigma_BL,

with D(k) = det(I - Sigma_BB T(k)) as the interior determinant whose zeros
are the poles of S. For a compact graph (no leads) D doubles as the secular
function: its positive real zeros are the square roots of the Laplacian
eigenvalues.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import contours
from .errors import (
    BoundaryZero,
    SingularInterior,
    ValidationError,
    WindowTooWide,
    ZeroK,
)
from .graph_core import BondTable, MetricGraph, OpenGraph, bond_table
from .linalg import lu_det
from .vertex_scattering import condition_sigma

_SINGULAR_TOL = 1e-13


@dataclass(frozen=True)
class ScatteringEvaluation:
    """One evaluation of the scattering matrix S(k)."""

    k: complex
    s: np.ndarray
    interior_det: complex
    interior_dim: int
    interior_rank: int

    @property
    def unitarity_defect(self) -> float:
        n = self.s.shape[0]
        return float(np.linalg.norm(self.s @ self.s.conj().T - np.eye(n)))


@dataclass(frozen=True)
class Eigenvalue:
    k: float
    multiplicity: int
    residual: float


@dataclass(frozen=True)
class SpectrumWindow:
    k_min: float
    k_max: float
    eigenvalues: Tuple[Eigenvalue, ...] = ()

    def ks(self) -> np.ndarray:
        return np.array([ev.k for ev in self.eigenvalues])


class Assembly:
    """Cached channel matrices for one open (or closed) graph.

    For graphs whose conditions are all k-independent the Sigma blocks are
    built once; only the propagator T(k) varies with k.
    """

    def __init__(self, og: OpenGraph):
        self.og = og
        self.table: BondTable = bond_table(og)
        self._rules = {}
        for v in og.graph.vertices:
            d = len(self.table.vertex_channels[v.id])
            if d == 0:
                continue
            self._rules[v.id] = condition_sigma(v.condition, d)
        self.k_independent = all(r.is_constant for r in self._rules.values())
        self._cached_blocks = self._build_blocks(1.0) if self.k_independent else None

    # -- channel wiring ----------------------------------------------------

    def _channel_io(self, ch):
        # Returns ((block, in_index), (block, out_index)) for a local channel.
        if ch[0] == "lead":
            return ("L", ch[1]), ("L", ch[1])
        _, e, end = ch
        return ("B", int(self.table.bond_in_index[e, end])), (
            "B",
            int(self.table.bond_out_index[e, end]),
        )

    def _build_blocks(self, k):
        t = self.table
        nl, nb = t.n_leads, t.n_bonds
        s_ll = np.zeros((nl, nl), dtype=complex)
        s_lb = np.zeros((nl, nb), dtype=complex)
        s_bl = np.zeros((nb, nl), dtype=complex)
        s_bb = np.zeros((nb, nb), dtype=complex)
        targets = {("L", "L"): s_ll, ("L", "B"): s_lb, ("B", "L"): s_bl, ("B", "B"): s_bb}
        for vid, channels in t.vertex_channels.items():
            if not channels:
                continue
            sig = self._rules[vid](k)
            ios = [self._channel_io(ch) for ch in channels]
            for i, (_, (ob, oi)) in enumerate(ios):
                for j, ((ib, ii), _) in enumerate(ios):
                    targets[(ob, ib)][oi, ii] = sig[i, j]
        return s_ll, s_lb, s_bl, s_bb

    def blocks(self, k):
        if self._cached_blocks is not None:
            return self._cached_blocks
        return self._build_blocks(k)

    def propagator(self, k) -> np.ndarray:
        return np.exp(1j * complex(k) * self.table.bond_lengths)

    def interior_matrix(self, k) -> np.ndarray:
        _, _, _, s_bb = self.blocks(k)
        return np.eye(self.table.n_bonds) - s_bb * self.propagator(k)[None, :]

    def interior_det(self, k) -> complex:
        if self.table.n_bonds == 0:
            return 1.0 + 0.0j
        return lu_det(self.interior_matrix(k))

    def interior_log_derivative(self, k) -> complex:
        """d/dk log D(k) via tr(M^-1 M'); valid for k-independent conditions."""
        t = self.table
        if t.n_bonds == 0:
            return 0.0 + 0.0j
        _, _, _, s_bb = self.blocks(k)
        tk = self.propagator(k)
        m = np.eye(t.n_bonds) - s_bb * tk[None, :]
        mprime = -s_bb * (1j * t.bond_lengths * tk)[None, :]
        x = np.linalg.solve(m, mprime)
        return complex(np.trace(x))

    def det_sigma_phase(self, k) -> float:
        """Principal argument of det Sigma(k) over all channels."""
        acc = 1.0 + 0.0j
        for vid, channels in self.table.vertex_channels.items():
            if not channels:
                continue
            d = lu_det(self._rules[vid](k))
            acc *= d / abs(d)
        return cmath.phase(acc)

    def scattering(self, k) -> ScatteringEvaluation:
        k = complex(k)
        if k == 0:
            raise ZeroK("k must be nonzero")
        s_ll, s_lb, s_bl, s_bb = self.blocks(k)
        nb = self.table.n_bonds
        if nb == 0:
            return ScatteringEvaluation(k=k, s=s_ll.copy(), interior_det=1.0 + 0.0j,
                                        interior_dim=0, interior_rank=0)
        tk = self.propagator(k)
        m = np.eye(nb) - s_bb * tk[None, :]
        det = lu_det(m)
        sv = np.linalg.svd(m, compute_uv=False)
        rank = int(np.sum(sv > 1e-12 * max(1.0, float(sv[0]))))
        if abs(det) < _SINGULAR_TOL and k.imag == 0:
            raise SingularInterior(
                f"interior system singular at k = {k} (|D| = {abs(det):.3e}); "
                "this k hosts a bound state or exceptional point",
                k=k,
                determinant=det,
            )
        try:
            x = np.linalg.solve(m, s_bl)
        except np.linalg.LinAlgError as exc:
            raise SingularInterior(f"interior system exactly singular at k = {k}",
                                   k=k, determinant=det) from exc
        s = s_ll + (s_lb * tk[None, :]) @ x
        return ScatteringEvaluation(k=k, s=s, interior_det=det, interior_dim=nb,
                                    interior_rank=rank)


def scattering_matrix(og: OpenGraph, k) -> ScatteringEvaluation:
    """Evaluate S(k) for an open graph.

    Raises :class:`SingularInterior` at real k where the interior system is
    singular (an exceptional point, e.g. a bound state decoupled from the
    leads); no regularized S is returned there.
    """
    return Assembly(og).scattering(k)


def secular_value(og: OpenGraph, k) -> complex:
    """det(I - S(k)); its real zeros are the compact graph's eigenvalues
    when leads are attached at Neumann vertices."""
    ev = scattering_matrix(og, k)
    return lu_det(np.eye(ev.s.shape[0]) - ev.s)


def interior_determinant(og: OpenGraph, k) -> complex:
    """D(k) = det(I - Sigma_BB T(k)); holomorphic in k for k-independent
    conditions, with resonance poles of S(k) at its zeros."""
    k = complex(k)
    if k == 0:
        raise ZeroK("k must be nonzero")
    return Assembly(og).interior_det(k)


# ---------------------------------------------------------------------------
# compact spectra
# ---------------------------------------------------------------------------

def _closed(graph: MetricGraph) -> OpenGraph:
    # Internal shim: the assembly machinery accepts a lead-free OpenGraph.
    return OpenGraph(graph, ())


class _RealSecular:
    """Phase-regularized secular function of a closed graph.

    For unitary channel matrices U(k) = Sigma T(k), the function
    r(k) = det(I - U) * exp(-i arg det U / 2) * i^n is real for real k and
    changes sign at simple eigenvalues, which makes bracketing reliable.
    The phase of det U is exp(i k sum L_b) det Sigma, exactly linear in k
    when Sigma is constant.
    """

    def __init__(self, asm: Assembly):
        self.asm = asm
        self.total_bond_length = float(np.sum(asm.table.bond_lengths))
        self.n = asm.table.n_bonds
        self._phase0 = asm.det_sigma_phase(1.0) if asm.k_independent else None

    def complex_value(self, k):
        return self.asm.interior_det(k)

    def theta(self, k):
        if self._phase0 is not None:
            return self._phase0 + k * self.total_bond_length
        return self.asm.det_sigma_phase(k) + k * self.total_bond_length

    def value(self, k):
        f = self.complex_value(k)
        reg = f * cmath.exp(-0.5j * self.theta(k)) * (1j ** self.n)
        return reg.real


def _newton_polish(asm: Assembly, k0, *, max_iter=150, tol=1e-13, trust=0.5):
    """Newton on D with the exact logarithmic derivative; falls back to a
    central difference when conditions are k-dependent. Stops early if the
    iterates drift more than ``trust`` from the start (false candidates
    launched far from any zero would otherwise run away)."""
    k = complex(k0)
    for it in range(max_iter):
        if abs(k - k0) > trust:
            return k, it
        if asm.k_independent:
            try:
                dlog = asm.interior_log_derivative(k)
            except np.linalg.LinAlgError:
                # the iterate sits exactly on a zero
                return k, it
        else:
            h = 1e-7 * max(1.0, abs(k))
            dplus, dminus = asm.interior_det(k + h), asm.interior_det(k - h)
            d0 = asm.interior_det(k)
            deriv = (dplus - dminus) / (2 * h)
            if deriv == 0:
                return k, it
            dlog = deriv / d0 if d0 != 0 else 0.0
        if dlog == 0:
            return k, it
        step = 1.0 / dlog
        k = k - step
        if abs(step) <= tol * max(1.0, abs(k)):
            return k, it + 1
    return k, max_iter


def eigenvalues_compact(graph: MetricGraph, window, *, node_budget: int = 2_000_000) -> SpectrumWindow:
    """Locate the Laplacian eigenvalues (as k values) in a real window.

    The secular function is scanned with step min(0.01, pi / (4 L_total)),
    sign changes are bisected, near-zero dips are polished by Newton, and
    each candidate's multiplicity comes from the winding number of the
    secular function on a small circle around it.
    """
    if isinstance(window, SpectrumWindow):
        k_min, k_max = window.k_min, window.k_max
    else:
        k_min, k_max = window
    if not (0 < k_min < k_max):
        raise ValidationError(f"window must satisfy 0 < k_min < k_max, got ({k_min}, {k_max})")

    if not graph.edges:
        return SpectrumWindow(k_min, k_max, ())

    asm = Assembly(_closed(graph))
    total = graph.total_length
    step = min(0.01, math.pi / (4.0 * total))
    n_samples = int(math.ceil((k_max - k_min) / step)) + 1
    if n_samples > node_budget:
        raise WindowTooWide(
            f"scan would need {n_samples} nodes (budget {node_budget}); shrink the window"
        )

    sec = _RealSecular(asm)
    ks = np.linspace(k_min, k_max, n_samples)
    rs = np.array([sec.value(k) for k in ks])

    candidates = []

    # Sign changes bracket odd-multiplicity zeros.
    for i in range(n_samples - 1):
        if rs[i] == 0.0:
            candidates.append(ks[i])
        elif rs[i] * rs[i + 1] < 0:
            lo, hi = ks[i], ks[i + 1]
            flo = rs[i]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fm = sec.value(mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if flo * fm < 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
                if hi - lo < 1e-13 * max(1.0, mid):
                    break
            candidates.append(0.5 * (lo + hi))
    if rs[-1] == 0.0:
        candidates.append(ks[-1])

    # Dips catch even-multiplicity zeros that never change sign.
    absr = np.abs(rs)
    win = 30
    for i in range(1, n_samples - 1):
        if absr[i] <= absr[i - 1] and absr[i] <= absr[i + 1]:
            local = np.max(absr[max(0, i - win):min(n_samples, i + win + 1)])
            if local > 0 and absr[i] < 1e-4 * local:
                candidates.append(ks[i])

    # Polish, verify, deduplicate.
    found = []
    for k0 in candidates:
        k_star, _ = _newton_polish(asm, k0)
        if abs(k_star.imag) > 1e-9:
            continue
        kr = float(k_star.real)
        if not (k_min - 1e-9 <= kr <= k_max + 1e-9):
            continue
        if any(abs(kr - f) < 1e-7 for f in found):
            continue
        found.append(kr)

    results = []
    rate = float(np.sum(asm.table.bond_lengths)) + 1.0
    found_sorted = sorted(found)
    for i, kr in enumerate(found_sorted):
        # A zero of multiplicity m has |D| ~ r^m on a radius-r circle, which
        # can undercut the contour zero tolerance; grow the circle, but stay
        # clear of neighboring zeros.
        gaps = [abs(kr - other) for j, other in enumerate(found_sorted) if j != i]
        cap = min([0.05] + [0.4 * g for g in gaps])
        mult = 1
        radius = 1e-4
        while True:
            try:
                mult = contours.circle_winding(asm.interior_det, complex(kr), radius,
                                               samples=48, rate_hint=rate)
                break
            except BoundaryZero:
                radius *= 2.0
                if radius > cap:
                    break
        if mult < 1:
            continue
        results.append(Eigenvalue(k=kr, multiplicity=mult, residual=abs(asm.interior_det(kr))))

    return SpectrumWindow(k_min, k_max, tuple(results))
