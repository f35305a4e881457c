"""Resonance poles: zeros of the interior determinant in a complex window.

The search subdivides the window recursively, counting zeros per cell with
the argument principle, until each cell with zeros is small; candidates are
then polished by Newton iteration and their multiplicities confirmed by a
small winding circle. Contours that pass too close to a zero are inflated
slightly and retried, so zeros sitting exactly on the requested window edge
(commonly on the real axis) are still captured by the cells they border.

Real-axis zeros of the determinant are not scattering poles; they mark
states decoupled from the leads and are reported separately.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np

from .contours import Rect, circle_winding_jittered, rect_winding
from .errors import BoundaryZero, Diverged, NonHolomorphic, ZeroK
from .global_scattering import Assembly
from .graph_core import LinearAB, OpenGraph


def worker_count() -> int:
    """Worker cap from QGS_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("QGS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Pole:
    k: complex
    multiplicity: int
    residual: float
    iterations: int


@dataclass(frozen=True)
class PoleSearchOptions:
    min_cell: float = 1e-6
    refine_cell: float = 0.1
    dedupe_radius: float = 1e-7
    residual_tol: float = 1e-8
    boundary_samples: int = 64
    max_retries: int = 5
    jitter: float = 1e-6
    real_axis_tol: float = 1e-9


@dataclass(frozen=True)
class PoleSet:
    """Located poles, sorted by (Re k, Im k).

    ``real_axis_zeros`` lists determinant zeros on the real axis (decoupled
    bound states), which are excluded from ``poles``. Zeros refined into the
    upper half plane are kept but flagged, since for k-independent vertex
    conditions physical resonances lie in Im k < 0.
    """

    poles: Tuple[Pole, ...]
    window: Rect
    options: PoleSearchOptions
    real_axis_zeros: Tuple[Pole, ...] = ()
    upper_half_flagged: Tuple[complex, ...] = ()
    warnings: Tuple[str, ...] = ()

    def ks(self) -> np.ndarray:
        return np.array([p.k for p in self.poles])

    def total_count(self) -> int:
        return sum(p.multiplicity for p in self.poles)


def winding_number(f: Callable[[complex], complex], rect: Rect, samples: int = 64) -> int:
    """Zeros-minus-poles count of f inside the rectangle (argument principle).

    Boundary sampling refines adaptively until consecutive phase steps stay
    below pi/2; raises :class:`BoundaryZero` if f vanishes on the contour.
    """
    return rect_winding(f, rect, samples)


def _winding_with_jitter(f, rect: Rect, opts: PoleSearchOptions, rate_hint=None):
    """Winding with inflate-and-retry.

    Inflation only grows cells, so a zero near a shared edge may be counted
    by two sibling cells but never lost; deduplication collapses doubles.
    Returns (winding, possibly inflated rect).
    """
    r = rect
    last = None
    for attempt in range(opts.max_retries):
        try:
            return rect_winding(f, r, opts.boundary_samples, rate_hint=rate_hint), r
        except BoundaryZero as exc:
            last = exc
            scale = max(r.diameter, 1.0)
            r = r.inflated(opts.jitter * scale * (attempt + 1))
    raise BoundaryZero(
        f"contour through {rect} still hits zeros after {opts.max_retries} retries: {last}"
    )


def _safe_det(asm: Assembly):
    def d(k):
        try:
            return asm.interior_det(k)
        except ZeroK:
            # k = 0 on a contour is as fatal as a zero of D itself.
            raise BoundaryZero("contour passes through k = 0")
    return d


def refine_pole(og: OpenGraph, k0, *, max_iter: int = 50, step_tol: float = 1e-12,
                trust_radius: Optional[float] = None) -> Tuple[complex, float, int]:
    """Newton-refine a pole candidate; returns (k*, |D(k*)|, iterations).

    Raises :class:`Diverged` when the iterates leave a ball of radius
    10 x trust_radius around the start (trust_radius defaults to 1).
    """
    _require_holomorphic(og)
    asm = Assembly(og)
    return _refine(asm, complex(k0), max_iter=max_iter, step_tol=step_tol,
                   trust_radius=trust_radius if trust_radius is not None else 1.0)


def _refine(asm: Assembly, k0: complex, *, max_iter=50, step_tol=1e-12, trust_radius=1.0):
    k = complex(k0)
    limit = 10.0 * trust_radius
    if abs(asm.interior_det(k)) == 0.0:
        return k, 0.0, 0
    for it in range(1, max_iter + 1):
        try:
            dlog = asm.interior_log_derivative(k)
        except np.linalg.LinAlgError:
            # the iterate sits exactly on a zero
            return k, abs(asm.interior_det(k)), it
        if dlog == 0:
            return k, abs(asm.interior_det(k)), it
        k_next = k - 1.0 / dlog
        if abs(k_next - k0) > limit:
            raise Diverged(
                f"Newton left the trust region (|k - k0| = {abs(k_next - k0):.3e} > {limit:.3e})"
            )
        step = abs(k_next - k)
        k = k_next
        if step <= step_tol * max(1.0, abs(k)):
            return k, abs(asm.interior_det(k)), it
    return k, abs(asm.interior_det(k)), max_iter


def _require_holomorphic(og: OpenGraph):
    for v in og.graph.vertices:
        if isinstance(v.condition, LinearAB):
            raise NonHolomorphic(
                f"vertex {v.id!r} carries k-dependent linear A/B conditions; "
                "window scans require k-independent conditions"
            )


def find_poles(og: OpenGraph, window: Rect, opts: Optional[PoleSearchOptions] = None) -> PoleSet:
    """Locate all zeros of the interior determinant inside the window."""
    if opts is None:
        opts = PoleSearchOptions()
    _require_holomorphic(og)
    asm = Assembly(og)
    warnings: list = []

    if asm.table.n_bonds == 0:
        return PoleSet(poles=(), window=window, options=opts, warnings=())

    det = _safe_det(asm)
    # Bulk rotation rate of the determinant: the total directed-bond length.
    rate = float(np.sum(asm.table.bond_lengths)) + 1.0
    threads = worker_count()

    polished = []
    queue = [window]
    while queue:
        if threads > 1 and len(queue) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(
                    lambda r: _winding_with_jitter(det, r, opts, rate), queue))
        else:
            results = [_winding_with_jitter(det, r, opts, rate) for r in queue]

        next_queue = []
        for (w, cell), original in zip(results, queue):
            if w == 0:
                continue
            if w < 0:
                warnings.append(f"negative winding {w} over {original}; non-holomorphic input?")
                continue
            small = original.diameter <= opts.refine_cell
            at_floor = original.diameter <= opts.min_cell
            if not (small or at_floor):
                next_queue.extend(original.quadrants())
                continue
            try:
                k_star, residual, iterations = _refine(
                    asm, cell.center, max_iter=80,
                    trust_radius=max(original.diameter, 10 * opts.min_cell),
                )
            except Diverged:
                k_star, residual, iterations = None, np.inf, 0
            ok = (
                k_star is not None
                and residual <= opts.residual_tol
                and cell.inflated(original.diameter).contains(k_star)
            )
            if ok:
                polished.append((k_star, residual, iterations))
            elif not at_floor:
                # Newton missed or left the cell; localize harder.
                next_queue.extend(original.quadrants())
            else:
                warnings.append(
                    f"cell at {original.center} (winding {w}) could not be refined; "
                    f"residual {residual:.3e}"
                )
        queue = next_queue

    # Deduplicate within the configured radius.
    merged = []
    for k_star, residual, iterations in sorted(polished, key=lambda t: (t[0].real, t[0].imag)):
        for i, (km, rm, im_) in enumerate(merged):
            if abs(k_star - km) <= opts.dedupe_radius:
                if residual < rm:
                    merged[i] = (k_star, residual, iterations)
                break
        else:
            merged.append((k_star, residual, iterations))

    poles = []
    real_axis = []
    upper = []
    for k_star, residual, iterations in merged:
        radius = max(10 * opts.dedupe_radius, 1e-6)
        try:
            mult = circle_winding_jittered(det, k_star, radius, samples=48,
                                           retries=opts.max_retries, rate_hint=rate)
        except BoundaryZero:
            mult = 1
            warnings.append(f"multiplicity circle at {k_star} kept hitting zeros; assumed 1")
        if mult < 1:
            warnings.append(f"refined point {k_star} shows no enclosed zero; dropped")
            continue
        record = Pole(k=k_star, multiplicity=mult, residual=residual, iterations=iterations)
        if abs(k_star.imag) <= opts.real_axis_tol:
            real_axis.append(replace(record, k=complex(k_star.real, 0.0)))
            continue
        if not window.contains(k_star):
            warnings.append(f"refined pole {k_star} lies outside the window; dropped")
            continue
        if k_star.imag > 0:
            upper.append(k_star)
        poles.append(record)

    poles.sort(key=lambda p: (p.k.real, p.k.imag))
    real_axis.sort(key=lambda p: p.k.real)
    return PoleSet(
        poles=tuple(poles),
        window=window,
        options=opts,
        real_axis_zeros=tuple(real_axis),
        upper_half_flagged=tuple(upper),
        warnings=tuple(warnings),
    )
