"""Finite symmetry groups acting on open graphs, and quotient scattering.

A declared symmetry consists of a finite group (element names plus a
multiplication table, identity first) and a permutation action on the
leads. Functions transform by pullback, (g f)(x) = f(g^-1 x), so the
matrix P(g) acting on lead amplitude vectors sends basis vector e_i to
e_{g i}.

For a matrix representation rho the intertwiner equations

    P(g) Phi = Phi rho(g^-1)^T        for all g

carve out the amplitude vectors that transform like a chosen carrier
vector v; the encoding map Upsilon stacks {Phi_i v} as columns and the
quotient scattering matrix is Upsilon^+ S(k) Upsilon. The transpose
convention above is pinned by golden tests on a six-lead star with the
full permutation group of three objects.

Composition is right-first throughout: table[i, j] is the index of the
element "apply j, then i".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ConditionViolation,
    DependentColumns,
    GroupMismatch,
    LengthViolation,
    NotEquivariant,
    NotHomomorphism,
    NotIrreducible,
    NotSubgroup,
    ValidationError,
)
from .global_scattering import Assembly
from .graph_core import OpenGraph
from .linalg import null_space, orthonormalize_rows, rref


# ---------------------------------------------------------------------------
# groups
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """Finite group as element names plus a multiplication table.

    ``table[i, j]`` is the index of element_i * element_j (right-first
    composition). The identity must sit at index 0.
    """

    elements: Tuple[str, ...]
    table: np.ndarray
    generators: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        n = len(self.elements)
        table = np.asarray(self.table, dtype=int)
        if table.shape != (n, n):
            raise ValidationError(f"table shape {table.shape} does not match {n} elements")
        if len(set(self.elements)) != n:
            raise ValidationError("duplicate element names")
        if table.min() < 0 or table.max() >= n:
            raise ValidationError("table entries out of range")
        if not (np.all(table[0] == np.arange(n)) and np.all(table[:, 0] == np.arange(n))):
            raise ValidationError("element 0 is not the identity")
        for i in range(n):
            if set(table[i]) != set(range(n)) or set(table[:, i]) != set(range(n)):
                raise ValidationError(f"row/column {i} is not a permutation (not a group)")
        # Associativity spot check; full verification is O(n^3).
        rng = np.random.default_rng(0)
        m = min(n, 8)
        for _ in range(200):
            i, j, k = rng.integers(0, n, size=3)
            if table[table[i, j], k] != table[i, table[j, k]]:
                raise ValidationError("multiplication table is not associative")
        del m
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def order(self) -> int:
        return len(self.elements)

    def index(self, name: str) -> int:
        try:
            return self.elements.index(name)
        except ValueError:
            raise ValidationError(f"no element named {name!r}") from None

    def multiply(self, i: int, j: int) -> int:
        return int(self.table[i, j])

    def inverse(self, i: int) -> int:
        return int(np.nonzero(self.table[i] == 0)[0][0])

    def conjugacy_classes(self) -> Tuple[Tuple[int, ...], ...]:
        """Classes as index tuples, ordered by smallest member."""
        seen = set()
        classes = []
        for g in range(self.order):
            if g in seen:
                continue
            cls = set()
            for x in range(self.order):
                cls.add(self.multiply(self.multiply(x, g), self.inverse(x)))
            classes.append(tuple(sorted(cls)))
            seen |= cls
        return tuple(sorted(classes, key=lambda c: c[0]))

    def same_group(self, other: "FiniteGroup") -> bool:
        return self.elements == other.elements and np.array_equal(self.table, other.table)


def _cycle_name(perm: Tuple[int, ...]) -> str:
    n = len(perm)
    seen = [False] * n
    cycles = []
    for start in range(n):
        if seen[start] or perm[start] == start:
            seen[start] = True
            continue
        cyc = [start]
        seen[start] = True
        nxt = perm[start]
        while nxt != start:
            cyc.append(nxt)
            seen[nxt] = True
            nxt = perm[nxt]
        cycles.append(cyc)
    if not cycles:
        return "e"
    return "".join("(" + ",".join(str(i + 1) for i in c) + ")" for c in cycles)


def symmetric_group(n: int) -> Tuple[FiniteGroup, Mapping[str, Tuple[int, ...]]]:
    """Full permutation group on n points, in cycle notation.

    Elements are ordered by number of moved points, then by name, putting
    the identity first and, for n = 3, transpositions before 3-cycles.
    Returns the group and a name -> permutation-tuple mapping.
    """
    perms = list(itertools.permutations(range(n)))

    def moved(p):
        return sum(1 for i, x in enumerate(p) if x != i)

    perms.sort(key=lambda p: (moved(p), _cycle_name(p)))
    names = [_cycle_name(p) for p in perms]
    index = {p: i for i, p in enumerate(perms)}
    size = len(perms)
    table = np.empty((size, size), dtype=int)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            table[i, j] = index[tuple(p[q[x]] for x in range(n))]
    group = FiniteGroup(tuple(names), table)
    return group, {names[i]: perms[i] for i in range(size)}


def dihedral_group(n: int, reflection_names: Optional[Sequence[str]] = None) -> FiniteGroup:
    """Symmetries of the regular n-gon: rotations s^j, then reflections.

    Reflection j mirrors across the axis at angle pi j / n; for n = 4 the
    default names are rx, ru, ry, rv (axes at 0, 45, 90, 135 degrees).
    """
    if reflection_names is None:
        reflection_names = ["rx", "ru", "ry", "rv"] if n == 4 else [f"f{j}" for j in range(n)]
    if len(reflection_names) != n:
        raise ValidationError(f"need {n} reflection names")
    rot_names = ["e"] + [f"s{j}" if j > 1 else "s" for j in range(1, n)]
    elements = tuple(rot_names) + tuple(reflection_names)
    size = 2 * n
    table = np.empty((size, size), dtype=int)
    for i in range(size):
        for j in range(size):
            i_rot, a = i < n, i % n
            j_rot, b = j < n, j % n
            if i_rot and j_rot:
                table[i, j] = (a + b) % n
            elif i_rot and not j_rot:
                table[i, j] = n + (b + a) % n
            elif not i_rot and j_rot:
                table[i, j] = n + (a - b) % n
            else:
                table[i, j] = (a - b) % n
    return FiniteGroup(elements, table)


@dataclass(frozen=True)
class SubgroupEmbedding:
    """A subgroup packaged as its own group plus parent element indices."""

    group: FiniteGroup
    parent_indices: Tuple[int, ...]


def subgroup(group: FiniteGroup, names: Sequence[str]) -> SubgroupEmbedding:
    """Extract a subgroup by element names; raises NotSubgroup if not closed."""
    indices = [group.index(n) for n in names]
    if 0 not in indices:
        raise NotSubgroup("subgroup must contain the identity")
    indices = [0] + [i for i in indices if i != 0]
    idx_set = set(indices)
    if len(idx_set) != len(indices):
        raise NotSubgroup("duplicate subgroup elements")
    pos = {g: p for p, g in enumerate(indices)}
    h = len(indices)
    table = np.empty((h, h), dtype=int)
    for a in range(h):
        for b in range(h):
            prod = group.multiply(indices[a], indices[b])
            if prod not in idx_set:
                raise NotSubgroup(
                    f"{group.elements[indices[a]]} * {group.elements[indices[b]]} "
                    f"leaves the subset"
                )
            table[a, b] = pos[prod]
    sub = FiniteGroup(tuple(group.elements[i] for i in indices), table)
    return SubgroupEmbedding(group=sub, parent_indices=tuple(indices))


# ---------------------------------------------------------------------------
# representations and class functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatrixRep:
    """Matrix representation: one invertible matrix per group element."""

    group: FiniteGroup
    matrices: Tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(np.asarray(m, dtype=complex) for m in self.matrices)
        if len(mats) != self.group.order:
            raise ValidationError("need one matrix per group element")
        n = mats[0].shape[0]
        for m in mats:
            if m.shape != (n, n):
                raise ValidationError("representation matrices must share a square shape")
        if np.linalg.norm(mats[0] - np.eye(n)) > 1e-12:
            raise ValidationError("identity element must map to the identity matrix")
        for i in range(self.group.order):
            for j in range(self.group.order):
                prod = mats[i] @ mats[j]
                if np.linalg.norm(prod - mats[self.group.multiply(i, j)]) > 1e-12 * max(
                    1.0, float(np.abs(prod).max())
                ):
                    raise NotHomomorphism(
                        f"rho({self.group.elements[i]}) rho({self.group.elements[j]}) "
                        f"!= rho(product)"
                    )
        for m in mats:
            m.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def matrix(self, i: int) -> np.ndarray:
        return self.matrices[i]

    def character(self) -> "ClassFunction":
        vals = np.array([np.trace(m) for m in self.matrices])
        return ClassFunction(self.group, vals)

    def is_irreducible(self, tol: float = 1e-9) -> bool:
        chi = self.character().values
        norm = np.sum(np.abs(chi) ** 2) / self.group.order
        return abs(norm - 1.0) <= tol

    @staticmethod
    def from_mapping(group: FiniteGroup, mapping: Mapping[str, np.ndarray]) -> "MatrixRep":
        missing = [e for e in group.elements if e not in mapping]
        if missing:
            raise ValidationError(f"representation missing elements {missing}")
        return MatrixRep(group, tuple(np.asarray(mapping[e], dtype=complex)
                                      for e in group.elements))


def trivial_rep(group: FiniteGroup) -> MatrixRep:
    return MatrixRep(group, tuple(np.eye(1, dtype=complex) for _ in group.elements))


@dataclass(frozen=True, eq=False)
class ClassFunction:
    """Complex values indexed by group element (constant on classes)."""

    group: FiniteGroup
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.group.order,):
            raise ValidationError("need one value per group element")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __add__(self, other: "ClassFunction") -> "ClassFunction":
        if not self.group.same_group(other.group):
            raise GroupMismatch("class functions live on different groups")
        return ClassFunction(self.group, self.values + other.values)

    def inner(self, other: "ClassFunction") -> complex:
        if not self.group.same_group(other.group):
            raise GroupMismatch("class functions live on different groups")
        return complex(np.sum(self.values * other.values.conj()) / self.group.order)


def characters_equal(chi1: ClassFunction, chi2: ClassFunction, tol: float = 1e-9):
    """Max-norm equality of two class functions on the same group."""
    if not chi1.group.same_group(chi2.group):
        raise GroupMismatch("characters defined on different groups")
    dev = float(np.max(np.abs(chi1.values - chi2.values))) if chi1.group.order else 0.0
    return dev <= tol, dev


def induced_character(group: FiniteGroup, sub: Union[SubgroupEmbedding, Sequence[str]],
                      chi: Union[ClassFunction, Mapping[str, complex], Sequence[complex]],
                      ) -> ClassFunction:
    """Character of the representation induced from a subgroup.

    chi_ind(g) = (1/|H|) sum over x in G with x^-1 g x in H of chi(x^-1 g x).
    ``chi`` may be a ClassFunction on the subgroup, a name -> value mapping,
    or a sequence aligned with the subgroup's element order.
    """
    if not isinstance(sub, SubgroupEmbedding):
        sub = subgroup(group, list(sub))
    h_indices = sub.parent_indices
    pos = {g: p for p, g in enumerate(h_indices)}

    if isinstance(chi, ClassFunction):
        if not chi.group.same_group(sub.group):
            raise GroupMismatch("character is not defined on the given subgroup")
        chi_vals = chi.values
    elif isinstance(chi, Mapping):
        chi_vals = np.array([chi[name] for name in sub.group.elements], dtype=complex)
    else:
        chi_vals = np.asarray(list(chi), dtype=complex)
        if chi_vals.shape != (sub.group.order,):
            raise ValidationError("character length does not match subgroup order")

    n = group.order
    values = np.zeros(n, dtype=complex)
    for g in range(n):
        acc = 0.0 + 0.0j
        for x in range(n):
            conj = group.multiply(group.multiply(group.inverse(x), g), x)
            if conj in pos:
                acc += chi_vals[pos[conj]]
        values[g] = acc / sub.group.order
    return ClassFunction(group, values)


# ---------------------------------------------------------------------------
# actions on open graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GraphAction:
    """Permutation action of a group on the leads of an open graph.

    ``lead_perm[g, i]`` is the index of lead g . l_i. Edge images with
    orientation flags may be supplied for validation of internal symmetry;
    they are not used by the quotient computation itself.
    """

    group: FiniteGroup
    lead_perm: np.ndarray
    edge_perm: Optional[np.ndarray] = None
    edge_flip: Optional[np.ndarray] = None

    def __post_init__(self):
        lp = np.asarray(self.lead_perm, dtype=int)
        if lp.ndim != 2 or lp.shape[0] != self.group.order:
            raise ValidationError("lead_perm must have one row per group element")
        lp.setflags(write=False)
        object.__setattr__(self, "lead_perm", lp)
        if self.edge_perm is not None:
            ep = np.asarray(self.edge_perm, dtype=int)
            ef = (np.zeros_like(ep, dtype=bool) if self.edge_flip is None
                  else np.asarray(self.edge_flip, dtype=bool))
            if ep.shape[0] != self.group.order or ef.shape != ep.shape:
                raise ValidationError("edge_perm/edge_flip shapes do not match the group")
            ep.setflags(write=False)
            ef.setflags(write=False)
            object.__setattr__(self, "edge_perm", ep)
            object.__setattr__(self, "edge_flip", ef)

    @property
    def n_leads(self) -> int:
        return self.lead_perm.shape[1]

    def restricted(self, sub: SubgroupEmbedding) -> "GraphAction":
        lp = self.lead_perm[list(sub.parent_indices)]
        ep = None if self.edge_perm is None else self.edge_perm[list(sub.parent_indices)]
        ef = None if self.edge_flip is None else self.edge_flip[list(sub.parent_indices)]
        return GraphAction(sub.group, lp, ep, ef)


@dataclass(frozen=True)
class ActionReport:
    ok: bool
    vertex_maps: Tuple[Tuple[str, ...], ...] = ()


def _local_channel_keys(og: OpenGraph, vid):
    """Channel identity keys at a vertex, in local channel order (leads
    sorted by id, then edge ends by (edge id, end))."""
    keys = [("lead", l.id) for l in sorted(og.leads, key=lambda l: l.id) if l.at == vid]
    for e in sorted(og.graph.edges, key=lambda e: e.id):
        if e.from_vertex == vid:
            keys.append(("end", e.id, 0))
        if e.to_vertex == vid:
            keys.append(("end", e.id, 1))
    return keys


def _matrix_condition_payload(cond):
    if hasattr(cond, "matrix"):
        return (cond.matrix,)
    if hasattr(cond, "a"):
        return (cond.a, cond.b)
    return None


def _induced_channel_permutation(og: OpenGraph, act: GraphAction, g: int,
                                 v_from, v_to):
    """Map local channel indices at v_from to those at v_to under element g,
    or None when edges are involved but no edge map was declared."""
    keys_from = _local_channel_keys(og, v_from)
    keys_to = _local_channel_keys(og, v_to)
    if any(k[0] == "end" for k in keys_from) and act.edge_perm is None:
        return None
    lead_index = {l.id: i for i, l in enumerate(og.leads)}
    edges = sorted(og.graph.edges, key=lambda e: e.id)
    edge_pos = {e.id: i for i, e in enumerate(edges)}
    perm = []
    for key in keys_from:
        if key[0] == "lead":
            img_global = int(act.lead_perm[g, lead_index[key[1]]])
            img_key = ("lead", og.leads[img_global].id)
        else:
            _, eid, end = key
            ei = edge_pos[eid]
            img_e = edges[int(act.edge_perm[g, ei])]
            img_end = 1 - end if act.edge_flip[g, ei] else end
            img_key = ("end", img_e.id, img_end)
        if img_key not in keys_to:
            raise NotHomomorphism(
                f"element {act.group.elements[g]} does not carry the channels of "
                f"{v_from!r} onto those of {v_to!r}"
            )
        perm.append(keys_to.index(img_key))
    return perm


def validate_action(og: OpenGraph, act: GraphAction) -> ActionReport:
    """Check that the declared action is a symmetry of the open graph.

    Verifies the homomorphism property of the lead (and optional edge)
    permutations, that edge lengths are preserved, and that every vertex
    condition is carried onto an identical condition. Matrix-valued
    conditions are compared up to the channel permutation induced by the
    lead and edge maps; when the edge map is absent and the vertex touches
    edges, they are compared entrywise.
    """
    group = act.group
    n_leads = og.n_leads
    lp = act.lead_perm
    if lp.shape[1] != n_leads:
        raise NotHomomorphism(f"action permutes {lp.shape[1]} leads, graph has {n_leads}")

    for g in range(group.order):
        row = lp[g]
        if sorted(row.tolist()) != list(range(n_leads)):
            raise NotHomomorphism(f"element {group.elements[g]} does not permute the leads")
    if not np.all(lp[0] == np.arange(n_leads)):
        raise NotHomomorphism("identity element must act trivially on leads")
    for g in range(group.order):
        for h in range(group.order):
            composed = lp[g][lp[h]]
            if not np.all(composed == lp[group.multiply(g, h)]):
                raise NotHomomorphism(
                    f"lead action of {group.elements[g]} after {group.elements[h]} "
                    f"differs from their product"
                )

    edges = sorted(og.graph.edges, key=lambda e: e.id)
    vertex_maps = []
    for g in range(group.order):
        vmap = {}

        def learn(v_from, v_to):
            if v_from in vmap and vmap[v_from] != v_to:
                raise NotHomomorphism(
                    f"element {group.elements[g]} maps vertex {v_from!r} inconsistently"
                )
            vmap[v_from] = v_to

        for i, lead in enumerate(og.leads):
            learn(lead.at, og.leads[lp[g, i]].at)

        if act.edge_perm is not None:
            if act.edge_perm.shape[1] != len(edges):
                raise NotHomomorphism("edge permutation size does not match the graph")
            for ei, e in enumerate(edges):
                img = edges[act.edge_perm[g, ei]]
                if abs(e.length - img.length) > 1e-12 * max(1.0, e.length):
                    raise LengthViolation(
                        f"element {group.elements[g]} maps edge {e.id!r} (length {e.length}) "
                        f"to {img.id!r} (length {img.length})"
                    )
                if act.edge_flip[g, ei]:
                    learn(e.from_vertex, img.to_vertex)
                    learn(e.to_vertex, img.from_vertex)
                else:
                    learn(e.from_vertex, img.from_vertex)
                    learn(e.to_vertex, img.to_vertex)

        for v_from, v_to in vmap.items():
            c_from = og.graph.vertex(v_from).condition
            c_to = og.graph.vertex(v_to).condition
            if type(c_from) is not type(c_to):
                raise ConditionViolation(
                    f"element {group.elements[g]} maps vertex {v_from!r} "
                    f"({c_from.type_name}) onto {v_to!r} ({c_to.type_name})"
                )
            pay_from = _matrix_condition_payload(c_from)
            if pay_from is None:
                if c_from != c_to:
                    raise ConditionViolation(
                        f"element {group.elements[g]}: conditions at {v_from!r} and "
                        f"{v_to!r} differ"
                    )
                continue
            pay_to = _matrix_condition_payload(c_to)
            perm = _induced_channel_permutation(og, act, g, v_from, v_to)
            for m_from, m_to in zip(pay_from, pay_to):
                if m_from.shape != m_to.shape:
                    raise ConditionViolation(
                        f"element {group.elements[g]}: payload shapes at {v_from!r} "
                        f"and {v_to!r} differ"
                    )
                if perm is None:
                    same = np.array_equal(m_from, m_to)
                else:
                    same = np.allclose(m_to[np.ix_(perm, perm)], m_from, atol=1e-12)
                if not same:
                    raise ConditionViolation(
                        f"element {group.elements[g]}: condition matrix at {v_to!r} "
                        f"is not the relabeled matrix of {v_from!r}"
                    )
        vertex_maps.append(tuple(f"{a}->{b}" for a, b in sorted(vmap.items())))

    return ActionReport(ok=True, vertex_maps=tuple(vertex_maps))


def lead_permutation_matrices(act: GraphAction) -> Tuple[np.ndarray, ...]:
    """P(g) for every element, aligned with the group's element order.

    Amplitudes transform by pullback, so P(g) e_i = e_{g i}; equivalently
    (P(g) a)_l = a_{g^-1 l}.
    """
    n = act.n_leads
    mats = []
    for g in range(act.group.order):
        p = np.zeros((n, n), dtype=complex)
        for i in range(n):
            p[act.lead_perm[g, i], i] = 1.0
        p.setflags(write=False)
        mats.append(p)
    return tuple(mats)


# ---------------------------------------------------------------------------
# intertwiners, encodings, quotients
# ---------------------------------------------------------------------------

def _normalize_perm_mats(perm_mats, group: FiniteGroup):
    if isinstance(perm_mats, Mapping):
        return [np.asarray(perm_mats[e], dtype=complex) for e in group.elements]
    mats = [np.asarray(m, dtype=complex) for m in perm_mats]
    if len(mats) != group.order:
        raise ValidationError("need one permutation matrix per group element")
    return mats


def intertwiner_basis(perm_mats, rho: MatrixRep, *, rtol: float = 1e-10):
    """Basis of matrices Phi solving P(g) Phi = Phi rho(g^-1)^T for all g.

    The basis is canonicalized by reduced row echelon form of the solution
    space (so identical inputs give identical bases) and then orthonormalized
    in the Frobenius inner product, preserving order. The empty list is a
    valid result when the representation does not occur.
    """
    group = rho.group
    mats = _normalize_perm_mats(perm_mats, group)
    n_leads = mats[0].shape[0]
    n = rho.dim

    blocks = []
    eye_n = np.eye(n)
    eye_l = np.eye(n_leads)
    for g in range(1, group.order):
        m_t = rho.matrix(group.inverse(g))  # equals M(g)^T for M(g) = rho(g^-1)^T
        blocks.append(np.kron(mats[g], eye_n) - np.kron(eye_l, m_t))
    if not blocks:
        basis = np.eye(n_leads * n, dtype=complex)
    else:
        basis = null_space(np.vstack(blocks), rtol=rtol)
    if basis.shape[1] == 0:
        return []
    canon = rref(basis.T, tol=1e-9)
    ortho = orthonormalize_rows(canon)
    return [row.reshape(n_leads, n) for row in ortho]


@dataclass(frozen=True, eq=False)
class EncodingMap:
    """Columns Phi_i v spanning the subspace that transforms like v."""

    upsilon: np.ndarray
    pseudo_inverse: np.ndarray

    @property
    def rank(self) -> int:
        return self.upsilon.shape[1]


def encoding_map(phis: Sequence[np.ndarray], v) -> EncodingMap:
    """Build Upsilon = [Phi_1 v, ..., Phi_m v] and its left inverse.

    Raises :class:`DependentColumns` when the columns are linearly
    dependent (zero v, or a representation that is not irreducible).
    """
    if not phis:
        raise DependentColumns("empty intertwiner basis")
    v = np.asarray(v, dtype=complex).reshape(-1)
    cols = [phi @ v for phi in phis]
    upsilon = np.column_stack(cols)
    s = np.linalg.svd(upsilon, compute_uv=False)
    if s[0] == 0 or s[-1] < 1e-10 * s[0]:
        raise DependentColumns(
            "columns Phi_i v are dependent; check that v is nonzero and the "
            "representation is irreducible"
        )
    pinv = np.linalg.pinv(upsilon)
    if np.linalg.norm(pinv @ upsilon - np.eye(upsilon.shape[1])) > 1e-10:
        raise DependentColumns("left inverse check failed")
    return EncodingMap(upsilon=upsilon, pseudo_inverse=pinv)


def _default_carrier(rho: MatrixRep, v):
    if v is None:
        v = np.zeros(rho.dim, dtype=complex)
        v[0] = 1.0
    return np.asarray(v, dtype=complex).reshape(-1)


def quotient_scattering(og: OpenGraph, act: GraphAction, rho: MatrixRep, v=None, *,
                        k, tol: float = 1e-10) -> np.ndarray:
    """Scattering matrix of the quotient system for an irreducible rho.

    Checks that the action matrices commute with S(k) and that the encoded
    subspace is S-invariant before conjugating: Upsilon^+ S(k) Upsilon.
    ``v`` defaults to the first carrier basis vector.
    """
    validate_action(og, act)
    if not rho.is_irreducible():
        raise NotIrreducible(
            "quotient_scattering needs an irreducible representation; "
            "decompose and use quotient_scattering_sum"
        )
    s = Assembly(og).scattering(k).s
    perm_mats = lead_permutation_matrices(act)
    for g, p in enumerate(perm_mats):
        defect = float(np.linalg.norm(p @ s - s @ p))
        if defect > tol:
            raise NotEquivariant(
                f"S(k) does not commute with {act.group.elements[g]} "
                f"(defect {defect:.3e}); the graph does not have this symmetry"
            )
    phis = intertwiner_basis(perm_mats, rho)
    if not phis:
        return np.zeros((0, 0), dtype=complex)
    enc = encoding_map(phis, _default_carrier(rho, v))
    leak = float(np.linalg.norm(
        (np.eye(s.shape[0]) - enc.upsilon @ enc.pseudo_inverse) @ s @ enc.upsilon
    ))
    if leak > tol:
        raise NotEquivariant(f"S(k) leaks out of the encoded subspace (residual {leak:.3e})")
    return enc.pseudo_inverse @ s @ enc.upsilon


def quotient_scattering_sum(og: OpenGraph, act: GraphAction, reps, *, k,
                            tol: float = 1e-10) -> np.ndarray:
    """Block-diagonal quotient for rho = direct sum of n_i copies of rho_i.

    ``reps`` lists (rho_i, n_i, v_i) with v_i = None for the default carrier
    vector; block order follows the input, each block repeated n_i times.
    """
    blocks = []
    for rho_i, n_i, v_i in reps:
        block = quotient_scattering(og, act, rho_i, v_i, k=k, tol=tol)
        blocks.extend([block] * int(n_i))
    if not blocks:
        return np.zeros((0, 0), dtype=complex)
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        d = b.shape[0]
        out[i:i + d, i:i + d] = b
        i += d
    return out


def permutation_character(act: GraphAction) -> ClassFunction:
    """Character of the lead permutation representation (fixed-point counts)."""
    vals = np.array(
        [np.sum(act.lead_perm[g] == np.arange(act.n_leads)) for g in range(act.group.order)],
        dtype=complex,
    )
    return ClassFunction(act.group, vals)


def rep_multiplicity_in_leads(act: GraphAction, rho: MatrixRep) -> int:
    """Multiplicity of rho in the lead permutation representation, via the
    character inner product."""
    m = permutation_character(act).inner(rho.character())
    m_int = round(m.real)
    if abs(m - m_int) > 1e-9:
        raise ValidationError(f"character inner product {m} is not an integer")
    return int(m_int)
