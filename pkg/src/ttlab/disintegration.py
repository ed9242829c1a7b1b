"""Commuting-power combinatorics over a filtered self-map.

Declared complete splittings are conglomerated into quasi-exceptional (QE)
terms; the terms feed a relation digraph on the non-fixed irreducible strata
whose weak components partition the edges into almost invariant blocks.  Each
window E_i w^p E_j-bar between distinct linear edges over a common twist axis
imposes one integer relation on tuples of per-block iteration counts; the
solution lattice is computed by exact unimodular column reduction, and the
nonnegative members act on the graph as the powered maps f^a.  A coordinate
vector of twist and expansion exponents is reported for each admissible tuple.

Splittings are input data, validated against shape templates and never
recomputed: deciding how an image path splits takes normal-form machinery
far beyond what a desk-scale checker should trust itself with.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

from .graphs import tighten
from .trackmap import (
    SPLIT_KINDS,
    MapError,
    SplitTerm,
    TopRep,
    apply_map,
    certified_rho,
)

__all__ = [
    "QETerm",
    "QESplitting",
    "AlmostInvariantPartition",
    "TwistTriple",
    "AdmissibleLattice",
    "SemigroupReport",
    "CoordinateVector",
    "qe_splitting",
    "almost_invariant_partition",
    "quasi_twist_triples",
    "is_admissible",
    "admissible_lattice",
    "build_f_a",
    "verify_semigroup_identity",
    "coordinate_hom",
]

# strata that become vertices of the relation digraph
_VERTEX_KINDS = ("EG", "NEG-linear", "NEG-superlinear")


@dataclasses.dataclass(frozen=True)
class QETerm:
    """One quasi-exceptional window E_i w^p E_j-bar inside a splitting.

    ``power`` is signed: negative means the middle runs along the reversed
    axis, so the reverse window carries the opposite sign.  It is never 0.
    """

    index: int
    ei: int
    ej: int
    power: int
    axis: tuple[int, ...]


@dataclasses.dataclass(frozen=True)
class QESplitting:
    """Term list over a path after conglomeration.

    ``terms`` reconcatenates to ``word``; windows found by the scan carry
    kind ``"qe"`` while declared ``"exceptional"`` terms keep their kind.
    Both appear in ``qe``, one entry per window, left to right.
    """

    word: tuple[int, ...]
    terms: tuple[SplitTerm, ...]
    qe: tuple[QETerm, ...]


@dataclasses.dataclass(frozen=True)
class AlmostInvariantPartition:
    """Blocks of strata joined by the splitting-term relation.

    ``vertices`` are the non-fixed irreducible strata; ``relation`` holds the
    digraph edges (i, j) meaning a splitting term of some short path of
    stratum i is a single edge of stratum j.  ``strata`` and ``components``
    list each weak component's stratum indices and edge ids, blocks ordered
    by their least stratum.  Enveloped zero strata ride along with the block
    that crosses them; fixed strata belong to no block.
    """

    vertices: tuple[int, ...]
    relation: tuple[tuple[int, int], ...]
    strata: tuple[tuple[int, ...], ...]
    components: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.components)

    def home(self, stratum: int) -> int:
        """Block index holding the stratum; fixed strata are in none."""
        for s, block in enumerate(self.strata):
            if stratum in block:
                return s
        raise MapError(f"stratum {stratum} lies in no block of the partition")


@dataclasses.dataclass(frozen=True)
class TwistTriple:
    """A QE window tying block r to the homes of its two linear edges.

    Normalized so ei < ej; the relation a_r(di - dj) == a_s*di - a_t*dj is
    symmetric under swapping the roles, so nothing is lost.
    """

    r: int
    ei: int
    ej: int
    di: int
    dj: int
    s: int
    t: int


@dataclasses.dataclass(frozen=True)
class AdmissibleLattice:
    """Integer solutions of the homogeneous twisting system.

    ``relations`` holds one coefficient row per distinct triple; ``basis``
    spans the kernel. Membership tests evaluate the rows exactly, so they do
    not depend on the basis at all.
    """

    size: int
    relations: tuple[tuple[int, ...], ...]
    basis: tuple[tuple[int, ...], ...]

    def _check(self, a: Sequence[int]) -> tuple[int, ...]:
        t = tuple(a)
        if len(t) != self.size:
            raise ValueError(f"expected a {self.size}-tuple, got {len(t)} entries")
        if not all(isinstance(x, int) for x in t):
            raise ValueError("tuple entries must be integers")
        return t

    def in_lattice(self, a: Sequence[int]) -> bool:
        t = self._check(a)
        return all(sum(c * x for c, x in zip(row, t)) == 0 for row in self.relations)

    def in_semigroup(self, a: Sequence[int]) -> bool:
        t = self._check(a)
        return self.in_lattice(t) and all(x >= 0 for x in t)


@dataclasses.dataclass(frozen=True)
class SemigroupReport:
    a: tuple[int, ...]
    b: tuple[int, ...]
    edges: int


@dataclasses.dataclass(frozen=True)
class CoordinateVector:
    """Exponent coordinates of a powered map.

    ``omega`` lists (stratum, value) for every linear and expanding stratum:
    the twist coefficient times the block power, respectively the block power
    itself.  ``differences`` lists ((i, j), omega_i - omega_j) for pairs of
    linear strata sharing a twist axis.
    """

    omega: tuple[tuple[int, int], ...]
    differences: tuple[tuple[tuple[int, int], int], ...]


# -- splitting templates and conglomeration --------------------------------


def _linear_axes(f: TopRep) -> dict[int, tuple[int, ...]]:
    """Positive linear edge id -> canonical twist axis of its stratum."""
    out: dict[int, tuple[int, ...]] = {}
    for info in f.strata().values():
        if info.kind == "NEG-linear":
            assert info.twist_path is not None
            out[info.edges[0]] = info.twist_path
    return out


def _root_power(word: tuple[int, ...], root: tuple[int, ...]) -> int:
    """Signed p with word == root^p (negative: reversed root); 0 if neither."""
    if not word or not root or len(word) % len(root):
        return 0
    k = len(word) // len(root)
    if word == root * k:
        return k
    rev = tuple(-x for x in reversed(root))
    if word == rev * k:
        return -k
    return 0


def _power_prefix(word: tuple[int, ...], root: tuple[int, ...]) -> bool:
    reps = -(-len(word) // len(root)) if root else 0
    if not root:
        return False
    rev = tuple(-x for x in reversed(root))
    return word == (root * reps)[: len(word)] or word == (rev * reps)[: len(word)]


def _validate_term(f: TopRep, pos: int, kind: str, word: tuple[int, ...]) -> None:
    g = f.graph
    label = f"term {pos} ({kind!r}, {word})"
    if kind not in SPLIT_KINDS:
        raise MapError(f"{label}: unknown term kind")
    if not word:
        raise MapError(f"{label}: empty edge word")
    tight = tighten(g, word)
    if tight.edges != word:
        raise MapError(f"{label}: the word is not tight")
    axes = _linear_axes(f)
    if kind == "edge":
        if len(word) != 1:
            raise MapError(f"{label}: an edge term must be a single edge")
    elif kind == "eg-nielsen":
        cert = certified_rho(f)
        if cert is None:
            raise MapError(f"{label}: the map has no certified periodic path")
        rho = cert.rho.edges
        if word not in (rho, tuple(-x for x in reversed(rho))):
            raise MapError(f"{label}: not the certified periodic path or its reverse")
    elif kind == "neg-nielsen":
        e = word[0]
        if e <= 0 or e not in axes or word[-1] != -e:
            raise MapError(f"{label}: must run from a linear edge back over its reverse")
        if _root_power(word[1:-1], axes[e]) == 0:
            raise MapError(f"{label}: the middle is not a power of the twist axis")
    elif kind == "exceptional":
        e, last = word[0], word[-1]
        if e <= 0 or e not in axes or last >= 0 or -last not in axes:
            raise MapError(f"{label}: ends are not a linear edge and a reversed one")
        if -last == e:
            raise MapError(f"{label}: the two linear edges must be distinct")
        if axes[e] != axes[-last]:
            raise MapError(f"{label}: the linear edges twist over different axes")
        if _root_power(word[1:-1], axes[e]) == 0:
            raise MapError(f"{label}: the middle is not a power of the common axis")
    elif kind == "taken":
        for x in word:
            if f.strata()[g.stratum_of(x)].kind != "zero":
                raise MapError(f"{label}: edge {x} is not in a zero stratum")


def _scan_window(
    f: TopRep, terms: list[SplitTerm], start: int
) -> tuple[int, int, int, int, tuple[int, ...]] | None:
    """Maximal window opening at ``start``: (end, ei, ej, power, axis)."""
    axes = _linear_axes(f)
    kind, w0 = terms[start]
    if kind != "edge" or len(w0) != 1 or w0[0] <= 0 or w0[0] not in axes:
        return None
    ei = w0[0]
    axis = axes[ei]
    middle: tuple[int, ...] = ()
    j = start + 1
    while j < len(terms):
        kj, wj = terms[j]
        if kj == "edge" and len(wj) == 1 and wj[0] < 0 and -wj[0] in axes:
            # closing candidate; the window exists iff the middle is an
            # exact nonzero power over the same axis
            ej = -wj[0]
            p = _root_power(middle, axis)
            if p != 0 and ej != ei and axes[ej] == axis:
                return j, ei, ej, p, axis
            return None
        if not _power_prefix(middle + wj, axis):
            return None
        middle = middle + wj
        j += 1
    return None


def qe_splitting(f: TopRep, terms: Sequence[SplitTerm]) -> QESplitting:
    """Validate declared splitting terms and conglomerate QE windows.

    Each term must fit its template (single edge, certified periodic path,
    twist path over one linear edge, exceptional path over two, or a
    zero-stratum word), and the terms must reconcatenate to a tight path.
    Maximal runs of an opening linear edge, middle terms spelling a power of
    its axis, and a closing reversed linear edge over the same axis collapse
    into single ``"qe"`` terms.  The left-to-right scan closes each window at
    the first reversed linear edge, so no two windows share an edge.
    """
    tlist: list[SplitTerm] = [(k, tuple(w)) for k, w in terms]
    if not tlist:
        raise MapError("a declared splitting needs at least one term")
    for pos, (kind, word) in enumerate(tlist):
        _validate_term(f, pos, kind, word)
    full = tuple(x for _, w in tlist for x in w)
    if tighten(f.graph, full).edges != full:
        raise MapError("the declared terms do not reconcatenate to a tight path")

    out: list[SplitTerm] = []
    qe: list[QETerm] = []
    i = 0
    while i < len(tlist):
        kind, word = tlist[i]
        if kind == "exceptional":
            e, last = word[0], -word[-1]
            p = _root_power(word[1:-1], _linear_axes(f)[e])
            qe.append(QETerm(len(out), e, last, p, _linear_axes(f)[e]))
            out.append((kind, word))
            i += 1
            continue
        window = _scan_window(f, tlist, i)
        if window is not None:
            end, ei, ej, p, axis = window
            merged = tuple(x for _, w in tlist[i : end + 1] for x in w)
            qe.append(QETerm(len(out), ei, ej, p, axis))
            out.append(("qe", merged))
            i = end + 1
            continue
        out.append((kind, word))
        i += 1
    return QESplitting(full, tuple(out), tuple(qe))


# -- the relation digraph and its blocks ------------------------------------


def almost_invariant_partition(f: TopRep) -> AlmostInvariantPartition:
    """Partition the non-fixed strata by the splitting-term relation.

    Short paths of a stratum are its edges; their images' declared splittings
    are conglomerated and every plain edge term pointing into another vertex
    stratum contributes a digraph edge.  A declared taken connecting path
    would also be a short path of its enveloping expanding stratum, but the
    per-edge splitting data cannot carry a splitting for its image, so the
    build refuses rather than guessing.  Zero strata attach to the block
    whose images cross them.
    """
    g = f.graph
    strata = f.strata()
    decl = f.splittings or {}
    vertices = tuple(sorted(i for i, s in strata.items() if s.kind in _VERTEX_KINDS))
    vset = set(vertices)

    arrows: set[tuple[int, int]] = set()
    for i in vertices:
        for e in strata[i].edges:
            if e not in decl:
                raise MapError(f"no declared splitting for the image of edge {e}")
            if strata[i].kind == "EG":
                for kind, w in decl[e]:
                    if kind == "taken":
                        raise MapError(
                            f"the connecting path {w} is a short path of stratum {i} "
                            "but the splitting of its image is not declared"
                        )
            for kind, w in qe_splitting(f, decl[e]).terms:
                if kind != "edge":
                    continue
                j = g.stratum_of(w[0])
                if j == i or j not in vset:
                    continue
                if j > i:
                    raise MapError(
                        f"the splitting of stratum {i} reaches the higher stratum {j}"
                    )
                arrows.add((i, j))

    # weak components of the digraph
    adj: dict[int, set[int]] = {i: set() for i in vertices}
    for i, j in arrows:
        adj[i].add(j)
        adj[j].add(i)
    seen: set[int] = set()
    blocks: list[list[int]] = []
    for i in vertices:
        if i in seen:
            continue
        stack, comp = [i], []
        seen.add(i)
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        blocks.append(sorted(comp))
    blocks.sort(key=min)

    for z, info in strata.items():
        if info.kind != "zero":
            continue
        crossing = {
            b
            for b, comp in enumerate(blocks)
            for h in comp
            for e in strata[h].edges
            if any(g.stratum_of(x) == z for x in f.edge_image[e])
        }
        if len(crossing) != 1:
            raise MapError(
                f"zero stratum {z} is crossed by {len(crossing)} blocks; "
                "it needs exactly one enveloping block"
            )
        blocks[crossing.pop()].append(z)
        blocks.sort(key=min)

    stratum_blocks = tuple(tuple(sorted(b)) for b in blocks)
    edge_blocks = tuple(
        tuple(sorted(e for i in b for e in strata[i].edges)) for b in stratum_blocks
    )
    return AlmostInvariantPartition(
        vertices=vertices,
        relation=tuple(sorted(arrows)),
        strata=stratum_blocks,
        components=edge_blocks,
    )


def _context(f: TopRep) -> tuple[AlmostInvariantPartition, tuple[TwistTriple, ...]]:
    ctx = getattr(f, "_power_ctx", None)
    if ctx is None:
        part = almost_invariant_partition(f)
        ctx = (part, _enumerate_triples(f, part))
        f._power_ctx = ctx
    return ctx


def _enumerate_triples(
    f: TopRep, part: AlmostInvariantPartition
) -> tuple[TwistTriple, ...]:
    g = f.graph
    strata = f.strata()
    decl = f.splittings or {}
    found: set[TwistTriple] = set()
    for r, block in enumerate(part.strata):
        for h in block:
            if strata[h].kind not in _VERTEX_KINDS:
                continue
            for e in strata[h].edges:
                for q in qe_splitting(f, decl[e]).qe:
                    ei, ej = (q.ei, q.ej) if q.power > 0 else (q.ej, q.ei)
                    di = strata[g.stratum_of(ei)].twist_coefficient
                    dj = strata[g.stratum_of(ej)].twist_coefficient
                    assert di is not None and dj is not None
                    if ei > ej:
                        ei, ej, di, dj = ej, ei, dj, di
                    found.add(
                        TwistTriple(
                            r,
                            ei,
                            ej,
                            di,
                            dj,
                            part.home(g.stratum_of(ei)),
                            part.home(g.stratum_of(ej)),
                        )
                    )
    return tuple(sorted(found, key=lambda t: (t.r, t.ei, t.ej, t.di, t.dj)))


def quasi_twist_triples(f: TopRep) -> tuple[TwistTriple, ...]:
    """Every QE window in a declared splitting of a short-path image,
    reported once per (block, edge pair) with orientations collapsed."""
    return _context(f)[1]


# -- the admissible semigroup ------------------------------------------------


def is_admissible(f: TopRep, a: Sequence[int]) -> tuple[bool, TwistTriple | None]:
    """Check every twisting relation exactly; on failure name the first
    violated triple.  Nonnegativity is a separate, semigroup-level matter."""
    part, trips = _context(f)
    t = tuple(a)
    if len(t) != part.size:
        raise ValueError(f"expected a {part.size}-tuple, got {len(t)} entries")
    if not all(isinstance(x, int) for x in t):
        raise ValueError("tuple entries must be integers")
    for tr in trips:
        if t[tr.r] * (tr.di - tr.dj) != t[tr.s] * tr.di - t[tr.t] * tr.dj:
            return False, tr
    return True, None


def _integer_kernel(
    rows: Sequence[Sequence[int]], n: int
) -> tuple[tuple[int, ...], ...]:
    """Basis of the integer kernel by unimodular column reduction.

    Gcd sweeps clear each row to one pivot column; the same column operations
    applied to an identity block turn its trailing columns into the kernel.
    """
    a = [list(r) for r in rows]
    t = [[int(i == j) for j in range(n)] for i in range(n)]
    col = 0
    for row in range(len(a)):
        if col == n:
            break
        while True:
            nz = [j for j in range(col, n) if a[row][j] != 0]
            if not nz:
                break
            j0 = min(nz, key=lambda j: (abs(a[row][j]), j))
            if j0 != col:
                for mat in (a, t):
                    for r2 in mat:
                        r2[col], r2[j0] = r2[j0], r2[col]
            pivot = a[row][col]
            cleared = True
            for j in range(col + 1, n):
                q = a[row][j] // pivot
                if q:
                    for mat in (a, t):
                        for r2 in mat:
                            r2[j] -= q * r2[col]
                if a[row][j]:
                    cleared = False
            if cleared:
                col += 1
                break
    basis = []
    for j in range(col, n):
        v = [t[i][j] for i in range(n)]
        lead = next((x for x in v if x), 1)
        if lead < 0:
            v = [-x for x in v]
        basis.append(tuple(v))
    return tuple(sorted(basis, reverse=True))


def admissible_lattice(f: TopRep) -> AdmissibleLattice:
    """Solve the homogeneous twisting system over the integers.

    No triples leaves the full lattice with the standard basis.  Membership
    in the semigroup adds componentwise nonnegativity on top.
    """
    part, trips = _context(f)
    n = part.size
    rows: list[tuple[int, ...]] = []
    for tr in trips:
        row = [0] * n
        row[tr.r] += tr.di - tr.dj
        row[tr.s] -= tr.di
        row[tr.t] += tr.dj
        if any(row) and tuple(row) not in rows:
            rows.append(tuple(row))
    if not rows:
        basis = tuple(
            tuple(int(i == j) for i in range(n)) for j in range(n)
        )
        return AdmissibleLattice(n, (), basis)
    return AdmissibleLattice(n, tuple(rows), _integer_kernel(rows, n))


# -- powered maps ------------------------------------------------------------


def build_f_a(f: TopRep, a: Sequence[int]) -> TopRep:
    """The map applying f^{a_s} on each block's edges, identity elsewhere.

    Fixed strata belong to no block and keep their edges; every other edge
    takes the tightened a_s-fold image for its home block.  The tuple must
    satisfy all twisting relations and be componentwise nonnegative, and the
    base map must fix every vertex so mixed powers agree at the junctions.
    """
    part, _ = _context(f)
    t = tuple(a)
    ok, violated = is_admissible(f, t)
    if not ok:
        raise MapError(
            f"the tuple {t} is inadmissible: block {violated.r} twists edges "
            f"{violated.ei} and {violated.ej} with coefficients "
            f"{violated.di}, {violated.dj} but "
            f"{t[violated.r]}*({violated.di} - {violated.dj}) != "
            f"{t[violated.s]}*{violated.di} - {t[violated.t]}*{violated.dj}"
        )
    if any(x < 0 for x in t):
        raise MapError("powered maps need nonnegative entries")
    g = f.graph
    for v in g.vertices:
        if f.vertex_image[v] != v:
            raise MapError(
                f"vertex {v!r} is not fixed; blockwise powers would disagree there"
            )
    power = {i: t[s] for s, block in enumerate(part.strata) for i in block}
    images: dict[int, tuple[int, ...]] = {}
    for e in g.edge_ids:
        k = power.get(g.stratum_of(e))
        images[e] = (e,) if k is None else apply_map(f, (e,), k).edges
    rep = TopRep(
        g,
        f.vertex_image,
        images,
        base_vertex=f.base_vertex,
        name=f"{f.name}^{t}" if f.name else "",
    )
    problems = rep.validate()
    if problems:
        raise MapError(f"the powered map is not a valid representative: {problems[0]}")
    return rep


def verify_semigroup_identity(
    f: TopRep, a: Sequence[int], b: Sequence[int]
) -> SemigroupReport:
    """Check f^a after f^b equals f^(a+b) on every edge, exactly.

    A mismatch means the declared stratum or splitting data is internally
    inconsistent, so it raises instead of reporting a boolean.
    """
    ta, tb = tuple(a), tuple(b)
    rep_a = build_f_a(f, ta)
    rep_b = build_f_a(f, tb)
    rep_ab = build_f_a(f, tuple(x + y for x, y in zip(ta, tb)))
    for e in f.graph.edge_ids:
        lhs = apply_map(rep_a, rep_b.edge_image[e]).edges
        rhs = rep_ab.edge_image[e]
        if lhs != rhs:
            raise MapError(
                f"powering is inconsistent on edge {e}: "
                f"composite image {lhs} but direct image {rhs}"
            )
    return SemigroupReport(ta, tb, len(f.graph.edge_ids))


def coordinate_hom(f: TopRep, a: Sequence[int]) -> CoordinateVector:
    """Exponent coordinates of the powered map for an admissible tuple.

    Linear strata report their twist coefficient scaled by the home block's
    power; expanding strata report the power itself (the expansion exponent,
    normalized to 1 at the base map).  Differences are attached to pairs of
    linear strata over a shared axis.  Entries may be negative: the vector
    is linear in the tuple, so it extends from the semigroup to the lattice.
    """
    part, _ = _context(f)
    t = tuple(a)
    ok, violated = is_admissible(f, t)
    if not ok:
        raise MapError(f"the tuple {t} is inadmissible ({violated})")
    strata = f.strata()
    omega: list[tuple[int, int]] = []
    for i in sorted(strata):
        info = strata[i]
        if info.kind == "NEG-linear":
            assert info.twist_coefficient is not None
            omega.append((i, t[part.home(i)] * info.twist_coefficient))
        elif info.kind == "EG":
            omega.append((i, t[part.home(i)]))
    values = dict(omega)
    linear = [i for i in sorted(strata) if strata[i].kind == "NEG-linear"]
    differences: list[tuple[tuple[int, int], int]] = []
    for x in range(len(linear)):
        for y in range(x + 1, len(linear)):
            i, j = linear[x], linear[y]
            if strata[i].twist_path == strata[j].twist_path:
                differences.append(((i, j), values[i] - values[j]))
    return CoordinateVector(tuple(omega), tuple(differences))
