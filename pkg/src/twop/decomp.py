"""Canonical decomposition of operations at their first input.

An operation q decomposes as q'(id(1), q_0(j...), ..., q_m(j...)):
a reduced shape q' whose first input carries the identity, operations
q_l filling the remaining inputs, and strictly increasing index
sequences distributing the inputs of q among the parts.  For graph
operads the decomposition contracts, for each connected component of
the graph minus the first vertex, that component to a single vertex.
Uniqueness of the decomposition is what makes hom-sets of the twisted
arrow and enveloping categories admit canonical representatives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator, Sequence

from .core import (
    BoundExhausted,
    Colour,
    OperadHandle,
    Perm,
    Report,
    SizeBound,
)
from .graphs import (
    EXC_EDGE,
    EXC_LOOP,
    MU0,
    GraphOperad,
    OperadicGraph,
    enumerate_graphs,
    planar_leaf_order,
)
from .algebras import Algebra, ClassEngine, FlatPair


@dataclass(frozen=True)
class CanonicalDecomposition:
    """q = qprime(id(1), parts[0](indices[0]), ..., parts[m](indices[m]))."""

    qprime: Any
    parts: tuple
    indices: tuple[tuple[int, ...], ...]


def recompose(P: OperadHandle, dec: CanonicalDecomposition):
    """Evaluate a decomposition back to an operation of P."""
    ins, _ = P.profile(dec.qprime)
    t = P.graft(
        dec.qprime, [P.identity(ins[0])] + list(dec.parts)
    )
    seq = [1]
    for block in dec.indices:
        seq.extend(block)
    n = len(seq)
    images = [0] * n
    for pos, g in enumerate(seq, start=1):
        images[g - 1] = pos
    return P.act(t, Perm(tuple(images)))


# ---------------------------------------------------------------------------
# The contraction algorithm for graph operads
# ---------------------------------------------------------------------------

# operads whose inner edges pair a 0-flag with a non-0-flag; their
# reduced shapes put the outward 0-flag first on every contracted vertex
ROOTED_CONVENTION = {"pOp", "sOp", "uAs"}

# operads whose parts keep the planar traversal order on their inputs
PLANAR_CONVENTION = {"pOp"}


def decompose(P: GraphOperad, q: OperadicGraph) -> CanonicalDecomposition:
    """Contract the connected components of q minus its first vertex."""
    if q.special is not None or q.n_vertices == 0:
        raise ValueError("decomposition requires non-zero arity")
    k = q.n_vertices
    rooted = P.name in ROOTED_CONVENTION
    has_mu0 = P.membership(MU0)

    # connected components of the non-source vertices
    parent = list(range(k))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for (v1, i1), (v2, i2) in q.pairing:
        if v1 != 0 and v2 != 0:
            a, b = find(v1), find(v2)
            if a != b:
                parent[a] = b

    comp_of = {v: find(v) for v in range(1, k)}

    leaf_pos = {flag: pos for pos, flag in enumerate(q.leaves)}

    # walk the source flags in order, recording one event per attachment
    # part events: ("comp", root), ("mu0-loop", i, i2), ("mu0-leaf", i, pos)
    events: list[tuple] = []
    seen_comp: dict[int, int] = {}
    comp_danglings: dict[int, list[tuple[int, tuple[int, int]]]] = {}
    seen_loop: set[int] = set()
    d0 = q.degrees[0]
    for i in range(d0):
        f = (0, i)
        p = q.partner(f)
        if p is None:
            if has_mu0:
                events.append(("mu0-leaf", i, leaf_pos[f]))
            # otherwise the leaf stays on the source vertex
        elif p[0] == 0:
            if i in seen_loop:
                continue
            seen_loop.add(p[1])
            if has_mu0:
                events.append(("mu0-loop", i, p[1]))
            # otherwise the loop stays on the source vertex
        else:
            root = comp_of[p[0]]
            comp_danglings.setdefault(root, []).append((i, p))
            if root not in seen_comp:
                seen_comp[root] = len(events)
                events.append(("comp", root))

    if len(seen_comp) != len({comp_of[v] for v in range(1, k)}):
        raise ValueError("graph is not connected through the first vertex")

    # assemble the contracted shape and the parts
    new_degrees: list[int] = [d0]
    new_genus: list[int] | None = [q.genus[0]] if q.genus is not None else None
    new_pairs: list[tuple[tuple[int, int], tuple[int, int]]] = []
    new_leaves: dict[int, tuple[int, int]] = {}
    parts: list = []
    indices: list[tuple[int, ...]] = []

    if not has_mu0:
        # leaves and loops of the source vertex survive contraction
        for i in range(d0):
            f = (0, i)
            p = q.partner(f)
            if p is None:
                new_leaves[leaf_pos[f]] = f
            elif p[0] == 0 and i < p[1]:
                new_pairs.append((f, p))

    for part_idx, ev in enumerate(events):
        u = part_idx + 1  # vertex index of this part in the shape
        if ev[0] == "mu0-leaf":
            _, i, pos = ev
            if rooted and pos == 0:
                flags = [("leaf", pos), ("edge", i)]
            else:
                flags = [("edge", i), ("leaf", pos)]
            part_graph: Any = MU0
            part_indices: tuple[int, ...] = ()
        elif ev[0] == "mu0-loop":
            _, i, i2 = ev
            flags = [("edge", i), ("edge", i2)]
            part_graph = MU0
            part_indices = ()
        else:
            root = ev[1]
            verts = sorted(v for v in range(1, k) if comp_of[v] == root)
            vmap = {v: idx for idx, v in enumerate(verts)}
            danglings = comp_danglings[root]
            comp_leaves = sorted(
                (leaf_pos[f], f)
                for f in (
                    (v, j) for v in verts for j in range(q.degrees[v])
                )
                if f in leaf_pos
            )
            has_leaf0 = bool(comp_leaves) and comp_leaves[0][0] == 0
            if rooted and has_leaf0:
                flags = (
                    [("leaf", comp_leaves[0][0])]
                    + [("edge", i) for i, _ in danglings]
                    + [("leaf", pos) for pos, _ in comp_leaves[1:]]
                )
            else:
                flags = [("edge", i) for i, _ in danglings] + [
                    ("leaf", pos) for pos, _ in comp_leaves
                ]
            # the part operation: the component with the dangling flags
            # and its own leaves as leaves, ordered like the shape flags
            dang_by_i = {i: f for i, f in danglings}
            leaf_by_pos = {pos: f for pos, f in comp_leaves}
            part_leaves = []
            for kind, x in flags:
                if kind == "edge":
                    v, j = dang_by_i[x]
                    part_leaves.append((vmap[v], j))
                else:
                    v, j = leaf_by_pos[x]
                    part_leaves.append((vmap[v], j))
            part_pairs = sorted(
                tuple(
                    sorted(
                        ((vmap[a[0]], a[1]), (vmap[b[0]], b[1]))
                    )
                )
                for a, b in q.pairing
                if a[0] in vmap and b[0] in vmap
            )
            part_graph = OperadicGraph.make(
                tuple(q.degrees[v] for v in verts),
                [(tuple(a), tuple(b)) for a, b in part_pairs],
                part_leaves,
                None
                if q.genus is None
                else tuple(q.genus[v] for v in verts),
            )
            if P.name in PLANAR_CONVENTION and len(part_leaves) > 1:
                traversal = planar_leaf_order(part_graph)
                order = [part_leaves[0]] + traversal
                if order != part_leaves:
                    old_pos = {f: t for t, f in enumerate(part_leaves)}
                    flags = [flags[old_pos[f]] for f in order]
                    part_graph = OperadicGraph.make(
                        part_graph.degrees,
                        part_graph.pairing,
                        order,
                        part_graph.genus,
                    )
            part_indices = tuple(v + 1 for v in verts)
        new_degrees.append(len(flags))
        if new_genus is not None:
            if ev[0] == "comp":
                new_genus.append(P.profile(part_graph)[1][0])
            else:
                new_genus.append(0)
        for fi, (kind, x) in enumerate(flags):
            if kind == "edge":
                new_pairs.append(((0, x), (u, fi)))
            else:
                new_leaves[x] = (u, fi)
        parts.append(part_graph)
        indices.append(part_indices)

    qprime = OperadicGraph.make(
        tuple(new_degrees),
        [tuple(sorted(p)) for p in new_pairs],
        [new_leaves[pos] for pos in sorted(new_leaves)],
        None if new_genus is None else tuple(new_genus),
    )
    if sorted(new_leaves) != list(range(len(new_leaves))):
        raise ValueError("leaf positions lost during contraction")
    return CanonicalDecomposition(qprime, tuple(parts), tuple(indices))


def is_reduced(P: GraphOperad, g: OperadicGraph) -> bool:
    """A shape is reduced when contraction leaves it unchanged."""
    if g.special is not None or g.n_vertices == 0:
        return False
    if not _reduced_prefilter(P, g):
        return False
    try:
        dec = decompose(P, g)
    except ValueError:
        return False
    return dec.qprime == g


def _reduced_prefilter(P: GraphOperad, g: OperadicGraph) -> bool:
    """Cheap necessary conditions for being a contraction fixed point:
    non-source vertices touch only the source, and (outside the planar
    case) their flags follow the conventional ordering."""
    has_mu0 = P.membership(MU0)
    leaf_pos = {flag: pos for pos, flag in enumerate(g.leaves)}
    rooted = P.name in ROOTED_CONVENTION
    planar = P.name in PLANAR_CONVENTION
    per_vertex: dict[int, list] = {u: [] for u in range(1, g.n_vertices)}
    first_flag: dict[int, int] = {}
    for (v1, i1), (v2, i2) in g.pairing:
        if v1 != 0 and v2 != 0:
            return False  # edge away from the source
        if v1 == 0 and v2 == 0:
            if has_mu0:
                return False  # loops at the source must be expanded
            continue
        u, j = (v2, i2) if v1 == 0 else (v1, i1)
        src_i = i1 if v1 == 0 else i2
        per_vertex[u].append((j, ("edge", src_i)))
        first_flag[u] = min(first_flag.get(u, src_i), src_i)
    for u in range(1, g.n_vertices):
        for j in range(g.degrees[u]):
            if (u, j) in leaf_pos:
                per_vertex[u].append((j, ("leaf", leaf_pos[(u, j)])))
    for i in range(g.degrees[0]):
        if (0, i) in leaf_pos and has_mu0:
            return False  # source leaves must be expanded
    order = sorted(first_flag.get(u, -1) for u in range(1, g.n_vertices))
    if order != [first_flag.get(u, -1) for u in range(1, g.n_vertices)]:
        return False  # vertices not ordered by first attachment
    if planar:
        return True
    for u, items in per_vertex.items():
        items.sort()
        kinds = [k for _, k in items]
        edges = sorted(k for k in kinds if k[0] == "edge")
        leaves = sorted(k for k in kinds if k[0] == "leaf")
        conventional = edges + leaves
        if rooted and ("leaf", 0) in kinds:
            conventional = [("leaf", 0)] + edges + [
                k for k in leaves if k != ("leaf", 0)
            ]
        if kinds != conventional:
            return False
    return True


def reduced_shapes(
    P: GraphOperad,
    bound: SizeBound,
    max_degree: int = 3,
    max_leaves: int = 3,
) -> list[OperadicGraph]:
    return [
        g
        for g in enumerate_graphs(
            bound,
            with_genus=P.with_genus,
            max_degree=max_degree,
            max_leaves=max_leaves,
            predicate=P.membership,
        )
        if is_reduced(P, g)
    ]


# ---------------------------------------------------------------------------
# Existence and uniqueness by exhaustive search
# ---------------------------------------------------------------------------


def _forced_structure(q: OperadicGraph):
    """Components of q minus its first vertex, with their dangling
    flags, plus the leaf and loop flags of the first vertex.

    In any decomposition the parts must be connected and may only touch
    the first vertex, so the parts are exactly these components (with
    vertexless-edge parts for source leaves and loops); only orderings
    remain free.
    """
    k = q.n_vertices
    parent = list(range(k))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for (v1, i1), (v2, i2) in q.pairing:
        if v1 != 0 and v2 != 0:
            a, b = find(v1), find(v2)
            if a != b:
                parent[a] = b
    comp_of = {v: find(v) for v in range(1, k)}
    leaf_pos = {flag: pos for pos, flag in enumerate(q.leaves)}
    comps: dict[int, dict] = {}
    src_leaves: list[tuple[int, int]] = []  # (flag index, global position)
    src_loops: list[tuple[int, int]] = []
    seen_loop: set[int] = set()
    for i in range(q.degrees[0]):
        f = (0, i)
        p = q.partner(f)
        if p is None:
            src_leaves.append((i, leaf_pos[f]))
        elif p[0] == 0:
            if i in seen_loop:
                continue
            seen_loop.add(p[1])
            src_loops.append((i, p[1]))
        else:
            root = comp_of[p[0]]
            comps.setdefault(root, {"danglings": []})["danglings"].append(
                (i, p)
            )
    for root in comps:
        verts = sorted(v for v in range(1, k) if comp_of[v] == root)
        comps[root]["verts"] = verts
        comps[root]["leaves"] = sorted(
            (leaf_pos[(v, j)], (v, j))
            for v in verts
            for j in range(q.degrees[v])
            if (v, j) in leaf_pos
        )
    return comps, src_leaves, src_loops, leaf_pos


def count_decompositions_graph(
    P: GraphOperad,
    q: OperadicGraph,
    max_variants: int = 200000,
) -> tuple[int, list[CanonicalDecomposition]]:
    """Count decompositions of q with a reduced shape by enumerating
    every ordering and expansion variant of the forced part structure."""
    comps, src_leaves, src_loops, leaf_pos = _forced_structure(q)
    has_mu0 = P.membership(MU0)

    # each part event with its variant generator: (flags, part, indices)
    def comp_variants(info) -> Iterator[tuple]:
        verts = info["verts"]
        vmap = {v: idx for idx, v in enumerate(verts)}
        boundary = [("edge", i, p) for i, p in info["danglings"]] + [
            ("leaf", pos, f) for pos, f in info["leaves"]
        ]
        part_pairs = [
            tuple(sorted(((vmap[a[0]], a[1]), (vmap[b[0]], b[1]))))
            for a, b in q.pairing
            if a[0] in vmap and b[0] in vmap
        ]
        degrees = tuple(q.degrees[v] for v in verts)
        genus = None if q.genus is None else tuple(q.genus[v] for v in verts)
        if P.name in PLANAR_CONVENTION:
            orders: Iterable = itertools.permutations(range(len(boundary)))
        else:
            # only the conventional flag order can be a contraction
            # fixed point (see _reduced_prefilter), so enumerate just it
            edges = sorted(
                t for t, b in enumerate(boundary) if b[0] == "edge"
            )
            leaves = sorted(
                (boundary[t][1], t)
                for t, b in enumerate(boundary)
                if b[0] == "leaf"
            )
            rooted = P.name in ROOTED_CONVENTION
            if rooted and leaves and leaves[0][0] == 0:
                conv = [leaves[0][1]] + edges + [t for _, t in leaves[1:]]
            else:
                conv = edges + [t for _, t in leaves]
            orders = [tuple(conv)]
        for order in orders:
            flags = []
            part_leaves = []
            for t in order:
                kind, x, f = boundary[t]
                flags.append((kind, x))
                part_leaves.append((vmap[f[0]], f[1]))
            try:
                part = OperadicGraph.make(
                    degrees, part_pairs, part_leaves, genus, check=False
                )
            except ValueError:
                continue
            if not P.membership(part):
                continue
            yield flags, part, tuple(v + 1 for v in verts)

    def mu0_leaf_variants(i: int, pos: int) -> Iterator[tuple]:
        if has_mu0:
            yield [("edge", i), ("leaf", pos)], MU0, ()
            yield [("leaf", pos), ("edge", i)], MU0, ()
        yield None  # keep as a source leaf

    def mu0_loop_variants(i: int, i2: int) -> Iterator[tuple]:
        if has_mu0:
            yield [("edge", i), ("edge", i2)], MU0, ()
            yield [("edge", i2), ("edge", i)], MU0, ()
        yield None  # keep as a source loop

    events = (
        [("comp", info) for info in comps.values()]
        + [("leaf", i, pos) for i, pos in src_leaves]
        + [("loop", i, i2) for i, i2 in src_loops]
    )

    def event_variants(ev):
        if ev[0] == "comp":
            yield from comp_variants(ev[1])
        elif ev[0] == "leaf":
            yield from mu0_leaf_variants(ev[1], ev[2])
        else:
            yield from mu0_loop_variants(ev[1], ev[2])

    found: list[CanonicalDecomposition] = []
    count = 0
    budget = max_variants
    per_event = [list(event_variants(ev)) for ev in events]
    for choice in itertools.product(*per_event):
        parts_present = [c for c in choice if c is not None]
        kept = [
            ev
            for ev, c in zip(events, choice)
            if c is None
        ]
        # upper order is forced: sorted by first source-flag attachment
        # (any other order fails the contraction fixed-point test)
        parts_present.sort(
            key=lambda c: min(x for kind, x in c[0] if kind == "edge")
        )
        budget -= 1
        if budget < 0:
            raise BoundExhausted("variant enumeration budget exhausted")
        shape = _assemble_shape(P, q, parts_present, kept)
        if shape is None:
            continue
        qprime, parts, indices = shape
        if not P.membership(qprime):
            continue
        if not is_reduced(P, qprime):
            continue
        dec = CanonicalDecomposition(qprime, parts, indices)
        try:
            if recompose(P, dec) != q:
                continue
        except (ValueError, KeyError):
            continue
        count += 1
        if len(found) < 2:
            found.append(dec)
    return count, found


def _assemble_shape(P: GraphOperad, q: OperadicGraph, chosen, kept):
    """Build a candidate shape from ordered part variants plus the
    source leaves/loops that remain unexpanded."""
    d0 = q.degrees[0]
    new_degrees = [d0]
    new_genus = [q.genus[0]] if q.genus is not None else None
    new_pairs = []
    new_leaves: dict[int, tuple[int, int]] = {}
    parts = []
    indices = []
    for ev in kept:
        if ev[0] == "leaf":
            new_leaves[ev[2]] = (0, ev[1])
        else:
            new_pairs.append(((0, ev[1]), (0, ev[2])))
    for part_idx, (flags, part, idx) in enumerate(chosen):
        u = part_idx + 1
        new_degrees.append(len(flags))
        if new_genus is not None:
            if part is MU0:
                new_genus.append(0)
            else:
                new_genus.append(P.profile(part)[1][0])
        for fi, (kind, x) in enumerate(flags):
            if kind == "edge":
                new_pairs.append(((0, x), (u, fi)))
            else:
                new_leaves[x] = (u, fi)
        parts.append(part)
        indices.append(idx)
    if sorted(new_leaves) != list(range(len(new_leaves))):
        return None
    try:
        qprime = OperadicGraph.make(
            tuple(new_degrees),
            [tuple(sorted(p)) for p in new_pairs],
            [new_leaves[pos] for pos in sorted(new_leaves)],
            None if new_genus is None else tuple(new_genus),
            check=False,
        )
    except ValueError:
        return None
    return qprime, tuple(parts), tuple(indices)


def _all_decompositions(
    P: OperadHandle,
    q,
    qprime_pool: Sequence,
    part_pool: Sequence,
    limit: int = 4,
) -> Iterator[CanonicalDecomposition]:
    """All decompositions of q with shape from qprime_pool and parts
    from part_pool, found by recomposition (stops after `limit`)."""
    ins_q, out_q = P.profile(q)
    n = len(ins_q)
    by_colour: dict[Colour, list] = {}
    for r in part_pool:
        by_colour.setdefault(P.output(r), []).append(r)
    found = 0
    for qp in qprime_pool:
        ins_p, out_p = P.profile(qp)
        if len(ins_p) < 1 or out_p != out_q or ins_p[0] != ins_q[0]:
            continue
        slots = ins_p[1:]

        def parts_iter(idx: int, remaining: int, acc: list) -> Iterator[tuple]:
            if idx == len(slots):
                if remaining == 0:
                    yield tuple(acc)
                return
            for r in by_colour.get(slots[idx], ()):
                a = len(P.inputs(r))
                if a > remaining:
                    continue
                acc.append(r)
                yield from parts_iter(idx + 1, remaining - a, acc)
                acc.pop()

        for parts in parts_iter(0, n - 1, []):
            sizes = [len(P.inputs(r)) for r in parts]
            for blocks in _increasing_blocks(n, sizes):
                dec = CanonicalDecomposition(qp, parts, blocks)
                try:
                    if recompose(P, dec) == q:
                        yield dec
                        found += 1
                        if found >= limit:
                            return
                except (ValueError, KeyError, BoundExhausted):
                    continue


def _increasing_blocks(
    n: int, sizes: Sequence[int]
) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Partitions of {2..n} into blocks of the given sizes, each block
    strictly increasing."""

    def go(idx: int, remaining: tuple[int, ...]) -> Iterator[tuple]:
        if idx == len(sizes):
            if not remaining:
                yield ()
            return
        for chosen in itertools.combinations(remaining, sizes[idx]):
            rest = tuple(x for x in remaining if x not in chosen)
            for tail in go(idx + 1, rest):
                yield (tuple(chosen),) + tail

    yield from go(0, tuple(range(2, n + 1)))


def check_decomposable(
    P: OperadHandle,
    qprime_pool: Sequence | None,
    bound: SizeBound,
    ops: Sequence | None = None,
    max_ops: int | None = None,
) -> Report:
    """Existence and uniqueness of the decomposition for every
    enumerated operation of non-zero arity.

    For graph operads pass ``qprime_pool=None`` to search over the
    reduced shapes; an explicit pool checks decomposability via that
    set (and can demonstrate failure, e.g. a pool that is too small).
    """
    report = Report(f"canonical decomposability: {P.name}")
    part_pool = list(ops) if ops is not None else P.ops(bound)
    targets = [q for q in part_pool if len(P.inputs(q)) >= 1]
    if max_ops is not None:
        targets = targets[:max_ops]
    if qprime_pool is None:
        # graph operads: the parts of any decomposition are forced to be
        # the connected components away from the first vertex, so it
        # suffices to enumerate ordering and expansion variants
        if not isinstance(P, GraphOperad):
            raise ValueError("automatic candidate search needs a graph operad")
        for q in targets:
            try:
                count, found = count_decompositions_graph(P, q)
            except BoundExhausted as exc:
                report.add("search-budget-exhausted", q=q, error=str(exc))
                continue
            if count == 0:
                report.add("no-decomposition", q=q)
            elif count > 1:
                report.add("decomposition-not-unique", q=q, found=found)
            report.checked += 1
    else:
        for q in targets:
            decs = list(
                _all_decompositions(P, q, qprime_pool, part_pool, limit=3)
            )
            if len(decs) == 0:
                report.add("no-decomposition", q=q)
            elif len(decs) > 1:
                report.add("decomposition-not-unique", q=q, found=decs[:2])
            report.checked += 1
    report.note(f"operations checked: {len(targets)}")
    return report


def check_decompose_algorithm(
    P: GraphOperad, bound: SizeBound, ops: Sequence | None = None
) -> Report:
    """The contraction algorithm recomposes to the input and lands on a
    reduced shape, for every enumerated operation."""
    report = Report(f"contraction algorithm: {P.name}")
    pool = list(ops) if ops is not None else P.ops(bound)
    for q in pool:
        if q.special is not None or q.n_vertices == 0:
            continue
        try:
            dec = decompose(P, q)
        except ValueError as exc:
            report.add("decompose-error", q=q, error=str(exc))
            continue
        try:
            back = recompose(P, dec)
        except (ValueError, KeyError) as exc:
            report.add("recompose-error", q=q, error=str(exc))
            continue
        if back != q:
            report.add("recompose-mismatch", q=q, dec=dec)
        if not is_reduced(P, dec.qprime):
            report.add("shape-not-reduced", q=q, shape=dec.qprime)
        if not P.membership(dec.qprime):
            report.add("shape-outside-operad", q=q, shape=dec.qprime)
        report.checked += 1
    return report


# ---------------------------------------------------------------------------
# Canonical representatives of twisted/enveloping morphisms
# ---------------------------------------------------------------------------


def rotate_to_first(P: OperadHandle, q, xs: tuple, i: int) -> FlatPair:
    """Move slot i to the front, keeping the other slots in order."""
    n = len(xs)
    rho = Perm(tuple([i] + [j for j in range(1, n + 1) if j != i]))
    return (P.act(q, rho), rho.permute_tuple(xs))


def canonical_rep_pair(P: GraphOperad, A: Algebra, pair: FlatPair) -> FlatPair:
    """The canonical representative of an arrow or enveloping class:
    rotate the marked slot to the front, contract, and evaluate the
    parts."""
    if not isinstance(P, GraphOperad):
        raise ValueError("canonical representatives need a graph operad")
    q, xs = pair
    special = [idx for idx, s in enumerate(xs) if s[0] in ("m", "h")]
    if len(special) != 1:
        raise ValueError("expected exactly one marked slot")
    q1, ys = rotate_to_first(P, q, tuple(xs), special[0] + 1)
    dec = decompose(P, q1)
    slots: list = [ys[0] if ys[0][0] == "h" else ("m", 1, ys[0][2])]
    for part, idx in zip(dec.parts, dec.indices):
        args = tuple(ys[j - 1][1] for j in idx)
        slots.append(("e", A.eval(part, args)))
    return (dec.qprime, tuple(slots))


def canonical_rep(engine: ClassEngine, pair: FlatPair) -> FlatPair:
    return canonical_rep_pair(engine.P, engine.A, pair)


def check_canonical_reps(engine: ClassEngine) -> Report:
    """Every member of a class has the same canonical representative,
    the representative lies in the class, and it is a fixed point."""
    report = Report(
        f"canonical representatives: {engine.P.name}/{engine.A.name}"
    )
    for rep in engine.classes():
        marked = [s for s in rep[1] if s[0] in ("m", "h")]
        if len(marked) != 1:
            continue
        canon = set()
        for member in engine.class_members(rep):
            try:
                canon.add(canonical_rep(engine, member))
            except (ValueError, BoundExhausted) as exc:
                report.add("canonical-rep-error", member=member, error=str(exc))
        if len(canon) != 1:
            report.add("canonical-rep-not-constant", rep=rep, reps=sorted(canon, key=repr))
            report.checked += 1
            continue
        c = canon.pop()
        try:
            if engine.to_class(*c) != rep:
                report.add("canonical-rep-outside-class", rep=rep, canon=c)
        except BoundExhausted:
            report.note(f"canonical form outside universe for {rep!r}")
        try:
            if canonical_rep(engine, c) != c:
                report.add("canonical-rep-not-idempotent", canon=c)
        except (ValueError, BoundExhausted):
            pass
        report.checked += 1
    return report


# ---------------------------------------------------------------------------
# Cospan hom-categories and initial objects
# ---------------------------------------------------------------------------


def cospan_category(cat, c: Colour, c2: Colour, max_vertices: int | None = None):
    """The category of cospans between the identity objects of two
    colours: one leg a trivially-ordered lower morphism, the other the
    output-selecting upper morphism, with trivial-first-marking upper
    morphisms between them.

    Objects are the operations with first input ``c`` and output ``c2``;
    each determines its cospan uniquely.  Returns a materialized
    category truncation whose morphisms are triples
    ``(source op, target op, connecting upper morphism)``.
    """
    from .twisted import CatTrunc, TwMorphism

    P = cat.P
    trunc = CatTrunc(f"cospans over {P.name}: {c} -> {c2}")

    def size_ok(q) -> bool:
        if max_vertices is None:
            return True
        if isinstance(q, OperadicGraph):
            return q.special is not None or q.n_vertices <= max_vertices
        return P.arity(q) <= max_vertices

    all_ops = P.ops(cat.bound)
    objs = [
        q
        for q in all_ops
        if P.arity(q) >= 1
        and P.inputs(q)[0] == c
        and P.output(q) == c2
        and size_ok(q)
    ]
    obj_set = set(objs)
    for q in objs:
        trunc.add_object(q)
    by_colour: dict = {}
    for w in all_ops:
        by_colour.setdefault(P.output(w), []).append(w)

    def interleavings(rest: list[int], sizes: list[int]) -> Iterator[list]:
        if not sizes:
            yield []
            return
        first, tail = sizes[0], sizes[1:]
        for combo in itertools.combinations(rest, first):
            left = [x for x in rest if x not in combo]
            for more in interleavings(left, tail):
                yield [tuple(combo)] + more

    def outgoing(q) -> Iterator[TwMorphism]:
        """All cospan-respecting upper morphisms out of q: root trivial,
        first marking trivial above target input 1."""
        ins, out = P.profile(q)
        n = len(ins)
        pools = [by_colour.get(cc, []) for cc in ins[1:]]
        first = P.identity(ins[0])
        for ws in itertools.product(*pools):
            uppers = (first,) + ws
            try:
                base = P.graft(q, uppers)
            except ValueError:
                continue
            if not size_ok(base):
                continue
            arities = [P.arity(w) for w in ws]
            rest = list(range(2, 2 + sum(arities)))
            for blocks in interleavings(rest, arities):
                yield TwMorphism(
                    q, P.identity(out), uppers, ((), (1,)) + tuple(blocks)
                )

    for q in objs:
        for h in outgoing(q):
            r = cat.target(h)
            if r in obj_set:
                trunc.add_morphism((q, r, h), q, r)
        trunc.identities[q] = (q, q, cat.identity(q))
    by_source: dict = {}
    for m in trunc.morphisms():
        by_source.setdefault(m[0], []).append(m)
    for (q, r, h) in trunc.morphisms():
        for (r2, t, h2) in by_source.get(r, []):
            comp = cat.compose(h2, h)
            if (q, t, comp) in trunc.source:
                trunc.set_compose((r2, t, h2), (q, r, h), (q, t, comp))
    return trunc


def _connected_components(trunc) -> list[list]:
    index = {x: i for i, x in enumerate(trunc.objects)}
    parent = list(range(len(trunc.objects)))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for f in trunc.morphisms():
        a, b = find(index[trunc.source[f]]), find(index[trunc.target[f]])
        if a != b:
            parent[a] = b
    comps: dict[int, list] = {}
    for x, i in index.items():
        comps.setdefault(find(i), []).append(x)
    return list(comps.values())


def cospan_initial_check(
    Q: OperadHandle,
    A: Algebra,
    s: Any,
    s2: Any,
    bound: SizeBound,
    max_vertices: int | None = None,
) -> Report:
    """Every connected component of the cospan hom-category between the
    chosen carrier elements has an initial object.

    The check materializes the category over the operad (valid whenever
    the carrier is a one-element set per colour, in particular for the
    terminal algebra) and searches every component for an object with
    exactly one morphism to each component member.
    """
    from .twisted import TwistedArrowCategory

    report = Report(f"cospan initial objects: {Q.name}/{A.name}")
    c = next(col for col, els in A.carrier.items() if s in els)
    c2 = next(col for col, els in A.carrier.items() if s2 in els)
    for col, els in A.carrier.items():
        if len(els) != 1:
            report.note(f"carrier at colour {col!r} is not a singleton")
    cat = TwistedArrowCategory(Q, bound)
    trunc = cospan_category(cat, c, c2, max_vertices=max_vertices)
    for comp in _connected_components(trunc):
        initial = []
        for x in comp:
            if all(len(trunc.hom(x, y)) == 1 for y in comp):
                initial.append(x)
        if not initial:
            report.add(
                "component-without-initial-object",
                component=sorted(comp, key=repr)[:4],
            )
        report.checked += 1
    report.note(f"components: {report.checked}")
    return report
