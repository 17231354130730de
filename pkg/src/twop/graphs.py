"""Graph-substitution operads.

An operadic graph is a finite connected graph with totally ordered
vertices, a total order on the half-edges (flags) of each vertex, and a
total order on its leaves.  Vertices are the inputs of the operation
(the input colour of a vertex of degree d is d-1), the output colour is
(number of leaves - 1), and composition is substitution of a graph into
a vertex.  Two exceptional graphs have no vertices: the exceptional edge
(arity 0, output colour 1) and the nodeless loop (arity 0, output colour
-1).

All orders are part of the structure, so equality of operations is
structural equality of the encodings.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from .core import (
    Colour,
    OperadHandle,
    Perm,
    Report,
    SizeBound,
)

Flag = tuple[int, int]  # (vertex index, flag index), both 0-based

EXC_EDGE = "exceptional_edge"  # arity 0, output colour 1
EXC_LOOP = "nodeless_loop"  # arity 0, output colour -1


@dataclass(frozen=True)
class OperadicGraph:
    """Encoding of an operadic graph.

    ``degrees[v]`` is the number of flags of vertex ``v``; ``pairing``
    is the sorted tuple of sorted flag pairs forming the inner edges;
    ``leaves`` lists the leaf flags in their total order; ``genus``
    optionally decorates each vertex with a genus.  ``special`` marks
    the two vertex-less graphs.
    """

    degrees: tuple[int, ...]
    pairing: tuple[tuple[Flag, Flag], ...]
    leaves: tuple[Flag, ...]
    genus: tuple[int, ...] | None = None
    special: str | None = None

    # -- construction -------------------------------------------------------

    @staticmethod
    def make(
        degrees: Sequence[int],
        pairing: Iterable[tuple[Flag, Flag]],
        leaves: Sequence[Flag],
        genus: Sequence[int] | None = None,
        check: bool = True,
    ) -> "OperadicGraph":
        norm_pairing = tuple(
            sorted(tuple(sorted((tuple(a), tuple(b)))) for a, b in pairing)
        )
        g = OperadicGraph(
            degrees=tuple(degrees),
            pairing=norm_pairing,  # type: ignore[arg-type]
            leaves=tuple(tuple(l) for l in leaves),  # type: ignore[arg-type]
            genus=None if genus is None else tuple(genus),
        )
        if check:
            g.validate()
        return g

    @staticmethod
    def exceptional_edge(genus_marked: bool = False) -> "OperadicGraph":
        return OperadicGraph((), (), (), None, EXC_EDGE)

    @staticmethod
    def nodeless_loop() -> "OperadicGraph":
        return OperadicGraph((), (), (), None, EXC_LOOP)

    @staticmethod
    def corolla(n: int, genus: int | None = None) -> "OperadicGraph":
        """The identity of colour n (n >= -1): one vertex, n+1 leaf flags."""
        deg = n + 1
        return OperadicGraph.make(
            (deg,),
            (),
            tuple((0, i) for i in range(deg)),
            None if genus is None else (genus,),
        )

    def validate(self) -> None:
        if self.special is not None:
            if self.degrees or self.pairing or self.leaves:
                raise ValueError("special graphs carry no vertex data")
            return
        flags = {(v, i) for v, d in enumerate(self.degrees) for i in range(d)}
        seen: set[Flag] = set()
        for a, b in self.pairing:
            if a >= b:
                raise ValueError(f"pair {a, b} not sorted")
            for x in (a, b):
                if x not in flags:
                    raise ValueError(f"unknown flag {x}")
                if x in seen:
                    raise ValueError(f"flag {x} in two pairs")
                seen.add(x)
        for x in self.leaves:
            if x not in flags:
                raise ValueError(f"unknown leaf {x}")
            if x in seen:
                raise ValueError(f"flag {x} both leaf and paired")
            seen.add(x)
        if seen != flags:
            raise ValueError("some flags neither paired nor leaves")
        if self.genus is not None and len(self.genus) != len(self.degrees):
            raise ValueError("genus length mismatch")
        if self.genus is not None and any(g < 0 for g in self.genus):
            raise ValueError("negative genus")
        if not self.connected():
            raise ValueError("graph not connected")

    # -- invariants ---------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.degrees)

    @property
    def n_edges(self) -> int:
        return len(self.pairing)

    def connected(self) -> bool:
        n = self.n_vertices
        if n <= 1:
            return True
        adj: dict[int, set[int]] = {v: set() for v in range(n)}
        for (v1, _), (v2, _) in self.pairing:
            adj[v1].add(v2)
            adj[v2].add(v1)
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == n

    def b1(self) -> int:
        if self.special == EXC_LOOP:
            return 1
        if self.special == EXC_EDGE:
            return 0
        return self.n_edges - self.n_vertices + 1

    def is_tree(self) -> bool:
        return self.b1() == 0

    def partner(self, flag: Flag) -> Flag | None:
        for a, b in self.pairing:
            if a == flag:
                return b
            if b == flag:
                return a
        return None

    def leaf_position(self, flag: Flag) -> int | None:
        try:
            return self.leaves.index(flag)
        except ValueError:
            return None

    def vertex_flags(self, v: int) -> list[Flag]:
        return [(v, i) for i in range(self.degrees[v])]


def grading_psi(g: OperadicGraph) -> int:
    """The grading: vertices minus one plus twice the first Betti number."""
    if g.special == EXC_EDGE:
        return -1
    if g.special == EXC_LOOP:
        return 1
    return g.n_vertices - 1 + 2 * g.b1()


def graph_profile(g: OperadicGraph) -> tuple[tuple[Colour, ...], Colour]:
    """Profile with plain integer colours (colour of a flagful object)."""
    if g.special == EXC_EDGE:
        return ((), 1)
    if g.special == EXC_LOOP:
        return ((), -1)
    inputs = tuple(d - 1 for d in g.degrees)
    return inputs, len(g.leaves) - 1


def graph_profile_genus(g: OperadicGraph) -> tuple[tuple[Colour, ...], Colour]:
    """Profile with genus-decorated colours (genus, degree-1)."""
    if g.special == EXC_EDGE:
        return ((), (0, 1))
    if g.special == EXC_LOOP:
        return ((), (1, -1))
    genus = g.genus if g.genus is not None else (0,) * g.n_vertices
    inputs = tuple((genus[v], d - 1) for v, d in enumerate(g.degrees))
    total = sum(genus) + g.b1()
    return inputs, (total, len(g.leaves) - 1)


# ---------------------------------------------------------------------------
# Composition (graph substitution)
# ---------------------------------------------------------------------------


def compose_graph(p: OperadicGraph, i: int, q: OperadicGraph) -> OperadicGraph:
    """Substitute q into the i-th vertex of p (i is 1-based)."""
    if p.special is not None:
        raise ValueError("vertex-less graphs have no inputs")
    if not 1 <= i <= p.n_vertices:
        raise ValueError(f"slot {i} out of range")
    vi = i - 1
    deg = p.degrees[vi]
    use_genus = p.genus is not None or q.genus is not None

    if q.special == EXC_LOOP:
        if deg != 0:
            raise ValueError("nodeless loop plugs into a flagless vertex")
        if p.n_vertices != 1:
            raise ValueError("flagless vertex cannot sit in a larger graph")
        if use_genus and (p.genus or (0,))[vi] != 1:
            raise ValueError("genus mismatch for the nodeless loop")
        return q

    if q.special == EXC_EDGE:
        if deg != 2:
            raise ValueError("exceptional edge plugs into a degree-2 vertex")
        if use_genus and (p.genus or (0,) * p.n_vertices)[vi] != 0:
            raise ValueError("exceptional edge has genus 0")
        return _compose_exceptional_edge(p, vi)

    # generic substitution
    if len(q.leaves) != deg:
        raise ValueError(
            f"output of q ({len(q.leaves)} leaves) does not match vertex degree {deg}"
        )
    if use_genus:
        g_p = p.genus if p.genus is not None else (0,) * p.n_vertices
        _, (q_total, _) = graph_profile_genus(q)
        if g_p[vi] != q_total:
            raise ValueError("genus mismatch in substitution")

    m = q.n_vertices

    def pmap(v: int) -> int:
        return v if v < vi else v + m - 1

    def qmap(v: int) -> int:
        return v + vi

    def move_p(flag: Flag) -> Flag:
        return (pmap(flag[0]), flag[1])

    def move_q(flag: Flag) -> Flag:
        return (qmap(flag[0]), flag[1])

    def repl(j: int) -> Flag:
        # the flag replacing the j-th flag of the substituted vertex
        return move_q(q.leaves[j])

    degrees = (
        p.degrees[:vi] + q.degrees + p.degrees[vi + 1 :]
    )
    new_pairs: list[tuple[Flag, Flag]] = []
    for a, b in q.pairing:
        new_pairs.append((move_q(a), move_q(b)))
    for a, b in p.pairing:
        on_a = a[0] == vi
        on_b = b[0] == vi
        if on_a and on_b:
            new_pairs.append((repl(a[1]), repl(b[1])))
        elif on_a:
            new_pairs.append((repl(a[1]), move_p(b)))
        elif on_b:
            new_pairs.append((move_p(a), repl(b[1])))
        else:
            new_pairs.append((move_p(a), move_p(b)))
    new_leaves = [
        repl(l[1]) if l[0] == vi else move_p(l) for l in p.leaves
    ]
    genus = None
    if use_genus:
        g_p = p.genus if p.genus is not None else (0,) * p.n_vertices
        g_q = q.genus if q.genus is not None else (0,) * q.n_vertices
        genus = g_p[:vi] + g_q + g_p[vi + 1 :]
    return OperadicGraph.make(degrees, new_pairs, new_leaves, genus, check=False)


def _compose_exceptional_edge(p: OperadicGraph, vi: int) -> OperadicGraph:
    """Contract the degree-2 vertex vi out of p."""
    a: Flag = (vi, 0)
    b: Flag = (vi, 1)
    pa = p.partner(a)
    pb = p.partner(b)
    if pa == b:
        # the vertex carries a loop; by connectivity p is that single vertex
        return OperadicGraph.nodeless_loop()
    if pa is None and pb is None:
        # p is a single vertex with two leaf flags
        return OperadicGraph.exceptional_edge()

    def vmap(v: int) -> int:
        return v if v < vi else v - 1

    def move(flag: Flag) -> Flag:
        return (vmap(flag[0]), flag[1])

    degrees = p.degrees[:vi] + p.degrees[vi + 1 :]
    genus = None if p.genus is None else p.genus[:vi] + p.genus[vi + 1 :]
    pairs = [
        (move(x), move(y))
        for x, y in p.pairing
        if x[0] != vi and y[0] != vi
    ]
    leaves = list(p.leaves)
    if pa is None:
        # flag a was a leaf: the far end of b takes its leaf position
        assert pb is not None
        leaves[leaves.index(a)] = pb
    elif pb is None:
        leaves[leaves.index(b)] = pa
    else:
        pairs.append((move(pa), move(pb)))
    assert all(l[0] != vi for l in leaves)
    return OperadicGraph.make(
        degrees, pairs, [move(l) for l in leaves], genus, check=False
    )


def act_graph(p: OperadicGraph, sigma: Perm) -> OperadicGraph:
    """Right action: vertex k of the result is vertex sigma(k) of p."""
    if p.special is not None:
        if sigma.degree != 0:
            raise ValueError("vertex-less graph has arity 0")
        return p
    if sigma.degree != p.n_vertices:
        raise ValueError("permutation degree mismatch")
    inv = sigma.inverse()

    def vmap(v: int) -> int:
        # old vertex v goes to position inv(v+1)-1
        return inv(v + 1) - 1

    def move(flag: Flag) -> Flag:
        return (vmap(flag[0]), flag[1])

    degrees = tuple(p.degrees[sigma(k) - 1] for k in range(1, p.n_vertices + 1))
    genus = (
        None
        if p.genus is None
        else tuple(p.genus[sigma(k) - 1] for k in range(1, p.n_vertices + 1))
    )
    pairs = [(move(a), move(b)) for a, b in p.pairing]
    leaves = [move(l) for l in p.leaves]
    return OperadicGraph.make(degrees, pairs, leaves, genus, check=False)


# ---------------------------------------------------------------------------
# Named graphs
# ---------------------------------------------------------------------------


MU0 = OperadicGraph.exceptional_edge()
LOOP = OperadicGraph.nodeless_loop()
ID1 = OperadicGraph.corolla(1)
XI = OperadicGraph.make((2,), (), ((0, 1), (0, 0)))  # leaf order swapped
NU = OperadicGraph.make((2,), (((0, 0), (0, 1)),), ())  # one vertex, one loop
ID_MINUS1 = OperadicGraph.corolla(-1)
BETA = OperadicGraph.make(
    (2, 2), (((0, 0), (1, 1)), ((0, 1), (1, 0))), ()
)
BETA_XI = OperadicGraph.make(
    (2, 2), (((0, 0), (1, 0)), ((0, 1), (1, 1))), ()
)


def mu_n(n: int) -> OperadicGraph:
    """The identity corolla of colour n."""
    return OperadicGraph.corolla(n)


# ---------------------------------------------------------------------------
# Membership predicates
# ---------------------------------------------------------------------------


def is_rooted(g: OperadicGraph) -> bool:
    """Every inner edge has exactly one 0-th flag; leaf 0 is a 0-th flag."""
    if g.special == EXC_EDGE:
        return True
    if g.special == EXC_LOOP:
        return False
    for a, b in g.pairing:
        if (a[1] == 0) == (b[1] == 0):
            return False
    if not g.leaves or g.leaves[0][1] != 0:
        return False
    # exactly one leaf may be a 0-th flag (the root)
    if sum(1 for l in g.leaves if l[1] == 0) != 1:
        return False
    return True


def planar_leaf_order(g: OperadicGraph) -> list[Flag] | None:
    """The leaf sequence of a rooted tree read off in planar order.

    Returns None if g is not a rooted tree.  Traversal starts at the
    root leaf and visits the flags of each vertex in their given order.
    """
    if g.special is not None or not g.is_tree() or not is_rooted(g):
        return None
    order: list[Flag] = []

    def visit(v: int) -> None:
        for idx in range(1, g.degrees[v]):
            flag = (v, idx)
            partner = g.partner(flag)
            if partner is None:
                order.append(flag)
            else:
                visit(partner[0])

    root_vertex = g.leaves[0][0]
    visit(root_vertex)
    return order


def evaluate_tree(P, g: OperadicGraph, args: Sequence):
    """Evaluate a rooted tree graph in an operad: input i decorates
    vertex i-1, inner edges become compositions, and the result is
    permuted so its inputs sit at the tree's global leaf positions.

    ``P`` is any operad handle whose operations can decorate the
    vertices (the decoration of a vertex of degree d must have arity
    d - 1).
    """
    from .core import Perm

    if g.special == EXC_EDGE:
        if args:
            raise ValueError("the exceptional edge takes no decorations")
        raise ValueError("the exceptional edge has no vertex to evaluate")
    if not g.is_tree() or not is_rooted(g):
        raise ValueError("evaluation requires a rooted tree")
    if len(args) != g.n_vertices:
        raise ValueError("one decoration per vertex required")

    leaf_pos = {flag: pos for pos, flag in enumerate(g.leaves)}
    seq: list[int] = []  # global input index of each leaf in traversal order

    def visit(v: int):
        t = args[v]
        offset = 0  # inputs contributed so far by earlier flags of v
        for idx in range(1, g.degrees[v]):
            flag = (v, idx)
            partner = g.partner(flag)
            if partner is None:
                seq.append(leaf_pos[flag])
                offset += 1
            else:
                sub, width = visit(partner[0])
                t = P.compose(t, offset + 1, sub)
                offset += width
        return t, offset

    root_vertex = g.leaves[0][0]
    t, width = visit(root_vertex)
    if sorted(seq) != list(range(1, width + 1)):
        raise ValueError("leaf positions do not label the inputs 1..n")
    images = [0] * width
    for pos, gidx in enumerate(seq, start=1):
        images[gidx - 1] = pos
    return P.act(t, Perm(tuple(images)))


def in_mOp(g: OperadicGraph) -> bool:
    return g.genus is None


def in_mOp_gn(g: OperadicGraph) -> bool:
    return g.genus is not None or g.special is not None


def in_mOp_st(g: OperadicGraph) -> bool:
    """Stable graphs: genus-decorated, every vertex has g(v)+deg(v) > 2."""
    if g.special == EXC_EDGE:
        return False
    if g.special == EXC_LOOP:
        return True
    if g.genus is None:
        return False
    return all(
        g.genus[v] + g.degrees[v] > 2 for v in range(g.n_vertices)
    )


def _is_circle(g: OperadicGraph) -> bool:
    """A circle with marked vertices: all degree 2, no leaves."""
    if g.special is not None:
        return False
    return (
        g.n_vertices >= 1
        and all(d == 2 for d in g.degrees)
        and not g.leaves
    )


def in_mOp_nc(g: OperadicGraph) -> bool:
    if g.genus is not None:
        return False
    if g.special == EXC_LOOP:
        return False
    return not _is_circle(g)


def in_cOp_prime(g: OperadicGraph) -> bool:
    """All trees (including the exceptional edge and the flagless vertex)."""
    return g.genus is None and g.special != EXC_LOOP and g.is_tree()


def in_cOp(g: OperadicGraph) -> bool:
    """Trees with at least one leaf."""
    if g.special == EXC_EDGE:
        return True
    return in_cOp_prime(g) and len(g.leaves) >= 1


def in_sOp(g: OperadicGraph) -> bool:
    return in_cOp(g) and is_rooted(g)


def in_pOp(g: OperadicGraph) -> bool:
    if g.special == EXC_EDGE:
        return True
    if not in_sOp(g):
        return False
    planar = planar_leaf_order(g)
    return planar is not None and tuple(planar) == g.leaves[1:]


def in_iuAs(g: OperadicGraph) -> bool:
    """Lines: trees with every vertex of degree 2."""
    if g.special == EXC_EDGE:
        return True
    if g.special == EXC_LOOP or g.genus is not None:
        return False
    return g.is_tree() and all(d == 2 for d in g.degrees)


def in_uAs(g: OperadicGraph) -> bool:
    return in_iuAs(g) and (g.special == EXC_EDGE or is_rooted(g))


def in_ciuAs(g: OperadicGraph) -> bool:
    """All graphs with vertices of degree 2, plus both exceptional graphs
    and the flagless vertex."""
    if g.special is not None:
        return True
    if g.genus is not None:
        return False
    if g.degrees == (0,):
        return True
    return all(d == 2 for d in g.degrees)


def in_cuAs(g: OperadicGraph) -> bool:
    """Degree-2 graphs whose inner edges pair a 0-th with a 1-st flag and
    whose 0-th leaf (if any) is a 0-th flag."""
    if not in_ciuAs(g):
        return False
    if g.special is not None or g.degrees == (0,):
        return True
    for a, b in g.pairing:
        if (a[1] == 0) == (b[1] == 0):
            return False
    if g.leaves and g.leaves[0][1] != 0:
        return False
    return True


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def _matchings(flags: list[Flag], n_pairs: int) -> Iterator[list[tuple[Flag, Flag]]]:
    """All ways to choose n_pairs disjoint pairs from flags."""
    if n_pairs == 0:
        yield []
        return
    if len(flags) < 2 * n_pairs:
        return
    first = flags[0]
    # pair first with each later flag
    for k in range(1, len(flags)):
        rest = flags[1:k] + flags[k + 1 :]
        for tail in _matchings(rest, n_pairs - 1):
            yield [(first, flags[k])] + tail
    # leave first unpaired
    for tail in _matchings(flags[1:], n_pairs):
        yield tail


def enumerate_graphs(
    bound: SizeBound,
    with_genus: bool = False,
    max_degree: int | None = None,
    max_leaves: int | None = None,
    max_total_genus: int | None = None,
    predicate: Callable[[OperadicGraph], bool] | None = None,
) -> Iterator[OperadicGraph]:
    """All operadic graphs within the bound.

    Vertices are bounded by min(max_arity, max_expr_nodes), the grading
    by max_grading, degrees by max_degree (default max_arity + 1) and
    leaves by max_leaves (default max_arity + 1).
    """
    max_v = min(bound.max_arity, bound.max_expr_nodes)
    max_deg = max_degree if max_degree is not None else bound.max_arity + 1
    max_l = max_leaves if max_leaves is not None else bound.max_arity + 1

    def emit(g: OperadicGraph) -> Iterator[OperadicGraph]:
        if grading_psi(g) > bound.max_grading:
            return
        if predicate is not None and not predicate(g):
            return
        yield g

    for special in (MU0, LOOP):
        yield from emit(special)

    for m in range(1, max_v + 1):
        for degrees in itertools.product(range(0, max_deg + 1), repeat=m):
            if 0 in degrees and m > 1:
                continue  # flagless vertex cannot be connected to anything
            flags = [(v, i) for v, d in enumerate(degrees) for i in range(d)]
            total = len(flags)
            for n_pairs in range(0, total // 2 + 1):
                n_leaves = total - 2 * n_pairs
                if n_leaves > max_l:
                    continue
                if m - 1 + 2 * (n_pairs - m + 1) > bound.max_grading:
                    continue
                if n_pairs < m - 1:
                    continue  # cannot be connected
                for pairing in _matchings(flags, n_pairs):
                    paired = {x for pair in pairing for x in pair}
                    free = [f for f in flags if f not in paired]
                    base = OperadicGraph(
                        tuple(degrees),
                        tuple(
                            sorted(tuple(sorted(pr)) for pr in pairing)
                        ),  # type: ignore[arg-type]
                        tuple(free),
                    )
                    if not base.connected():
                        continue
                    for leaf_order in itertools.permutations(free):
                        if not with_genus:
                            g = OperadicGraph(
                                base.degrees, base.pairing, tuple(leaf_order)
                            )
                            yield from emit(g)
                        else:
                            cap = (
                                max_total_genus
                                if max_total_genus is not None
                                else max(1, bound.max_grading // 2)
                            )
                            for genus in itertools.product(
                                range(0, cap + 1), repeat=m
                            ):
                                if sum(genus) > cap:
                                    continue
                                g = OperadicGraph(
                                    base.degrees,
                                    base.pairing,
                                    tuple(leaf_order),
                                    genus,
                                )
                                yield from emit(g)


# ---------------------------------------------------------------------------
# Operad handles
# ---------------------------------------------------------------------------


class GraphOperad(OperadHandle):
    """A suboperad of the operad of all operadic graphs."""

    def __init__(
        self,
        name: str,
        membership: Callable[[OperadicGraph], bool],
        with_genus: bool = False,
        identity_colours: Callable[[SizeBound], list[Colour]] | None = None,
        max_degree: int | None = None,
    ) -> None:
        self.name = name
        self.membership = membership
        self.with_genus = with_genus
        self._identity_colours = identity_colours
        self.max_degree = max_degree

    def contains(self, g: OperadicGraph) -> bool:
        return self.membership(g)

    def colours(self, bound: SizeBound) -> list[Colour]:
        if self._identity_colours is not None:
            return self._identity_colours(bound)
        if self.with_genus:
            out = []
            for g in range(0, max(1, bound.max_grading // 2) + 1):
                for n in range(-1, bound.max_arity + 1):
                    try:
                        ident = self.identity((g, n))
                    except (ValueError, KeyError):
                        continue
                    if self.membership(ident):
                        out.append((g, n))
            return out
        out = []
        for n in range(-1, bound.max_arity + 1):
            try:
                ident = self.identity(n)
            except (ValueError, KeyError):
                continue
            if self.membership(ident):
                out.append(n)
        return out

    def ops(self, bound: SizeBound) -> list[OperadicGraph]:
        seen = []
        for g in enumerate_graphs(
            bound,
            with_genus=self.with_genus,
            max_degree=self.max_degree,
            predicate=self.membership,
        ):
            seen.append(g)
        return sorted(seen, key=repr)

    def profile(self, p: OperadicGraph):
        if self.with_genus:
            return graph_profile_genus(p)
        return graph_profile(p)

    def compose(self, p, i, q):
        result = compose_graph(p, i, q)
        if not self.membership(result):
            raise ValueError(
                f"composition left the suboperad {self.name}: {result!r}"
            )
        return result

    def act(self, p, sigma: Perm):
        return act_graph(p, sigma)

    def identity(self, c):
        if self.with_genus:
            g, n = c
            ident = OperadicGraph.corolla(n, genus=g)
        else:
            ident = OperadicGraph.corolla(c)
        if not self.membership(ident):
            raise ValueError(f"no identity of colour {c!r} in {self.name}")
        return ident

    def grading(self, p) -> int:
        return grading_psi(p)


def _pOp_colours(bound: SizeBound) -> list[Colour]:
    return list(range(0, bound.max_arity + 1))


mOp = GraphOperad("mOp", in_mOp)
mOp_gn = GraphOperad("mOp_gn", in_mOp_gn, with_genus=True)
mOp_st = GraphOperad("mOp_st", in_mOp_st, with_genus=True)
mOp_nc = GraphOperad("mOp_nc", in_mOp_nc)
cOp_prime = GraphOperad("cOp_prime", in_cOp_prime)
cOp = GraphOperad("cOp", in_cOp)
sOp = GraphOperad("sOp", in_sOp)
pOp = GraphOperad("pOp", in_pOp)
iuAs = GraphOperad("iuAs", in_iuAs, max_degree=2)
uAs = GraphOperad("uAs", in_uAs, max_degree=2)
ciuAs = GraphOperad("ciuAs", in_ciuAs, max_degree=2)
cuAs = GraphOperad("cuAs", in_cuAs, max_degree=2)

GRAPH_OPERADS: dict[str, GraphOperad] = {
    P.name: P
    for P in [
        mOp,
        mOp_gn,
        mOp_st,
        mOp_nc,
        cOp_prime,
        cOp,
        sOp,
        pOp,
        iuAs,
        uAs,
        ciuAs,
        cuAs,
    ]
}

#: operads whose operations are trees (grading = arity - 1 on them)
TREE_OPERADS = {"cOp_prime", "cOp", "sOp", "pOp", "iuAs", "uAs"}


# ---------------------------------------------------------------------------
# Cyclic structure
# ---------------------------------------------------------------------------


def circle_of(p: OperadicGraph) -> OperadicGraph:
    """The circle of a line operation: plug p into the second vertex of
    the two-vertex circle."""
    return compose_graph(BETA, 2, p)


def uncircle(c: OperadicGraph) -> OperadicGraph:
    """Invert circle_of: recover p with circle_of(p) == c.

    The first vertex of c plays the role of the marked base vertex; its
    neighbours become the two leaves of the result.
    """
    if c.special is not None or c.degrees[0] != 2:
        raise ValueError("not a based circle")
    pa = c.partner((0, 0))
    pb = c.partner((0, 1))
    if pa is None or pb is None:
        raise ValueError("base vertex must have no leaves")
    if pa == (0, 1):
        # base vertex carries a loop: p is the exceptional edge
        if c.n_vertices != 1:
            raise ValueError("loop on the base vertex of a larger graph")
        return MU0

    def move(flag: Flag) -> Flag:
        return (flag[0] - 1, flag[1])

    degrees = c.degrees[1:]
    pairs = [
        (move(a), move(b))
        for a, b in c.pairing
        if a[0] != 0 and b[0] != 0
    ]
    # leaf 0 replaces the pair through flag (0,1); leaf 1 the one through (0,0)
    leaves = [move(pb), move(pa)]
    return OperadicGraph.make(degrees, pairs, leaves)


def cyclic_act(p: OperadicGraph) -> OperadicGraph:
    """The cyclic rotation on a line operation of arity n.

    Computed on the circle of p by decreasing vertex indices by one
    modulo n+1 and cutting the circle open again.
    """
    n = p.n_vertices
    circ = circle_of(p)
    # vertex at position k of the rotated circle is vertex k+1 mod n+1
    images = [k % (n + 1) + 1 for k in range(1, n + 2)]
    rotated = act_graph(circ, Perm(tuple(images)))
    return uncircle(rotated)


# ---------------------------------------------------------------------------
# Word models for lines
# ---------------------------------------------------------------------------

# A line operation of arity n is encoded as a word: a tuple of
# (letter, star) pairs whose letters are a permutation of 1..n.  The
# word (w1,e1)...(wn,en) is the operation taking inputs a_1..a_n to the
# product of a_{wk} (starred when ek is True), read from the 0-th leaf.


Word = tuple[tuple[int, bool], ...]


def word_involution(w: Word) -> Word:
    return tuple((j, not s) for j, s in reversed(w))


def word_compose(p: Word, i: int, q: Word) -> Word:
    m = len(q)

    def shift(j: int) -> int:
        return j if j < i else j + m - 1

    out: list[tuple[int, bool]] = []
    for j, s in p:
        if j == i:
            block = word_involution(q) if s else q
            out.extend((k + i - 1, t) for k, t in block)
        else:
            out.append((shift(j), s))
    return tuple(out)


def word_act(w: Word, sigma: Perm) -> Word:
    inv = sigma.inverse()
    return tuple((inv(j), s) for j, s in w)


def word_to_graph(w: Word) -> OperadicGraph:
    """The line of a word: vertex w_k sits at path position k; its 0-th
    flag faces the 0-th leaf when the letter is unstarred."""
    n = len(w)
    if n == 0:
        return MU0
    degrees = [2] * n
    entry: list[Flag] = []
    exit_: list[Flag] = []
    for j, s in w:
        v = j - 1
        entry.append((v, 1 if s else 0))
        exit_.append((v, 0 if s else 1))
    pairs = [(exit_[k], entry[k + 1]) for k in range(n - 1)]
    leaves = [entry[0], exit_[n - 1]]
    return OperadicGraph.make(degrees, pairs, leaves)


def graph_to_word(g: OperadicGraph) -> Word:
    if g.special == EXC_EDGE:
        return ()
    if not in_iuAs(g):
        raise ValueError("not a line")
    start = g.leaves[0]
    word: list[tuple[int, bool]] = []
    flag = start
    while True:
        v, idx = flag
        word.append((v + 1, idx == 1))
        other = (v, 1 - idx)
        nxt = g.partner(other)
        if nxt is None:
            break
        flag = nxt
    return tuple(word)


class WordOperad(OperadHandle):
    """Line operads in the word encoding.

    With ``with_stars=False`` this is the operad of monoids (words are
    permutations); with stars it is the operad of monoids with
    anti-involution.
    """

    def __init__(self, name: str, with_stars: bool) -> None:
        self.name = name
        self.with_stars = with_stars
        self.colour = 1  # matches the colour of a degree-2 vertex

    def colours(self, bound: SizeBound) -> list[Colour]:
        return [self.colour]

    def ops(self, bound: SizeBound) -> list[Word]:
        out: list[Word] = []
        for n in range(0, bound.max_arity + 1):
            for images in itertools.permutations(range(1, n + 1)):
                if self.with_stars:
                    for stars in itertools.product(
                        (False, True), repeat=n
                    ):
                        out.append(tuple(zip(images, stars)))
                else:
                    out.append(tuple((j, False) for j in images))
        return out

    def profile(self, p: Word):
        return ((self.colour,) * len(p), self.colour)

    def compose(self, p: Word, i: int, q: Word) -> Word:
        if not 1 <= i <= len(p):
            raise ValueError("slot out of range")
        w = word_compose(p, i, q)
        if not self.with_stars and any(s for _, s in w):
            raise ValueError("starred word outside the star-free operad")
        return w

    def act(self, p: Word, sigma: Perm) -> Word:
        return word_act(p, sigma)

    def identity(self, c) -> Word:
        return ((1, False),)

    def grading(self, p: Word) -> int:
        return len(p) - 1

    def to_graph(self, p: Word) -> OperadicGraph:
        return word_to_graph(p)

    def from_graph(self, g: OperadicGraph) -> Word:
        return graph_to_word(g)


uAs_words = WordOperad("uAs_words", with_stars=False)
iuAs_words = WordOperad("iuAs_words", with_stars=True)


# ---------------------------------------------------------------------------
# Trace operads: lines plus oriented circles
# ---------------------------------------------------------------------------

# An oriented circle of arity n is encoded as ("circ", seq) where seq
# lists, in the order of travel, pairs (slot, star): the input slot
# sitting at that position and whether the travel direction enters the
# slot's vertex through its second flag.  The tuple is normalized to
# the rotation starting at the smallest slot; reflections are *not*
# identified, so a circle and its reversal are distinct operations.

CIRC = "circ"
THETA = ("theta",)


def circle_canonical(seq: Sequence[tuple[int, bool]]) -> tuple:
    seq = tuple((int(j), bool(s)) for j, s in seq)
    if not seq:
        return (CIRC, ())
    k = min(range(len(seq)), key=lambda i: seq[i][0])
    return (CIRC, seq[k:] + seq[:k])


def circle_reverse(c: tuple) -> tuple:
    _, seq = c
    return circle_canonical(tuple((j, not s) for j, s in reversed(seq)))


def is_circle(p) -> bool:
    return isinstance(p, tuple) and len(p) == 2 and p[0] == CIRC


class TraceOperad(OperadHandle):
    """Lines and oriented circles: the operad of monoids with
    anti-involution and a trace map.

    Operations of output colour 1 are the line graphs; operations of
    output colour -1 are the oriented circles, the identity of colour
    -1 and (in the involutive variant) the involution of the trace
    target, which reverses circle orientation.
    """

    def __init__(self, name: str, involutive: bool) -> None:
        self.name = name
        self.involutive = involutive

    def colours(self, bound: SizeBound) -> list[Colour]:
        return [-1, 1]

    def ops(self, bound: SizeBound) -> list:
        out: list = [ID_MINUS1]
        if self.involutive:
            out.append(THETA)
        for g in enumerate_graphs(bound, max_degree=2, predicate=in_iuAs):
            out.append(g)
        max_n = min(bound.max_arity, bound.max_expr_nodes)
        for n in range(0, max_n + 1):
            if n + 1 > bound.max_grading:
                continue
            if n == 0:
                out.append((CIRC, ()))
                continue
            for rest in itertools.permutations(range(2, n + 1)):
                for stars in itertools.product((False, True), repeat=n):
                    seq = ((1, stars[0]),) + tuple(
                        (j, s) for j, s in zip(rest, stars[1:])
                    )
                    out.append((CIRC, seq))
        return sorted(out, key=repr)

    def profile(self, p):
        if is_circle(p):
            return ((1,) * len(p[1]), -1)
        if p == THETA:
            return ((-1,), -1)
        return graph_profile(p)

    def compose(self, p, i, q):
        if p == ID_MINUS1:
            if i != 1:
                raise ValueError("slot out of range")
            if self.profile(q)[1] != -1:
                raise ValueError("output colour mismatch")
            return q
        if p == THETA:
            if i != 1:
                raise ValueError("slot out of range")
            if q == ID_MINUS1:
                return THETA
            if q == THETA:
                return ID_MINUS1
            if is_circle(q):
                return circle_reverse(q)
            raise ValueError("output colour mismatch")
        if is_circle(p):
            _, seq = p
            n = len(seq)
            if not 1 <= i <= n:
                raise ValueError("slot out of range")
            if not isinstance(q, OperadicGraph) or not in_iuAs(q):
                raise ValueError("only lines substitute into circles")
            word = graph_to_word(q)
            m = len(word)
            new_seq: list[tuple[int, bool]] = []
            for j, s in seq:
                if j == i:
                    block = (
                        [(i + k - 1, t) for k, t in word]
                        if not s
                        else [(i + k - 1, not t) for k, t in reversed(word)]
                    )
                    new_seq.extend(block)
                else:
                    new_seq.append((j if j < i else j + m - 1, s))
            return circle_canonical(new_seq)
        # p is a line
        if not isinstance(q, OperadicGraph) or not in_iuAs(q):
            raise ValueError("only lines substitute into lines")
        result = compose_graph(p, i, q)
        if not in_iuAs(result):
            raise ValueError("composition left the lines")
        return result

    def act(self, p, sigma: Perm):
        if is_circle(p):
            if sigma.degree != len(p[1]):
                raise ValueError("permutation degree mismatch")
            inv = sigma.inverse()
            return circle_canonical(
                tuple((inv(j), s) for j, s in p[1])
            )
        if p == THETA:
            if sigma.degree != 1:
                raise ValueError("permutation degree mismatch")
            return p
        return act_graph(p, sigma)

    def identity(self, c):
        if c == 1:
            return ID1
        if c == -1:
            return ID_MINUS1
        raise ValueError(f"no identity of colour {c!r} in {self.name}")

    def grading(self, p) -> int:
        if is_circle(p):
            return len(p[1]) + 1
        if p == THETA:
            return 0
        return grading_psi(p)


iuAs_Tr = TraceOperad("iuAs_Tr", involutive=False)
iuAs_iTr = TraceOperad("iuAs_iTr", involutive=True)

TRACE_OPERADS: dict[str, TraceOperad] = {
    "iuAs_Tr": iuAs_Tr,
    "iuAs_iTr": iuAs_iTr,
}

#: every operad registered in this module, by name
ALL_OPERADS: dict[str, OperadHandle] = {**GRAPH_OPERADS, **TRACE_OPERADS}


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def graph_to_json(g: OperadicGraph) -> dict:
    if g.special == EXC_EDGE:
        return {"special": "mu0"}
    if g.special == EXC_LOOP:
        return {"special": "circle"}
    data = {
        "vertices": list(g.degrees),
        "involution": [[list(a), list(b)] for a, b in g.pairing],
        "leaves": [list(l) for l in g.leaves],
    }
    if g.genus is not None:
        data["genus"] = list(g.genus)
    return data


def graph_from_json(data: dict) -> OperadicGraph:
    special = data.get("special")
    if special == "mu0":
        return MU0
    if special == "circle":
        return LOOP
    return OperadicGraph.make(
        data["vertices"],
        [
            (tuple(a), tuple(b))  # type: ignore[arg-type]
            for a, b in data["involution"]
        ],
        [tuple(l) for l in data["leaves"]],  # type: ignore[arg-type]
        data.get("genus"),
    )


def graph_to_dot(g: OperadicGraph, name: str = "G") -> str:
    lines = [f"graph {name} {{"]
    if g.special == EXC_EDGE:
        lines.append('  e0 [shape=point, label=""];')
        lines.append('  e1 [shape=point, label=""];')
        lines.append("  e0 -- e1;")
    elif g.special == EXC_LOOP:
        lines.append('  o [shape=point, label=""];')
        lines.append("  o -- o;")
    else:
        for v in range(g.n_vertices):
            label = f"v{v + 1}"
            if g.genus is not None:
                label += f" (g={g.genus[v]})"
            lines.append(f'  v{v} [label="{label}"];')
        for (v1, i1), (v2, i2) in g.pairing:
            lines.append(f'  v{v1} -- v{v2} [label="{i1}:{i2}"];')
        for pos, (v, i) in enumerate(g.leaves):
            lines.append(f'  l{pos} [shape=none, label="{pos}"];')
            lines.append(f'  v{v} -- l{pos} [style=dashed, label="{i}"];')
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Exhaustive axiom battery for graph operads
# ---------------------------------------------------------------------------


def exhaustive_graph_battery(
    P: GraphOperad,
    max_vertices: int = 4,
    max_degree: int = 3,
    max_leaves: int = 2,
    max_psi: int = 3,
    max_perm_arity: int = 3,
) -> Report:
    """Exhaustive unit/action/equivariance/associativity check.

    All operations with at most ``max_vertices`` vertices (within the
    colour caps) are enumerated, and every axiom instance whose inputs
    and outputs stay inside the truncation is verified.  The report
    notes how often each contraction branch of the exceptional edge
    (leaf-leaf, leaf-edge, edge-edge) was exercised.
    """
    from .core import all_perms, block_perm_inner, block_perm_outer

    report = Report(f"exhaustive graph battery: {P.name}")
    bound = SizeBound(
        max_arity=max_vertices,
        max_grading=max_psi,
        max_expr_nodes=max_vertices,
    )
    gs = list(
        enumerate_graphs(
            bound,
            with_genus=P.with_genus,
            max_degree=max_degree,
            max_leaves=max_leaves,
            predicate=P.membership,
        )
    )
    prof = {g: P.profile(g) for g in gs}
    nv = {g: g.n_vertices for g in gs}
    by_out: dict[Colour, list[OperadicGraph]] = {}
    # bucketed by (output colour, vertex count) so candidate scans only
    # touch graphs that fit the vertex budget
    by_out_nv: dict[tuple[Colour, int], list[OperadicGraph]] = {}
    for g in gs:
        by_out.setdefault(prof[g][1], []).append(g)
        by_out_nv.setdefault((prof[g][1], nv[g]), []).append(g)

    def candidates(c: Colour, max_nv: int):
        for k in range(0, max_nv + 1):
            yield from by_out_nv.get((c, k), ())
    branch_coverage = {"leaf-leaf": 0, "leaf-edge": 0, "edge-edge": 0, "loop": 0}

    def note_branch(p: OperadicGraph, i: int) -> None:
        vi = i - 1
        a, b = (vi, 0), (vi, 1)
        pa, pb = p.partner(a), p.partner(b)
        if pa == b:
            branch_coverage["loop"] += 1
        elif pa is None and pb is None:
            branch_coverage["leaf-leaf"] += 1
        elif pa is None or pb is None:
            branch_coverage["leaf-edge"] += 1
        else:
            branch_coverage["edge-edge"] += 1

    # units
    for p in gs:
        ins, out = prof[p]
        try:
            if compose_graph(P.identity(out), 1, p) != p:
                report.add("left-unit", p=p)
            for i, c in enumerate(ins, 1):
                if compose_graph(p, i, P.identity(c)) != p:
                    report.add("right-unit", p=p, i=i)
            report.checked += 1 + len(ins)
        except ValueError as exc:
            report.add("unit-error", p=p, error=str(exc))

    # right action law
    for p in gs:
        n = nv[p]
        if 2 <= n <= max_perm_arity:
            perms = list(all_perms(n))
            for sigma in perms:
                ps = act_graph(p, sigma)
                for tau in perms:
                    if act_graph(ps, tau) != act_graph(p, sigma * tau):
                        report.add("right-action", p=p, sigma=sigma, tau=tau)
                    report.checked += 1

    # composable pairs within the truncation
    pairs: list[tuple[OperadicGraph, int, OperadicGraph]] = []
    for p in gs:
        if nv[p] == 0:
            continue
        ins, _ = prof[p]
        budget = max_vertices - nv[p] + 1
        for i, c in enumerate(ins, 1):
            for q in candidates(c, budget):
                pairs.append((p, i, q))

    composed: dict[tuple[OperadicGraph, int, OperadicGraph], OperadicGraph] = {}

    def compose_memo(a, k, b):
        key = (a, k, b)
        res = composed.get(key)
        if res is None:
            res = compose_graph(a, k, b)
            composed[key] = res
        return res

    for p, i, q in pairs:
        if q.special == EXC_EDGE:
            note_branch(p, i)
        try:
            compose_memo(p, i, q)
        except ValueError as exc:
            report.add("composition-error", p=p, i=i, q=q, error=str(exc))
    report.checked += len(composed)

    # equivariance in both arguments
    for p, i, q in pairs:
        pq = composed.get((p, i, q))
        if pq is None:
            continue
        n, m = nv[p], nv[q]
        if 2 <= n <= max_perm_arity:
            for sigma in all_perms(n):
                # slot of act(p, sigma) that q now fits: sigma sends it to i
                i_new = sigma.inverse()(i)
                lhs = compose_graph(act_graph(p, sigma), i_new, q)
                rhs = act_graph(pq, block_perm_outer(sigma, i_new, m))
                if lhs != rhs:
                    report.add(
                        "equivariance-outer", p=p, sigma=sigma, i=i, q=q
                    )
                report.checked += 1
        if 2 <= m <= max_perm_arity:
            for tau in all_perms(m):
                lhs = compose_graph(p, i, act_graph(q, tau))
                rhs = act_graph(pq, block_perm_inner(n, i, tau))
                if lhs != rhs:
                    report.add("equivariance-inner", p=p, i=i, q=q, tau=tau)
                report.checked += 1

    # associativity over all triples staying inside the truncation
    for p, i, q in pairs:
        pq = composed.get((p, i, q))
        if pq is None:
            continue
        n, m = nv[p], nv[q]
        ins_pq, _ = (
            graph_profile_genus(pq) if P.with_genus else graph_profile(pq)
        )
        budget = max_vertices - pq.n_vertices + 1
        for j, c in enumerate(ins_pq, 1):
            for r in candidates(c, budget):
                if r.special == EXC_EDGE:
                    note_branch(pq, j)
                try:
                    lhs = compose_memo(pq, j, r)
                except ValueError as exc:
                    report.add(
                        "composition-error", p=pq, i=j, q=r, error=str(exc)
                    )
                    continue
                if i <= j < i + m:
                    rhs = compose_memo(p, i, compose_memo(q, j - i + 1, r))
                    kind = "sequential"
                elif j < i:
                    rhs = compose_memo(
                        compose_memo(p, j, r), i + nv[r] - 1, q
                    )
                    kind = "parallel-low"
                else:
                    rhs = compose_memo(compose_memo(p, j - m + 1, r), i, q)
                    kind = "parallel-high"
                if lhs != rhs:
                    report.add(kind, p=p, i=i, q=q, j=j, r=r)
                report.checked += 1

    report.note(f"operations enumerated: {len(gs)}")
    report.note(f"composable pairs: {len(pairs)}")
    report.note(f"contraction branches exercised: {branch_coverage}")
    for key in ("leaf-leaf", "leaf-edge", "edge-edge"):
        if branch_coverage[key] == 0:
            report.add("branch-family-not-covered", branch=key)
    return report


# ---------------------------------------------------------------------------
# Random composition tests
# ---------------------------------------------------------------------------


def random_composition_check(
    P: GraphOperad,
    bound: SizeBound,
    n_samples: int,
    seed: int = 0,
    max_vertices: int = 5,
) -> Report:
    """Compose random pairs and check grading additivity and profiles."""
    rng = random.Random(seed)
    report = Report(f"random compositions: {P.name}")
    pool = [g for g in P.ops(bound) if g.n_vertices >= 1]
    by_output: dict[Colour, list[OperadicGraph]] = {}
    for g in pool + [MU0, LOOP]:
        if P.contains(g):
            by_output.setdefault(P.profile(g)[1], []).append(g)
    attempts = 0
    while report.checked < n_samples and attempts < 50 * n_samples:
        attempts += 1
        p = rng.choice(pool)
        i = rng.randint(1, P.arity(p))
        colour = P.profile(p)[0][i - 1]
        candidates = by_output.get(colour, [])
        if not candidates:
            continue
        q = rng.choice(candidates)
        if p.n_vertices + q.n_vertices - 1 > max_vertices:
            continue
        try:
            result = compose_graph(p, i, q)
        except ValueError as exc:
            report.add("composition-error", p=p, i=i, q=q, error=str(exc))
            continue
        report.checked += 1
        if grading_psi(result) != grading_psi(p) + grading_psi(q):
            report.add("grading-not-additive", p=p, i=i, q=q, result=result)
        ins_p, out_p = P.profile(p)
        ins_q, _ = P.profile(q)
        expected = ins_p[: i - 1] + ins_q + ins_p[i:]
        if P.profile(result) != (expected, out_p):
            report.add("profile-mismatch", p=p, i=i, q=q, result=result)
    return report


def save_json(obj: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
