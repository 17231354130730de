"""Twisted arrow and enveloping constructions.

Two complementary engines are provided.

* For an arbitrary operad/algebra pair the arrow, enveloping and plus
  operations are computed as classes of marked expressions (module
  ``algebras``), with hom-sets, the forgetful opfibration and its
  unique lifts, functoriality along algebra and operad maps, and the
  evaluation functor.

* For an operad P regarded as an algebra over the operad of coloured
  rooted trees, the twisted arrow category Tw(P) has a canonical-form
  calculus: a morphism p -> r is a root marking (with the source in its
  first slot), one upper marking per input of p, and a partition of the
  inputs of r into sorted blocks.  This is the workhorse behind the
  comparisons with the simplex, pointed-set, cyclic, finite-set and
  tree categories.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, Iterator, Sequence

from .core import (
    BoundExhausted,
    Colour,
    OperadHandle,
    Perm,
    Report,
    SizeBound,
    sorting_perm,
)
from .algebras import Algebra, ClassEngine, FlatPair, pair_marked_elements


# ---------------------------------------------------------------------------
# Class-engine based constructions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwOperation:
    """An operation of the twisted arrow operad: ordered marked inputs,
    output element, and the class representative."""

    inputs: tuple
    output: Any
    rep: FlatPair


def _tw_operations(engine: ClassEngine) -> list[TwOperation]:
    out = []
    for rep in engine.classes():
        inputs, value = engine.class_signature(rep)
        out.append(TwOperation(inputs, value, rep))
    return out


def tw_hom(engine: ClassEngine, a_src, a_dst) -> list[TwOperation]:
    """Morphisms a_src -> a_dst: arity-1 arrow classes with marked input
    a_src evaluating to a_dst."""
    if engine.mode != "arrow":
        raise ValueError("tw_hom needs an arrow-mode engine")
    out = []
    for rep in engine.classes():
        marked = pair_marked_elements(rep[1])
        if len(marked) != 1 or marked[1] != a_src:
            continue
        if engine.eval_pair(rep) != a_dst:
            continue
        out.append(TwOperation((a_src,), a_dst, rep))
    return sorted(out, key=repr)


def u_hom(engine: ClassEngine, c_src: Colour, c_dst: Colour) -> list[FlatPair]:
    """Morphisms c_src -> c_dst of the enveloping category: arity-1
    enveloping classes with the marked slot of colour c_src and output
    colour c_dst."""
    if engine.mode != "enveloping":
        raise ValueError("u_hom needs an enveloping-mode engine")
    P = engine.P
    out = []
    for rep in engine.classes():
        q, xs = rep
        holes = [(idx, s) for idx, s in enumerate(xs) if s[0] == "h"]
        if len(holes) != 1:
            continue
        idx, _ = holes[0]
        if P.inputs(q)[idx] != c_src or P.output(q) != c_dst:
            continue
        out.append(rep)
    return sorted(out, key=repr)


def plus_operations(engine: ClassEngine) -> list[FlatPair]:
    """Operations of the plus construction: classes of fully marked
    expressions (orbits of (q, input element assignment) under the
    symmetric action)."""
    if engine.mode != "arrow":
        raise ValueError("plus_operations needs an arrow-mode engine")
    out = []
    for rep in engine.classes():
        if all(s[0] == "m" for s in rep[1]):
            out.append(rep)
    return sorted(out, key=repr)


def plus_hom(engine: ClassEngine, inputs: Sequence, output) -> list[FlatPair]:
    """Plus-construction operations with the given colour profile, where
    colours are arrow classes of arity 1 wrapped as (marked element,
    evaluation) signatures."""
    out = []
    for rep in plus_operations(engine):
        sig_in, sig_out = engine.class_signature(rep)
        if tuple(sig_in) == tuple(inputs) and sig_out == output:
            out.append(rep)
    return out


def alpha_project(engine_tw: ClassEngine, engine_u: ClassEngine, rep: FlatPair) -> FlatPair:
    """The forgetful map: replace marked elements by colour placeholders."""
    q, xs = rep
    ys = tuple(("h", s[1]) if s[0] == "m" else s for s in xs)
    return engine_u.to_class(q, ys)


def alpha_lift(
    engine_tw: ClassEngine,
    engine_u: ClassEngine,
    f: FlatPair,
    marked_elements: Sequence,
) -> FlatPair:
    """The unique lift of an enveloping class along the opfibration:
    fill the colour placeholders with the given elements (by label)."""
    q, xs = f
    ys = []
    for idx, s in enumerate(xs):
        if s[0] == "h":
            j = s[1]
            a = marked_elements[j - 1]
            c = engine_tw.P.inputs(q)[idx]
            if a not in engine_tw.A.elements(c):
                raise ValueError(f"element {a!r} not of colour {c!r}")
            ys.append(("m", j, a))
        else:
            ys.append(s)
    return engine_tw.to_class(q, tuple(ys))


def check_opfibration(engine_tw: ClassEngine, engine_u: ClassEngine) -> Report:
    """Every enveloping class has exactly one lift per choice of marked
    elements, and projection inverts lifting."""
    report = Report(
        f"opfibration over {engine_tw.P.name}/{engine_tw.A.name}"
    )
    P, A = engine_tw.P, engine_tw.A
    # group arrow classes by their projection
    fibres: dict[FlatPair, list[FlatPair]] = {}
    for rep in engine_tw.classes():
        down = alpha_project(engine_tw, engine_u, rep)
        fibres.setdefault(down, []).append(rep)
    for down in engine_u.classes():
        q, xs = down
        hole_slots = [(idx, s[1]) for idx, s in enumerate(xs) if s[0] == "h"]
        colour_by_label = {j: P.inputs(q)[idx] for idx, j in hole_slots}
        labels = sorted(colour_by_label)
        for choice in itertools.product(
            *[A.elements(colour_by_label[j]) for j in labels]
        ):
            ys = list(xs)
            for idx, j in hole_slots:
                ys[idx] = ("m", j, choice[labels.index(j)])
            lift = engine_tw.to_class(q, tuple(ys))
            if alpha_project(engine_tw, engine_u, lift) != down:
                report.add("lift-does-not-project-back", down=down, choice=choice)
            marked = dict(zip(labels, choice))
            matches = {
                r
                for r in fibres.get(down, [])
                if pair_marked_elements(r[1]) == marked
            }
            if matches != {lift}:
                report.add(
                    "lift-not-unique",
                    down=down,
                    choice=choice,
                    lifts=sorted(matches, key=repr),
                )
            report.checked += 1
    return report


def push_along_algebra_map(
    engine_A: ClassEngine,
    engine_B: ClassEngine,
    f: Callable,
    rep: FlatPair,
) -> FlatPair:
    """Image of an arrow class under an algebra map: apply f to every
    stored element."""
    q, xs = rep
    ys = tuple(
        ("e", f(s[1])) if s[0] == "e" else ("m", s[1], f(s[2])) if s[0] == "m" else s
        for s in xs
    )
    return engine_B.to_class(q, ys)


def push_along_operad_map(
    engine_src: ClassEngine,
    engine_dst: ClassEngine,
    g: Callable,
    rep: FlatPair,
) -> FlatPair:
    """Image of a class under an operad map: apply g to the operation."""
    q, xs = rep
    return engine_dst.to_class(g(q), xs)


def check_algebra_map(
    P: OperadHandle, A: Algebra, B: Algebra, f: Callable, bound: SizeBound
) -> Report:
    report = Report(f"algebra map {A.name} -> {B.name}")
    for p in P.ops(bound):
        ins = P.inputs(p)
        if any(c not in A.carrier for c in ins) or P.output(p) not in A.carrier:
            continue
        for args in itertools.product(*[A.elements(c) for c in ins]):
            lhs = f(A.eval(p, args))
            rhs = B.eval(p, tuple(f(a) for a in args))
            if lhs != rhs:
                report.add("not-a-map", p=p, args=args)
            report.checked += 1
    return report


# ---------------------------------------------------------------------------
# Category truncations
# ---------------------------------------------------------------------------


class CatTrunc:
    """A finite truncation of a category: objects, hom-sets and all
    compositions that stay inside the truncation."""

    def __init__(self, name: str = "category") -> None:
        self.name = name
        self.objects: list = []
        self.homs: dict[tuple[Any, Any], list] = {}
        self.source: dict[Any, Any] = {}
        self.target: dict[Any, Any] = {}
        self.identities: dict[Any, Any] = {}
        self.composition: dict[tuple[Any, Any], Any] = {}

    def add_object(self, x) -> None:
        if x not in self.objects:
            self.objects.append(x)

    def add_morphism(self, f, x, y) -> None:
        self.homs.setdefault((x, y), [])
        if f not in self.homs[(x, y)]:
            self.homs[(x, y)].append(f)
        self.source[f] = x
        self.target[f] = y

    def hom(self, x, y) -> list:
        return self.homs.get((x, y), [])

    def morphisms(self) -> list:
        return list(self.source)

    def compose(self, g, f):
        """g after f."""
        key = (g, f)
        if key not in self.composition:
            raise KeyError("composite not tabulated")
        return self.composition[key]

    def set_compose(self, g, f, gf) -> None:
        self.composition[(g, f)] = gf

    def check_category_axioms(self) -> Report:
        report = Report(f"category axioms: {self.name}")
        for x in self.objects:
            if x not in self.identities:
                report.add("missing-identity", object=x)
        for f, x in self.source.items():
            y = self.target[f]
            idx = self.identities.get(x)
            idy = self.identities.get(y)
            if idx is not None and (f, idx) in self.composition:
                if self.composition[(f, idx)] != f:
                    report.add("right-unit", f=f)
                report.checked += 1
            if idy is not None and (idy, f) in self.composition:
                if self.composition[(idy, f)] != f:
                    report.add("left-unit", f=f)
                report.checked += 1
        for (g, f), gf in self.composition.items():
            if self.source.get(g) != self.target.get(f):
                report.add("ill-typed-composite", g=g, f=f)
                continue
            if self.source.get(gf) != self.source.get(f) or self.target.get(
                gf
            ) != self.target.get(g):
                report.add("composite-endpoints", g=g, f=f)
            report.checked += 1
        # associativity where all composites exist
        for (g, f), gf in list(self.composition.items()):
            for (h, g2), hg in list(self.composition.items()):
                if g2 != g:
                    continue
                if (h, gf) in self.composition and (hg, f) in self.composition:
                    if self.composition[(h, gf)] != self.composition[(hg, f)]:
                        report.add("associativity", h=h, g=g, f=f)
                    report.checked += 1
        return report

    def to_json(self) -> dict:
        key = {m: f"m{idx}" for idx, m in enumerate(self.morphisms())}
        return {
            "objects": [repr(x) for x in self.objects],
            "homs": {
                f"{self.objects.index(x)}->{self.objects.index(y)}": [
                    key[m] for m in ms
                ]
                for (x, y), ms in self.homs.items()
            },
            "compose": [
                [key[g], key[f], key[gf]]
                for (g, f), gf in self.composition.items()
            ],
            "identities": {
                str(self.objects.index(x)): key[i]
                for x, i in self.identities.items()
            },
        }


def functor_check(
    C: CatTrunc,
    D: CatTrunc,
    on_objects: Callable,
    on_morphisms: Callable,
    require_bijective: bool = True,
) -> Report:
    """Verify that the maps define a functor; optionally that it is an
    isomorphism onto the relevant truncation (bijective on objects
    present and on each hom-set)."""
    report = Report(f"functor {C.name} -> {D.name}")
    for x in C.objects:
        if on_objects(x) not in D.objects:
            report.add("object-not-in-target", x=x)
        report.checked += 1
    for f, x in C.source.items():
        y = C.target[f]
        img = on_morphisms(f)
        if img not in D.hom(on_objects(x), on_objects(y)):
            report.add("morphism-image-ill-typed", f=f)
        report.checked += 1
    for x, i in C.identities.items():
        if on_morphisms(i) != D.identities.get(on_objects(x)):
            report.add("identity-not-preserved", x=x)
        report.checked += 1
    for (g, f), gf in C.composition.items():
        try:
            img = D.compose(on_morphisms(g), on_morphisms(f))
        except KeyError:
            report.add("composite-missing-in-target", g=g, f=f)
            continue
        if img != on_morphisms(gf):
            report.add("composition-not-preserved", g=g, f=f)
        report.checked += 1
    if require_bijective:
        for (x, y), ms in C.homs.items():
            images = {on_morphisms(m) for m in ms}
            targets = set(D.hom(on_objects(x), on_objects(y)))
            if len(images) != len(ms):
                report.add("not-injective", x=x, y=y)
            if images != targets:
                report.add(
                    "not-surjective",
                    x=x,
                    y=y,
                    missing=sorted(targets - images, key=repr)[:3],
                )
            report.checked += 1
    return report


# ---------------------------------------------------------------------------
# The twisted arrow category of an operad (canonical-form calculus)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwMorphism:
    """Canonical representative of a morphism in Tw(P).

    ``q0`` is the root marking whose first input receives the source;
    ``uppers`` holds one marking per input of the source; ``blocks``
    partitions the inputs of the target: ``blocks[0]`` lists the inputs
    belonging to the root (beyond the source slot) and ``blocks[j]`` the
    inputs of the j-th upper marking.  All blocks are strictly
    increasing tuples.
    """

    source: Any
    q0: Any
    uppers: tuple
    blocks: tuple[tuple[int, ...], ...]


class TwistedArrowCategory:
    """Tw(P) for an operad handle P, with canonical morphism forms."""

    def __init__(self, P: OperadHandle, bound: SizeBound) -> None:
        self.P = P
        self.bound = bound
        self.name = f"Tw({P.name})"

    # -- evaluation ---------------------------------------------------------

    def target(self, f: TwMorphism):
        P = self.P
        t1 = P.graft(f.source, f.uppers)
        r0 = P.compose(f.q0, 1, t1)
        seq: list[int] = []
        for j in range(1, len(f.uppers) + 1):
            seq.extend(f.blocks[j])
        seq.extend(f.blocks[0])
        n = len(seq)
        if sorted(seq) != list(range(1, n + 1)):
            raise ValueError(f"blocks do not partition 1..{n}: {f.blocks}")
        images = [0] * n
        for pos, g in enumerate(seq, start=1):
            images[g - 1] = pos
        return P.act(r0, Perm(tuple(images)))

    def validate(self, f: TwMorphism) -> None:
        P = self.P
        ins, out = P.profile(f.source)
        if len(f.uppers) != len(ins):
            raise ValueError("one upper marking per source input required")
        if P.arity(f.q0) < 1:
            raise ValueError("root marking needs a slot for the source")
        if len(f.blocks) != len(ins) + 1:
            raise ValueError("block count mismatch")
        if len(f.blocks[0]) != P.arity(f.q0) - 1:
            raise ValueError("root block size mismatch")
        for j, u in enumerate(f.uppers, start=1):
            if P.output(u) != ins[j - 1]:
                raise ValueError(f"upper {j} output colour mismatch")
            if len(f.blocks[j]) != P.arity(u):
                raise ValueError(f"block {j} size mismatch")
        for b in f.blocks:
            if list(b) != sorted(b):
                raise ValueError("blocks must be sorted")
        self.target(f)  # raises if inconsistent

    # -- structural morphisms ----------------------------------------------

    def identity(self, p) -> TwMorphism:
        P = self.P
        ins, out = P.profile(p)
        return TwMorphism(
            p,
            P.identity(out),
            tuple(P.identity(c) for c in ins),
            ((),) + tuple((j,) for j in range(1, len(ins) + 1)),
        )

    def in_map(self, p, j: int) -> TwMorphism:
        """The morphism id_{c_j} -> p selecting the j-th input."""
        P = self.P
        ins, _ = P.profile(p)
        n = len(ins)
        rho = Perm(
            tuple([j] + list(range(1, j)) + list(range(j + 1, n + 1)))
        )
        root = P.act(p, rho)
        root_block = tuple(k for k in range(1, n + 1) if k != j)
        return TwMorphism(
            P.identity(ins[j - 1]),
            root,
            (P.identity(ins[j - 1]),),
            (root_block, (j,)),
        )

    def out_map(self, q) -> TwMorphism:
        """The morphism id_{c_0} -> q hitting the output."""
        P = self.P
        ins, out = P.profile(q)
        n = len(ins)
        return TwMorphism(
            P.identity(out),
            P.identity(out),
            (q,),
            ((), tuple(range(1, n + 1))),
        )

    # -- composition --------------------------------------------------------

    def compose(self, g: TwMorphism, f: TwMorphism) -> TwMorphism:
        """The composite g after f (source of g is the target of f)."""
        P = self.P
        m = len(f.uppers)
        new_uppers = []
        new_blocks = []
        for j in range(1, m + 1):
            hs = f.blocks[j]
            parts = [g.uppers[h - 1] for h in hs]
            u = P.graft(f.uppers[j - 1], parts)
            seq: list[int] = []
            for h in hs:
                seq.extend(g.blocks[h])
            if len(seq) >= 2:
                pi = sorting_perm(seq)
                if not pi.is_identity():
                    u = P.act(u, pi)
            new_uppers.append(u)
            new_blocks.append(tuple(sorted(seq)))
        # root marking
        gs = f.blocks[0]
        src_colour = P.inputs(f.q0)[0]
        ext = P.graft(
            f.q0,
            [P.identity(src_colour)] + [g.uppers[h - 1] for h in gs],
        )
        root = P.compose(g.q0, 1, ext)
        seq0: list[int] = []
        for h in gs:
            seq0.extend(g.blocks[h])
        seq0.extend(g.blocks[0])
        if len(seq0) >= 2:
            pi0 = sorting_perm(seq0)
            if not pi0.is_identity():
                lifted = Perm(
                    tuple([1] + [1 + pi0(l) for l in range(1, len(seq0) + 1)])
                )
                root = P.act(root, lifted)
        return TwMorphism(
            f.source,
            root,
            tuple(new_uppers),
            (tuple(sorted(seq0)),) + tuple(new_blocks),
        )

    # -- hom enumeration ----------------------------------------------------

    def objects(self) -> list:
        return self.P.ops(self.bound)

    def hom(self, p, r) -> list[TwMorphism]:
        """All morphisms p -> r."""
        P = self.P
        ins_p, out_p = P.profile(p)
        ins_r, out_r = P.profile(r)
        n = len(ins_p)
        N = len(ins_r)
        ops = P.ops(self.bound)
        roots = [
            q0
            for q0 in ops
            if P.arity(q0) >= 1
            and P.inputs(q0)[0] == out_p
            and P.output(q0) == out_r
            and P.arity(q0) - 1 <= N
        ]
        uppers_by_colour: dict[Colour, list] = {}
        for u in ops:
            uppers_by_colour.setdefault(P.output(u), []).append(u)
        out: list[TwMorphism] = []
        for q0 in roots:
            k0 = P.arity(q0)
            budget = N - (k0 - 1)
            for uppers in _colour_tuples(
                uppers_by_colour, ins_p, budget, P
            ):
                sizes = [k0 - 1] + [P.arity(u) for u in uppers]
                for blocks in _sorted_partitions(N, sizes):
                    cand = TwMorphism(p, q0, tuple(uppers), blocks)
                    try:
                        if self.target(cand) == r:
                            out.append(cand)
                    except (ValueError, KeyError, BoundExhausted):
                        continue
        return sorted(out, key=repr)

    def truncation(self, objects: Sequence, name: str | None = None) -> CatTrunc:
        cat = CatTrunc(name or self.name)
        for x in objects:
            cat.add_object(x)
            ident = self.identity(x)
            cat.add_morphism(ident, x, x)
            cat.identities[x] = ident
        for x in objects:
            for y in objects:
                for f in self.hom(x, y):
                    cat.add_morphism(f, x, y)
        # close under composition until every composable pair is
        # tabulated; composites may carry markings beyond the bound,
        # and their own composites must be tabulated as well
        while True:
            added = False
            morphs = cat.morphisms()
            for f in morphs:
                for g in morphs:
                    if cat.source[g] != cat.target[f]:
                        continue
                    if (g, f) in cat.composition:
                        continue
                    gf = self.compose(g, f)
                    cat.set_compose(g, f, gf)
                    if gf not in cat.hom(cat.source[f], cat.target[g]):
                        cat.add_morphism(gf, cat.source[f], cat.target[g])
                        added = True
            if not added:
                break
        return cat


def _colour_tuples(
    by_colour: dict, colours: Sequence[Colour], budget: int, P: OperadHandle
) -> Iterator[tuple]:
    """Tuples of operations with prescribed output colours and total
    arity equal to budget."""

    def go(idx: int, remaining: int, acc: list) -> Iterator[tuple]:
        if idx == len(colours):
            if remaining == 0:
                yield tuple(acc)
            return
        for u in by_colour.get(colours[idx], []):
            a = P.arity(u)
            if a > remaining:
                continue
            acc.append(u)
            yield from go(idx + 1, remaining - a, acc)
            acc.pop()

    yield from go(0, budget, [])


def _sorted_partitions(
    N: int, sizes: Sequence[int]
) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Partitions of {1..N} into blocks of the given sizes, each block
    sorted."""
    universe = list(range(1, N + 1))

    def go(idx: int, remaining: tuple[int, ...]) -> Iterator[tuple]:
        if idx == len(sizes):
            if not remaining:
                yield ()
            return
        for chosen in itertools.combinations(remaining, sizes[idx]):
            rest = tuple(x for x in remaining if x not in chosen)
            for tail in go(idx + 1, rest):
                yield (tuple(chosen),) + tail

    yield from go(0, tuple(universe))


# ---------------------------------------------------------------------------
# Simple operad handles used by the classical comparisons
# ---------------------------------------------------------------------------


class TerminalOperad(OperadHandle):
    """One operation per arity, trivial action: the operad of
    commutative monoids."""

    def __init__(self, name: str = "uCom") -> None:
        self.name = name
        self.colour = 0

    def colours(self, bound: SizeBound) -> list[Colour]:
        return [self.colour]

    def ops(self, bound: SizeBound) -> list:
        return [("e", n) for n in range(0, bound.max_arity + 1)]

    def profile(self, p):
        return ((self.colour,) * p[1], self.colour)

    def compose(self, p, i, q):
        if not 1 <= i <= p[1]:
            raise ValueError("slot out of range")
        return ("e", p[1] + q[1] - 1)

    def act(self, p, sigma: Perm):
        return p

    def identity(self, c):
        return ("e", 1)

    def grading(self, p) -> int:
        return p[1] - 1


class TerminalCyclicOperad(OperadHandle):
    """The two-colour operad of commutative monoids with an invariant
    pairing: lines ("l", n) of colour 1 and circles ("c", n) of colour
    -1, one of each arity, with trivial action."""

    def __init__(self, name: str = "uCom_c") -> None:
        self.name = name

    def colours(self, bound: SizeBound) -> list[Colour]:
        return [-1, 1]

    def ops(self, bound: SizeBound) -> list:
        out = [("l", n) for n in range(0, bound.max_arity + 1)]
        out += [("c", n) for n in range(0, bound.max_arity + 1)]
        out.append(("idc",))
        return out

    def profile(self, p):
        if p[0] == "l":
            return ((1,) * p[1], 1)
        if p[0] == "c":
            return ((1,) * p[1], -1)
        return ((-1,), -1)

    def compose(self, p, i, q):
        ins, _ = self.profile(p)
        if not 1 <= i <= len(ins):
            raise ValueError("slot out of range")
        if ins[i - 1] != self.profile(q)[1]:
            raise ValueError("colour mismatch")
        if p[0] == "idc":
            return q
        if q[0] == "idc":
            return p
        kind = p[0]
        return (kind, p[1] + q[1] - 1)

    def act(self, p, sigma: Perm):
        return p

    def identity(self, c):
        return ("l", 1) if c == 1 else ("idc",)

    def grading(self, p) -> int:
        if p[0] == "idc":
            return 0
        if p[0] == "l":
            return p[1] - 1
        return p[1] + 1


# ---------------------------------------------------------------------------
# The planar twisted arrow category of the associative operad
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanarMorphism:
    """A morphism n -> N: root arity k0 with the source in slot s, and
    one upper arity per source input."""

    source: int
    s: int
    k0: int
    uppers: tuple[int, ...]


class PlanarTwistedCategory:
    """The twisted arrow category of the planar associative operad;
    isomorphic to the simplex category."""

    name = "Tw(uAs_planar)"

    def target(self, f: PlanarMorphism) -> int:
        return f.k0 - 1 + sum(f.uppers)

    def identity(self, n: int) -> PlanarMorphism:
        return PlanarMorphism(n, 1, 1, (1,) * n)

    def hom(self, n: int, N: int) -> list[PlanarMorphism]:
        out = []
        for k0 in range(1, N + 2):
            rest = N - (k0 - 1)
            if rest < 0:
                continue
            for uppers in _compositions(rest, n):
                for s in range(1, k0 + 1):
                    out.append(PlanarMorphism(n, s, k0, uppers))
        return out

    def compose(self, g: PlanarMorphism, f: PlanarMorphism) -> PlanarMorphism:
        if g.source != self.target(f):
            raise ValueError("not composable")
        # the target inputs of f appear in planar order: the f.s - 1
        # root slots before the source, then the inputs of the uppers,
        # then the remaining root slots; each consumes one upper of g
        pre = g.uppers[: f.s - 1]
        pos = f.s - 1
        new_uppers = []
        for size in f.uppers:
            new_uppers.append(sum(g.uppers[pos : pos + size]))
            pos += size
        post = g.uppers[pos:]
        new_k0 = g.k0 + sum(pre) + sum(post)
        new_s = g.s + sum(pre)
        return PlanarMorphism(f.source, new_s, new_k0, tuple(new_uppers))

    def to_monotone(self, f: PlanarMorphism) -> tuple[int, ...]:
        """The dictionary to a monotone map [n] -> [N]: f(0) = s - 1 and
        each further value adds the corresponding upper arity."""
        values = [f.s - 1]
        for m_j in f.uppers:
            values.append(values[-1] + m_j)
        return tuple(values)

    def from_monotone(self, n: int, N: int, values: Sequence[int]) -> PlanarMorphism:
        uppers = tuple(values[j + 1] - values[j] for j in range(n))
        s = values[0] + 1
        k0 = N - sum(uppers) + 1
        return PlanarMorphism(n, s, k0, uppers)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Weak compositions of total into parts non-negative integers."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# Evaluation functor
# ---------------------------------------------------------------------------


def ev_object(A: Algebra, p, args: Sequence) -> Any:
    """Objects of the twisted arrow category over the algebra of
    elements: evaluate the operation on its inputs."""
    return A.eval(p, tuple(args))


def ev_source_args(A: Algebra, f: TwMorphism, args: Sequence) -> tuple:
    """Given target input elements for a morphism of Tw(P), the induced
    source input elements: each upper marking evaluates the target
    inputs listed in its block."""
    return tuple(
        A.eval(u, tuple(args[h - 1] for h in f.blocks[j]))
        for j, u in enumerate(f.uppers, start=1)
    )


def ev_morphism(
    tw: TwistedArrowCategory,
    A: Algebra,
    engine: ClassEngine,
    f: TwMorphism,
    args: Sequence,
) -> FlatPair:
    """Image of a morphism of Tw(P), over a tuple of target input
    elements, in the twisted arrow category of the algebra: the class
    of the root marking applied to the marked source element and the
    plain evaluations dictated by the root block."""
    src_args = tuple(
        A.eval(u, tuple(args[h - 1] for h in f.blocks[j]))
        for j, u in enumerate(f.uppers, start=1)
    )
    a_src = A.eval(f.source, src_args)
    slots = (("m", 1, a_src),) + tuple(("e", args[h - 1]) for h in f.blocks[0])
    return engine.to_class(f.q0, slots)


def save_truncation(cat: CatTrunc, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(cat.to_json(), fh, indent=2)
