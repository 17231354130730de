"""Finite presheaves over twisted-arrow truncations.

This module implements set-valued presheaves on finite truncations of
twisted arrow categories, together with the verification batteries
built on them: petal maps, the elementary-object comma categories, the
Segal condition in both its right-Kan-extension and its sheaf form,
the 2-Segal (pullback) condition with the reconstruction of an operad
from a 2-Segal presheaf, palatability of graded operads, and the
cyclic-nerve presheaf of a one-object category with a trace map.

Limits are computed as equalizer subsets of finite products, so every
check is elementary and auditable at the chosen bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, Sequence

from .core import Colour, OperadHandle, Perm, Report, SizeBound
from .algebras import Algebra
from .factor import is_inert, is_lower, pushout_upper_lower
from .twisted import (
    CatTrunc,
    TwistedArrowCategory,
    TwMorphism,
    ev_source_args,
)

Section = Hashable


# ---------------------------------------------------------------------------
# Presheaves
# ---------------------------------------------------------------------------


class FinPresheaf:
    """A finite presheaf on a category truncation.

    ``sections[x]`` is the finite set of sections over the object x and
    ``restrictions[f]`` the function (as a dict) from the sections over
    the target of f to the sections over its source.  Functoriality is
    verified at construction time against the tabulated compositions of
    the base truncation.
    """

    def __init__(
        self,
        base: CatTrunc,
        sections: dict[Any, tuple],
        restrictions: dict[Any, dict],
        name: str = "presheaf",
        cat: TwistedArrowCategory | None = None,
        check: bool = True,
    ) -> None:
        self.base = base
        self.sections = {x: tuple(v) for x, v in sections.items()}
        self.restrictions = dict(restrictions)
        self.name = name
        self.cat = cat
        if check:
            report = self.check_functoriality()
            if not report.ok:
                raise ValueError(
                    f"presheaf data not functorial: {report.summary()}"
                )

    def restrict(self, f) -> dict:
        return self.restrictions[f]

    def check_functoriality(self) -> Report:
        report = Report(f"presheaf functoriality: {self.name}")
        base = self.base
        for x in base.objects:
            if x not in self.sections:
                report.add("missing-sections", object=x)
        for f, x in base.source.items():
            y = base.target[f]
            rf = self.restrictions.get(f)
            if rf is None:
                report.add("missing-restriction", f=f)
                continue
            if set(rf) != set(self.sections.get(y, ())):
                report.add("restriction-domain", f=f)
                continue
            if not set(rf.values()) <= set(self.sections.get(x, ())):
                report.add("restriction-codomain", f=f)
            report.checked += 1
        for x, ident in base.identities.items():
            rf = self.restrictions.get(ident, {})
            if any(rf[s] != s for s in self.sections.get(x, ())):
                report.add("identity-restriction", object=x)
            report.checked += 1
        for (g, f), gf in base.composition.items():
            rg = self.restrictions.get(g)
            rf = self.restrictions.get(f)
            rgf = self.restrictions.get(gf)
            if rg is None or rf is None or rgf is None:
                continue
            for s in self.sections.get(base.target[g], ()):
                if rf[rg[s]] != rgf[s]:
                    report.add("contravariance", g=g, f=f, section=s)
                    break
            report.checked += 1
        return report

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        obj_id = {x: f"o{i}" for i, x in enumerate(self.base.objects)}
        mor_id = {f: f"m{i}" for i, f in enumerate(self.base.morphisms())}
        return {
            "sections": {
                obj_id[x]: [repr(s) for s in v]
                for x, v in self.sections.items()
            },
            "restrictions": {
                mor_id[f]: [[repr(a), repr(b)] for a, b in r.items()]
                for f, r in self.restrictions.items()
            },
        }

    @staticmethod
    def from_json(
        base: CatTrunc,
        data: dict,
        cat: TwistedArrowCategory | None = None,
        name: str = "presheaf",
    ) -> "FinPresheaf":
        obj_of = {f"o{i}": x for i, x in enumerate(base.objects)}
        mor_of = {f"m{i}": f for i, f in enumerate(base.morphisms())}
        sections = {
            obj_of[k]: tuple(v) for k, v in data["sections"].items()
        }
        restrictions = {
            mor_of[k]: {a: b for a, b in pairs}
            for k, pairs in data["restrictions"].items()
        }
        return FinPresheaf(base, sections, restrictions, name, cat)


# ---------------------------------------------------------------------------
# Petal and input maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PetalMap:
    """A morphism into t from an operation of grading -1."""

    source: Any
    target: Any
    morphism: TwMorphism


def grading_function(P: OperadHandle, grading: str) -> Callable:
    """The named grading: the registered one or arity minus one."""
    if grading == "psi":
        return P.grading
    if grading == "arity":
        return lambda p: P.arity(p) - 1
    raise ValueError(f"unknown grading {grading!r}")


def _marking_cat(P: OperadHandle, bound: SizeBound) -> TwistedArrowCategory:
    """A category over the same operad with room for the markings of
    morphisms between operations at the given bound (a root marking can
    exceed the bound of its source and target by one composition step)."""
    big = SizeBound(
        max_arity=bound.max_arity + 1,
        max_grading=bound.max_grading + 2,
        max_expr_nodes=bound.max_expr_nodes + 1,
    )
    return TwistedArrowCategory(P, big)


def petal_sources(
    cat: TwistedArrowCategory, grading: str = "psi"
) -> list:
    grade = grading_function(cat.P, grading)
    return [q for q in cat.P.ops(cat.bound) if grade(q) == -1]


def petal_maps(
    cat: TwistedArrowCategory, t, grading: str = "psi"
) -> list[PetalMap]:
    """All morphisms to t from operations of grading -1 at bound."""
    out = []
    for q in petal_sources(cat, grading):
        for f in cat.hom(q, t):
            out.append(PetalMap(q, t, f))
    return out


def input_maps(cat: TwistedArrowCategory, t) -> list[TwMorphism]:
    return [
        cat.in_map(t, j) for j in range(1, cat.P.arity(t) + 1)
    ]


def identity_operations(cat: TwistedArrowCategory) -> list:
    P = cat.P
    out = []
    for c in P.colours(cat.bound):
        try:
            out.append(P.identity(c))
        except (ValueError, KeyError):
            continue
    return out


def elementary_objects(
    cat: TwistedArrowCategory, grading: str = "psi"
) -> list:
    """Identity operations and operations of grading -1 at bound."""
    out = list(identity_operations(cat))
    for q in petal_sources(cat, grading):
        if q not in out:
            out.append(q)
    return out


def _sub_predicate(
    cat: TwistedArrowCategory, base_sub: str
) -> Callable[[TwMorphism], bool]:
    """Membership test for the chosen wide subcategory."""
    if base_sub == "Lower":
        return lambda f: is_lower(cat, f)
    if base_sub == "LowerPerm":
        # lower morphisms composed with permutation isomorphisms:
        # every upper marking is an identity, interleaving arbitrary
        P = cat.P
        return lambda f: all(
            u == P.identity(P.output(u)) for u in f.uppers
        )
    if base_sub == "Inert":
        return lambda f: is_inert(cat, f)
    raise ValueError(f"unknown subcategory {base_sub!r}")


# ---------------------------------------------------------------------------
# Segal condition
# ---------------------------------------------------------------------------


def el_over(
    cat: TwistedArrowCategory,
    base: CatTrunc,
    p,
    sub_pred: Callable,
    grading: str = "psi",
):
    """The comma category of elementary objects over p.

    Returns (objects, arrows, missing): objects are morphisms e -> p
    from elementary objects within the chosen subcategory, arrows are
    triples (g, f1, f2) with f1 = f2 . g, and missing lists elementary
    objects of the ambient category that admit maps to p but are
    absent from the truncation.
    """
    els = elementary_objects(cat, grading)
    probe = _marking_cat(cat.P, cat.bound)
    objects: list[TwMorphism] = []
    missing: list = []
    for e in els:
        if e not in base.objects:
            if probe.hom(e, p):
                missing.append(e)
            continue
        objects.extend(f for f in base.hom(e, p) if sub_pred(f))
    objects.sort(key=repr)
    arrows = []
    for f1 in objects:
        for f2 in objects:
            e1, e2 = f1.source, f2.source
            for g in base.hom(e1, e2):
                if sub_pred(g) and base.compose(f2, g) == f1:
                    arrows.append((g, f1, f2))
    return objects, arrows, missing


def _limit(
    X: FinPresheaf, objects: Sequence[TwMorphism], arrows
) -> list[tuple]:
    """Equalizer subset of the product of sections over the comma
    category: tuples aligned with ``objects`` compatible with every
    connecting arrow."""
    index = {f: i for i, f in enumerate(objects)}
    pools = [X.sections[f.source] for f in objects]
    out = []
    for tup in itertools.product(*pools):
        ok = True
        for g, f1, f2 in arrows:
            if X.restrictions[g][tup[index[f2]]] != tup[index[f1]]:
                ok = False
                break
        if ok:
            out.append(tup)
    return out


def segal_check(
    X: FinPresheaf,
    variant: str = "kan",
    base_sub: str = "Lower",
    grading: str = "psi",
) -> Report:
    """Per-object Segal verification of a presheaf.

    kan: the canonical map from X(p) to the limit over the comma
    category of elementary objects is bijective.  sheaf: the family of
    all input and petal maps of p satisfies the sheaf axiom.
    """
    cat = X.cat
    if cat is None:
        raise ValueError("presheaf must carry its ambient category")
    report = Report(
        f"segal({variant},{base_sub}): {X.name}"
    )
    sub_pred = _sub_predicate(cat, base_sub)
    for p in X.base.objects:
        if variant == "kan":
            objects, arrows, missing = el_over(
                cat, X.base, p, sub_pred, grading
            )
            if missing:
                report.note(
                    f"skipped {p!r}: elementary objects missing from "
                    f"the truncation: {missing!r}"
                )
                continue
            lim = _limit(X, objects, arrows)
            image = {}
            ok = True
            for s in X.sections[p]:
                val = tuple(X.restrictions[f][s] for f in objects)
                if val in image:
                    report.add(
                        "not-injective", object=p, sections=(image[val], s)
                    )
                    ok = False
                image[val] = s
            if ok and set(image) != set(lim):
                report.add(
                    "not-surjective",
                    object=p,
                    size=len(image),
                    limit=len(lim),
                )
            report.checked += 1
        elif variant == "sheaf":
            _sheaf_axiom(X, p, sub_pred, grading, report)
        else:
            raise ValueError(f"unknown variant {variant!r}")
    return report


def _sheaf_axiom(
    X: FinPresheaf,
    p,
    sub_pred: Callable,
    grading: str,
    report: Report,
) -> None:
    """Sheaf axiom for the covering family of all input and petal maps
    of p, with compatibility tested against the truncation."""
    cat = X.cat
    base = X.base
    grade = grading_function(cat.P, grading)
    probe = _marking_cat(cat.P, cat.bound)
    cover: list[TwMorphism] = list(input_maps(cat, p))
    missing: list = []
    for q in [e for e in petal_sources(probe, grading)]:
        if q not in base.objects:
            if probe.hom(q, p) and q not in missing:
                missing.append(q)
            continue
        if grade(q) == -1:
            cover.extend(base.hom(q, p))
    for f in cover:
        if f.source not in base.objects:
            if f.source not in missing:
                missing.append(f.source)
    if missing:
        report.note(
            f"skipped {p!r}: covering sources missing from the "
            f"truncation: {missing!r}"
        )
        return
    # relation pairs within the truncation
    relations = []
    for i, fi in enumerate(cover):
        for j, fj in enumerate(cover):
            for v in base.objects:
                for g in base.hom(v, fi.source):
                    if not sub_pred(g):
                        continue
                    left = base.compose(fi, g)
                    for h in base.hom(v, fj.source):
                        if not sub_pred(h):
                            continue
                        if left == base.compose(fj, h):
                            relations.append((i, g, j, h))
    pools = [X.sections[f.source] for f in cover]
    for family in itertools.product(*pools):
        compatible = all(
            X.restrictions[g][family[i]] == X.restrictions[h][family[j]]
            for i, g, j, h in relations
        )
        if not compatible:
            continue
        glue = [
            s
            for s in X.sections[p]
            if all(
                X.restrictions[f][s] == family[i]
                for i, f in enumerate(cover)
            )
        ]
        if len(glue) != 1:
            report.add(
                "sheaf-axiom",
                object=p,
                family=family,
                amalgamations=len(glue),
            )
    report.checked += 1


# ---------------------------------------------------------------------------
# Algebras as single-object Segal presheaves
# ---------------------------------------------------------------------------


def _identity_set(cat: TwistedArrowCategory) -> set:
    return set(identity_operations(cat))


def presheaf_from_algebra(
    A: Algebra, cat: TwistedArrowCategory, base: CatTrunc
) -> FinPresheaf:
    """The single-object Segal presheaf of an algebra.

    The sections over p are the tuples of inputs of p (over identity
    operations the bare carrier elements), and a morphism restricts a
    tuple by evaluating each upper marking on the entries listed in
    its block.
    """
    P = cat.P
    ids = _identity_set(cat)

    def wrap(p, args: tuple):
        return args[0] if p in ids else args

    sections: dict[Any, tuple] = {}
    for p in base.objects:
        ins, _ = P.profile(p)
        pools = [A.elements(c) for c in ins]
        sections[p] = tuple(
            wrap(p, tup) for tup in itertools.product(*pools)
        )
    restrictions: dict[Any, dict] = {}
    for f in base.morphisms():
        r = base.target[f]
        rmap = {}
        for s in sections[r]:
            args = (s,) if r in ids else s
            src = ev_source_args(A, f, args)
            rmap[s] = wrap(f.source, src)
        restrictions[f] = rmap
    return FinPresheaf(
        base,
        sections,
        restrictions,
        name=f"presheaf({A.name})",
        cat=cat,
    )


def algebra_from_presheaf(
    X: FinPresheaf, name: str | None = None
) -> Algebra:
    """The algebra of a single-object Segal presheaf: carriers are the
    sections over identity operations, structure maps invert the
    product of input restrictions and push along the output map."""
    cat = X.cat
    P = cat.P
    carrier = {}
    for c in P.colours(cat.bound):
        try:
            idc = P.identity(c)
        except (ValueError, KeyError):
            continue
        if idc in X.base.objects:
            carrier[c] = X.sections[idc]

    def interp(p, args: tuple):
        n = P.arity(p)
        matches = [
            s
            for s in X.sections[p]
            if all(
                X.restrictions[cat.in_map(p, j)][s] == args[j - 1]
                for j in range(1, n + 1)
            )
        ]
        if len(matches) != 1:
            raise ValueError(
                f"presheaf not single-object Segal at {p!r}: "
                f"{len(matches)} matches"
            )
        return X.restrictions[cat.out_map(p)][matches[0]]

    return Algebra(P, carrier, interp, name or f"algebra({X.name})")


def round_trip_check(
    A: Algebra, cat: TwistedArrowCategory, base: CatTrunc
) -> Report:
    """Elementwise identity of algebra -> presheaf -> algebra on the
    truncation, plus the Segal property of the intermediate presheaf."""
    report = Report(f"algebra round trip: {A.name}")
    X = presheaf_from_algebra(A, cat, base)
    B = algebra_from_presheaf(X)
    for c, elems in A.carrier.items():
        if tuple(B.carrier.get(c, ())) != tuple(elems):
            report.add("carrier-mismatch", colour=c)
    P = cat.P
    for p in base.objects:
        ins, _ = P.profile(p)
        for args in itertools.product(*(A.elements(c) for c in ins)):
            if A.eval(p, args) != B.eval(p, args):
                report.add("evaluation-mismatch", op=p, args=args)
            report.checked += 1
    seg = segal_check(X, variant="kan", base_sub="Lower")
    if not seg.ok:
        report.add("intermediate-not-segal", detail=seg.summary())
    report.checked += seg.checked
    return report


# ---------------------------------------------------------------------------
# 2-Segal presheaves and reconstruction
# ---------------------------------------------------------------------------


def partial_composition_square(
    cat: TwistedArrowCategory, p, i: int, q
) -> dict:
    """The pushout square of the i-th input map of p and the output map
    of q, with apex normalized to the partial composition (the raw
    pushout apex can differ from it by an input relabelling)."""
    square = pushout_upper_lower(
        cat, cat.out_map(q), cat.in_map(p, i)
    )
    P = cat.P
    r = P.compose(p, i, q)
    apex = square["apex"]
    if apex == r:
        return square
    n = P.arity(apex)
    from .core import all_perms

    for sigma in sorted(all_perms(n), key=lambda s: s.images):
        if P.act(apex, sigma) != r:
            continue
        iso = TwMorphism(
            r,
            P.identity(P.output(r)),
            tuple(P.identity(c) for c in P.inputs(r)),
            ((),) + tuple((sigma(k),) for k in range(1, n + 1)),
        )
        if cat.target(iso) != apex:
            continue
        inv = _invert_perm_iso(cat, iso, apex, r)
        return {
            "f": square["f"],
            "g": square["g"],
            "f_prime": cat.compose(inv, square["f_prime"]),
            "g_prime": cat.compose(inv, square["g_prime"]),
            "apex": r,
        }
    raise ValueError(
        f"pushout apex not an input relabelling of {p!r} o_{i} {q!r}"
    )


def _invert_perm_iso(cat: TwistedArrowCategory, iso: TwMorphism, a, b):
    """The inverse of a permutation isomorphism iso: b -> a, as the
    morphism a -> b with the inverse interleaving."""
    P = cat.P
    n = P.arity(a)
    seq = [blk[0] for blk in iso.blocks[1:]]
    inv = [0] * n
    for j, x in enumerate(seq, start=1):
        inv[x - 1] = j
    out = TwMorphism(
        a,
        P.identity(P.output(a)),
        tuple(P.identity(c) for c in P.inputs(a)),
        ((),) + tuple((inv[k - 1],) for k in range(1, n + 1)),
    )
    if cat.target(out) != b:
        raise ValueError("not a permutation isomorphism")
    return out


def two_segal_check(X: FinPresheaf) -> Report:
    """The pullback condition on every partial composition pushout that
    stays inside the truncation of X."""
    cat = X.cat
    P = cat.P
    report = Report(f"2-segal: {X.name}")
    objs = X.base.objects
    for p in objs:
        if P.arity(p) == 0:
            continue
        ins, _ = P.profile(p)
        for q in objs:
            for i in range(1, len(ins) + 1):
                if P.output(q) != ins[i - 1]:
                    continue
                try:
                    idc = P.identity(ins[i - 1])
                except (ValueError, KeyError):
                    continue
                if idc not in objs:
                    continue
                try:
                    square = partial_composition_square(cat, p, i, q)
                except (ValueError, KeyError):
                    report.note(f"no pushout for {p!r} o_{i} {q!r}")
                    continue
                apex = square["apex"]
                if apex not in objs:
                    report.note(
                        f"apex of {p!r} o_{i} {q!r} outside truncation"
                    )
                    continue
                rest_f = X.restrictions[square["f"]]
                rest_g = X.restrictions[square["g"]]
                rest_fp = X.restrictions[square["f_prime"]]
                rest_gp = X.restrictions[square["g_prime"]]
                fibre = {
                    (a, b)
                    for a in X.sections[p]
                    for b in X.sections[q]
                    if rest_g[a] == rest_f[b]
                }
                image = {}
                for s in X.sections[apex]:
                    val = (rest_fp[s], rest_gp[s])
                    if val in image:
                        report.add(
                            "pullback-not-injective",
                            p=p,
                            i=i,
                            q=q,
                            sections=(image[val], s),
                        )
                    image[val] = s
                if set(image) != fibre:
                    report.add(
                        "pullback-not-surjective",
                        p=p,
                        i=i,
                        q=q,
                        size=len(image),
                        fibre=len(fibre),
                    )
                report.checked += 1
    return report


class ReconstructedOperad(OperadHandle):
    """The coloured operad of a 2-Segal presheaf: colours are sections
    over identities, operations are sections over operations of the
    base, and partial composition inverts the canonical pullback
    bijection."""

    def __init__(self, X: FinPresheaf, name: str | None = None) -> None:
        self.X = X
        self.cat = X.cat
        self.name = name or f"operad({X.name})"
        self._ids = {}
        P = self.cat.P
        for c in P.colours(self.cat.bound):
            try:
                idc = P.identity(c)
            except (ValueError, KeyError):
                continue
            if idc in X.base.objects:
                self._ids[c] = idc

    def colours(self, bound: SizeBound) -> list[Colour]:
        return [
            (c, x)
            for c, idc in self._ids.items()
            for x in self.X.sections[idc]
        ]

    def ops(self, bound: SizeBound) -> list:
        return [
            (p, s)
            for p in self.X.base.objects
            for s in self.X.sections[p]
        ]

    def profile(self, op):
        p, s = op
        P = self.cat.P
        ins, out = P.profile(p)
        in_cols = tuple(
            (c, self.X.restrictions[self.cat.in_map(p, j)][s])
            for j, c in enumerate(ins, start=1)
        )
        out_col = (out, self.X.restrictions[self.cat.out_map(p)][s])
        return in_cols, out_col

    def compose(self, op1, i: int, op2):
        (p, s), (q, t) = op1, op2
        square = partial_composition_square(self.cat, p, i, q)
        apex = square["apex"]
        if apex not in self.X.base.objects:
            raise ValueError("composite outside the truncation")
        rest_fp = self.X.restrictions[square["f_prime"]]
        rest_gp = self.X.restrictions[square["g_prime"]]
        matches = [
            u
            for u in self.X.sections[apex]
            if rest_fp[u] == s and rest_gp[u] == t
        ]
        if len(matches) != 1:
            raise ValueError(
                f"pullback not bijective over {p!r} o_{i} {q!r}"
            )
        return (apex, matches[0])

    def act(self, op, sigma: Perm):
        p, s = op
        P = self.cat.P
        p2 = P.act(p, sigma)
        if p2 not in self.X.base.objects:
            raise ValueError("permuted operation outside the truncation")
        n = P.arity(p)
        iso = TwMorphism(
            p2,
            P.identity(P.output(p2)),
            tuple(P.identity(c) for c in P.inputs(p2)),
            ((),) + tuple((sigma(k),) for k in range(1, n + 1)),
        )
        if self.cat.target(iso) != p:
            raise ValueError("permutation isomorphism mismatch")
        return (p2, self.X.restrictions[iso][s])

    def identity(self, colour):
        c, x = colour
        return (self._ids[c], x)

    def grading(self, op) -> int:
        return self.cat.P.grading(op[0])


def operad_from_2segal(X: FinPresheaf) -> ReconstructedOperad:
    return ReconstructedOperad(X)


# ---------------------------------------------------------------------------
# Decomposition morphisms
# ---------------------------------------------------------------------------


class AlgebraElementsOperad(OperadHandle):
    """The operad of elements of an algebra.

    Colours are pairs of a colour and a carrier element; operations
    over p are the input tuples of p; composition splices tuples when
    the evaluation of the inner factor matches the selected entry.
    The first projection is a decomposition morphism onto the base
    operad.
    """

    def __init__(
        self, P: OperadHandle, A: Algebra, name: str | None = None
    ) -> None:
        self.P = P
        self.A = A
        self.name = name or f"elements({A.name})"

    def colours(self, bound: SizeBound) -> list[Colour]:
        return [
            (c, a)
            for c in self.P.colours(bound)
            for a in self.A.elements(c)
        ]

    def ops(self, bound: SizeBound) -> list:
        out = []
        for p in self.P.ops(bound):
            ins, _ = self.P.profile(p)
            for args in itertools.product(
                *(self.A.elements(c) for c in ins)
            ):
                out.append((p, args))
        return out

    def profile(self, op):
        p, args = op
        ins, out = self.P.profile(p)
        in_cols = tuple(
            (c, args[j]) for j, c in enumerate(ins)
        )
        return in_cols, (out, self.A.eval(p, args))

    def compose(self, op1, i: int, op2):
        (p, s), (q, t) = op1, op2
        if self.A.eval(q, t) != s[i - 1]:
            raise ValueError("element mismatch at the composition slot")
        return (self.P.compose(p, i, q), s[: i - 1] + t + s[i:])

    def act(self, op, sigma: Perm):
        p, s = op
        return (self.P.act(p, sigma), sigma.permute_tuple(s))

    def identity(self, colour):
        c, a = colour
        return (self.P.identity(c), (a,))

    def grading(self, op) -> int:
        return self.P.grading(op[0])

    def projection(self) -> Callable:
        return lambda z: z[0]

    def fibre(self, p) -> list:
        """All operations over p, for any p of the base operad."""
        ins, _ = self.P.profile(p)
        return [
            (p, args)
            for args in itertools.product(
                *(self.A.elements(c) for c in ins)
            )
        ]


def decomposition_morphism_check(
    F: Callable,
    P1: OperadHandle,
    P: OperadHandle,
    bound: SizeBound,
) -> bool:
    """Unique-lifting criterion for an operad morphism: over every
    partial composition downstairs there is exactly one partial
    composition upstairs with the prescribed images."""
    ops1 = P1.ops(bound)
    ops = P.ops(bound)
    by_image: dict[Any, list] = {}
    for z in ops1:
        by_image.setdefault(F(z), []).append(z)
    for p in ops:
        n = P.arity(p)
        for i in range(1, n + 1):
            for q in ops:
                if P.output(q) != P.inputs(p)[i - 1]:
                    continue
                try:
                    r = P.compose(p, i, q)
                except (ValueError, KeyError):
                    continue
                for z in by_image.get(r, []):
                    lifts = []
                    for x in by_image.get(p, []):
                        for y in by_image.get(q, []):
                            try:
                                if P1.compose(x, i, y) == z:
                                    lifts.append((x, y))
                            except (ValueError, KeyError):
                                continue
                    if len(lifts) != 1:
                        return False
    return True


def non_conduche_fixture():
    """A functor with a non-liftable factorization: the walking arrow
    mapped onto the idempotent monoid on one generator.

    Returns (F, source, target) with decomposition_morphism_check
    false: the idempotent factors as its own square, but the arrow
    upstairs only factors through identities.
    """
    from .core import TableOperad

    walking_arrow = TableOperad(
        "walking-arrow",
        profiles={
            "id_a": (("a",), "a"),
            "id_b": (("b",), "b"),
            "u": (("a",), "b"),
        },
        identities={"a": "id_a", "b": "id_b"},
        composition={},
    )
    idem = TableOperad(
        "idempotent-monoid",
        profiles={"id": (("c",), "c"), "e": (("c",), "c")},
        identities={"c": "id"},
        composition={("e", 1, "e"): "e"},
    )
    images = {"id_a": "id", "id_b": "id", "u": "e"}
    return (lambda z: images[z], walking_arrow, idem)


def presheaf_of_operad_morphism(
    F: Callable,
    P1: OperadHandle,
    cat: TwistedArrowCategory,
    base: CatTrunc,
    fibre: Callable | None = None,
    name: str | None = None,
) -> FinPresheaf:
    """The presheaf of an operad morphism into the operad of cat: the
    sections over p are the operations over p, restricted along a
    morphism by lifting it with prescribed target.

    ``fibre(p)`` must list the operations over p for every operation p
    appearing as an object or a marking of the truncation (markings of
    tabulated composites can exceed the object bound, so a bounded
    enumeration of the source operad is not enough in general).  It
    defaults to grouping the bounded enumeration by image.
    """
    P = cat.P
    if fibre is None:
        by_image: dict[Any, list] = {}
        for z in P1.ops(cat.bound):
            by_image.setdefault(F(z), []).append(z)
        fibre = lambda p: by_image.get(p, [])
    sections = {p: tuple(fibre(p)) for p in base.objects}
    restrictions: dict[Any, dict] = {}
    for f in base.morphisms():
        r = base.target[f]
        rmap = {}
        for z in sections[r]:
            rmap[z] = _lift_source(F, P1, cat, f, z, fibre)
        restrictions[f] = rmap
    return FinPresheaf(
        base,
        sections,
        restrictions,
        name or f"presheaf({P1.name} over {P.name})",
        cat=cat,
    )


def _lift_source(
    F: Callable,
    P1: OperadHandle,
    cat: TwistedArrowCategory,
    f: TwMorphism,
    z,
    fibre: Callable,
):
    """The source of the unique lift of f with target z."""
    found = []
    for src in fibre(f.source):
        for q0 in fibre(f.q0):
            for uppers in itertools.product(
                *(fibre(u) for u in f.uppers)
            ):
                cand = TwMorphism(src, q0, tuple(uppers), f.blocks)
                try:
                    target = _tw_target(P1, cand)
                except (ValueError, KeyError):
                    continue
                if target == z:
                    found.append(src)
    sources = sorted(set(found), key=repr)
    if len(sources) != 1 or len(found) != 1:
        raise ValueError(
            f"morphism has {len(found)} lifts with target {z!r}"
        )
    return sources[0]


def _tw_target(P1: OperadHandle, f: TwMorphism):
    """Target of a twisted-arrow morphism over an arbitrary handle."""
    t1 = P1.graft(f.source, f.uppers)
    r0 = P1.compose(f.q0, 1, t1)
    seq: list[int] = []
    for j in range(1, len(f.uppers) + 1):
        seq.extend(f.blocks[j])
    seq.extend(f.blocks[0])
    n = len(seq)
    images = [0] * n
    for pos, g in enumerate(seq, start=1):
        images[g - 1] = pos
    return P1.act(r0, Perm(tuple(images)))


def reconstruction_identity_check(
    F: Callable,
    P1: OperadHandle,
    cat: TwistedArrowCategory,
    base: CatTrunc,
    fibre: Callable | None = None,
) -> Report:
    """Reconstructing an operad from the presheaf of a decomposition
    morphism returns the original operations, profiles and partial
    compositions (after the canonical relabelling of colours)."""
    report = Report(
        f"reconstruction identity: {P1.name} over {cat.P.name}"
    )
    X = presheaf_of_operad_morphism(F, P1, cat, base, fibre=fibre)
    Q = operad_from_2segal(X)
    two = two_segal_check(X)
    if not two.ok:
        report.add("presheaf-not-2-segal", detail=two.summary())
    report.checked += two.checked

    def colour_of(pair):
        # (c, z) with z an identity operation of P1
        _, z = pair
        ins1, _ = P1.profile(z)
        return ins1[0]

    for (p, z) in Q.ops(cat.bound):
        ins_q, out_q = Q.profile((p, z))
        ins1, out1 = P1.profile(z)
        if tuple(colour_of(c) for c in ins_q) != tuple(ins1) or colour_of(
            out_q
        ) != out1:
            report.add("profile-mismatch", op=z)
        report.checked += 1
    ops_by_obj: dict[Any, list] = {}
    for (p, z) in Q.ops(cat.bound):
        ops_by_obj.setdefault(p, []).append(z)
    P = cat.P
    for p, zs in ops_by_obj.items():
        n = P.arity(p)
        for i in range(1, n + 1):
            for q, ws in ops_by_obj.items():
                if P.output(q) != P.inputs(p)[i - 1]:
                    continue
                for z in zs:
                    for w in ws:
                        try:
                            apex, u = Q.compose((p, z), i, (q, w))
                        except ValueError:
                            continue
                        try:
                            direct = P1.compose(z, i, w)
                        except (ValueError, KeyError):
                            report.add(
                                "composite-unliftable", z=z, i=i, w=w
                            )
                            continue
                        if F(direct) != apex or direct != u:
                            report.add(
                                "composition-mismatch",
                                z=z,
                                i=i,
                                w=w,
                                got=u,
                                expected=direct,
                            )
                        report.checked += 1
    return report


# ---------------------------------------------------------------------------
# Palatability
# ---------------------------------------------------------------------------


def pl(X: FinPresheaf, grading: str = "psi") -> FinPresheaf:
    """The terminal presheaf with the same petals as X: the right Kan
    extension of the restriction of X to the operations of grading -1,
    computed pointwise as compatible tuples of petal sections."""
    cat = X.cat
    base = X.base
    grade = grading_function(cat.P, grading)
    petal_objs = [
        q for q in base.objects if grade(q) == -1
    ]
    petals: dict[Any, list[TwMorphism]] = {}
    for p in base.objects:
        ms = []
        for q in petal_objs:
            ms.extend(base.hom(q, p))
        petals[p] = sorted(ms, key=repr)
    arrows: dict[Any, list] = {}
    for p in base.objects:
        arrows[p] = []
        for f1 in petals[p]:
            for f2 in petals[p]:
                for g in base.hom(f1.source, f2.source):
                    if base.compose(f2, g) == f1:
                        arrows[p].append((g, f1, f2))
    sections: dict[Any, tuple] = {}
    for p in base.objects:
        index = {f: i for i, f in enumerate(petals[p])}
        pools = [X.sections[f.source] for f in petals[p]]
        good = []
        for tup in itertools.product(*pools):
            if all(
                X.restrictions[g][tup[index[f2]]] == tup[index[f1]]
                for g, f1, f2 in arrows[p]
            ):
                good.append(tup)
        sections[p] = tuple(good)
    restrictions: dict[Any, dict] = {}
    for h in base.morphisms():
        p, r = base.source[h], base.target[h]
        index_r = {f: i for i, f in enumerate(petals[r])}
        rmap = {}
        for y in sections[r]:
            rmap[y] = tuple(
                y[index_r[base.compose(h, f)]] for f in petals[p]
            )
        restrictions[h] = rmap
    return FinPresheaf(
        base,
        sections,
        restrictions,
        name=f"pl({X.name})",
        cat=cat,
    )


def strongly_palatable_check(
    P: OperadHandle,
    bound: SizeBound,
    grading: str = "psi",
    skip_identities: bool = True,
) -> Report:
    """For every composable pair, the petals of the composite against
    the pushout of the petals of the factors over the petals of the
    middle identity."""
    cat = _marking_cat(P, bound)
    report = Report(f"strongly palatable: {P.name} ({grading})")
    ops = P.ops(bound)
    op_set = set(ops)
    skipped = 0
    ids = _identity_set(cat)
    petal_cache: dict[Any, list[TwMorphism]] = {}

    def petals_of(t) -> list[TwMorphism]:
        if t not in petal_cache:
            petal_cache[t] = [
                pm.morphism for pm in petal_maps(cat, t, grading)
            ]
        return petal_cache[t]

    for p in ops:
        if skip_identities and p in ids:
            continue
        ins = P.inputs(p)
        for i in range(1, len(ins) + 1):
            c = ins[i - 1]
            try:
                idc = P.identity(c)
            except (ValueError, KeyError):
                continue
            for q in ops:
                if P.output(q) != c:
                    continue
                if skip_identities and q in ids:
                    continue
                try:
                    composite = P.compose(p, i, q)
                except (ValueError, KeyError):
                    continue
                if composite not in op_set:
                    skipped += 1
                    continue
                square = partial_composition_square(cat, p, i, q)
                apex = square["apex"]
                pp = petals_of(p)
                pq = petals_of(q)
                pc = petals_of(idc)
                pr = petals_of(apex)
                # pushout of pp <- pc -> pq
                nodes = [("p", f) for f in pp] + [("q", f) for f in pq]
                parent = {x: x for x in nodes}

                def find(x):
                    while parent[x] != x:
                        parent[x] = parent[parent[x]]
                        x = parent[x]
                    return x

                def union(a, b):
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[ra] = rb

                for x in pc:
                    lam = cat.compose(square["g"], x)
                    rho = cat.compose(square["f"], x)
                    union(("p", lam), ("q", rho))
                classes: dict[Any, list] = {}
                for node in nodes:
                    classes.setdefault(find(node), []).append(node)
                # induced map to the petals of the composite
                targets = {}
                well_defined = True
                for rep, members in classes.items():
                    imgs = set()
                    for side, f in members:
                        leg = (
                            square["f_prime"]
                            if side == "p"
                            else square["g_prime"]
                        )
                        imgs.add(cat.compose(leg, f))
                    if len(imgs) != 1:
                        well_defined = False
                    targets[rep] = imgs
                images = set().union(*targets.values()) if targets else set()
                injective = len(
                    [t for ts in targets.values() for t in ts]
                ) == len(images)
                surjective = images == set(pr)
                if not (well_defined and injective and surjective):
                    report.add(
                        "petal-pushout",
                        p=p,
                        i=i,
                        q=q,
                        composite=apex,
                        pushout_size=len(classes),
                        petal_count=len(pr),
                        missing=[t for t in pr if t not in images],
                    )
                report.checked += 1
    if skipped:
        report.note(f"skipped {skipped} pairs with composite beyond the bound")
    return report


def petals_factor_check(
    P: OperadHandle, bound: SizeBound, grading: str = "psi"
) -> Report:
    """Every petal map into an operation of non-zero arity factors
    through one of its input maps."""
    cat = _marking_cat(P, bound)
    report = Report(f"petals factor through inputs: {P.name}")
    for t in P.ops(bound):
        n = P.arity(t)
        if n == 0:
            continue
        ins = P.inputs(t)
        for pm in petal_maps(cat, t, grading):
            witnesses = []
            for j in range(1, n + 1):
                g = cat.in_map(t, j)
                try:
                    idc = P.identity(ins[j - 1])
                except (ValueError, KeyError):
                    continue
                for h in cat.hom(pm.source, idc):
                    if cat.compose(g, h) == pm.morphism:
                        witnesses.append((j, h))
            if not witnesses:
                report.add("unfactored-petal", target=t, petal=pm.morphism)
            report.checked += 1
    return report


# ---------------------------------------------------------------------------
# Cyclic nerve
# ---------------------------------------------------------------------------


def cyclic_nerve_check(
    elements: Sequence,
    unit,
    mul: Callable,
    trace: dict,
    cat: TwistedArrowCategory,
    base: CatTrunc,
) -> FinPresheaf:
    """The presheaf of a one-object category with a trace map over the
    twisted arrow category of oriented degree-2 graphs.

    ``elements`` with ``mul`` and ``unit`` form a monoid; ``trace``
    maps it to a set and must identify m(f,g) with m(g,f) (checked,
    ValueError otherwise).  Lines evaluate to ordered products, the
    loop closure of a line evaluates to the trace of the product.
    """
    for f in elements:
        for g in elements:
            if trace[mul(f, g)] != trace[mul(g, f)]:
                raise ValueError(
                    f"trace does not identify the two composition "
                    f"orders of {f!r} and {g!r}"
                )
    A = _trace_algebra(elements, unit, mul, trace, cat.P)
    return presheaf_from_algebra(A, cat, base)


def _trace_algebra(
    elements, unit, mul, trace, P: OperadHandle
) -> Algebra:
    from .graphs import EXC_EDGE, EXC_LOOP, graph_to_word

    trace_values = tuple(
        sorted({trace[x] for x in elements}, key=repr)
    )
    carrier = {1: tuple(elements), -1: trace_values}

    def interp(p, args: tuple):
        if p.special == EXC_EDGE:
            return unit
        if p.special == EXC_LOOP:
            return trace[unit]
        if p.degrees == (0,):
            return args[0]
        if not p.leaves and p.degrees:
            # a circle: multiply around the travel order and trace
            order = _circle_order(p)
            acc = args[order[0]]
            for v in order[1:]:
                acc = mul(acc, args[v])
            return trace[acc]
        word = graph_to_word(p)
        if not word:
            return unit
        acc = args[word[0][0] - 1]
        for j, _ in word[1:]:
            acc = mul(acc, args[j - 1])
        return acc

    return Algebra(P, carrier, interp, name="trace-monoid")


def _circle_order(p) -> list[int]:
    """Vertices of an oriented circle in travel order from vertex 0:
    leave through the second flag, enter the next vertex through its
    first flag."""
    order = [0]
    flag = (0, 1)
    while True:
        nxt = p.partner(flag)
        if nxt is None or nxt[0] == 0:
            break
        order.append(nxt[0])
        flag = (nxt[0], 1)
    return order


def cyclic_trace_check(
    X: FinPresheaf, trace: dict, mul: Callable
) -> Report:
    """The two restrictions from the two-vertex circle to the
    one-vertex circle, pushed to the vertex-less loop, agree, and
    compute the trace of the product in both orders."""
    from .graphs import BETA, NU, ID_MINUS1

    cat = X.cat
    report = Report(f"trace identification: {X.name}")
    if BETA not in X.base.objects or NU not in X.base.objects:
        report.add("missing-objects", needed=[BETA, NU])
        return report
    maps = X.base.hom(NU, BETA)
    if len(maps) < 2:
        report.add("missing-circle-maps", found=len(maps))
        return report
    out_nu = cat.out_map(NU)
    if ID_MINUS1 not in X.base.objects:
        report.add("missing-objects", needed=[ID_MINUS1])
        return report
    for s in X.sections[BETA]:
        f, g = s
        values = {
            X.restrictions[out_nu][X.restrictions[m][s]] for m in maps
        }
        if len(values) != 1:
            report.add("restriction-disagreement", section=s, values=values)
            continue
        value = next(iter(values))
        if value != trace[mul(f, g)] or value != trace[mul(g, f)]:
            report.add("trace-mismatch", section=s, value=value)
        report.checked += 1
    return report
