"""Factorization systems on twisted arrow category truncations.

Morphisms in canonical form split into wide subcategories according to
which markings are trivial (the root marking, the upper markings, the
leaf ordering) or according to the grading of the markings.  This module
provides the membership predicates, direct constructions of the
distinguished factorizations and pushouts, and brute-force verifiers for
strict, orthogonal and ternary factorization systems on materialized
category truncations.
"""

from __future__ import annotations

import itertools
from typing import Any, Callable, Iterable, Sequence

from .core import Perm, Report
from .twisted import CatTrunc, TwistedArrowCategory, TwMorphism

__all__ = [
    "leaf_sequence",
    "has_trivial_leaf_perm",
    "is_upper",
    "is_lower",
    "is_lower_prime",
    "is_perm_iso",
    "is_r_psi_minus1",
    "is_r_psi_ge0",
    "is_iso",
    "is_elementary_degeneracy",
    "morph_classes",
    "system_predicates",
    "factor",
    "factor_ternary",
    "terminal_lower_upper",
    "pushout_upper_lower",
    "pushout_universal_check",
    "verify_sfs",
    "verify_ofs",
    "verify_ternary",
    "class_compose",
    "closure_failures",
    "iso_matches_invertibility",
    "iso_objects_same_profile_check",
    "two_object_fixture",
    "five_object_fixture",
]


# ---------------------------------------------------------------------------
# Membership predicates on canonical morphism forms
# ---------------------------------------------------------------------------


def _is_trivial_marking(P, u) -> bool:
    """True when the marking is the identity operation of its colour."""
    try:
        return u == P.identity(P.output(u))
    except (ValueError, KeyError):
        return False


def leaf_sequence(f: TwMorphism) -> tuple[int, ...]:
    """Target input indices in the order the canonical form lists them:
    upper blocks left to right, then the root block."""
    seq: list[int] = []
    for j in range(1, len(f.uppers) + 1):
        seq.extend(f.blocks[j])
    seq.extend(f.blocks[0])
    return tuple(seq)


def has_trivial_leaf_perm(f: TwMorphism) -> bool:
    seq = leaf_sequence(f)
    return seq == tuple(range(1, len(seq) + 1))


def is_upper(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """The root marking is an identity operation."""
    return _is_trivial_marking(cat.P, f.q0)


def is_lower(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """All upper markings are identities and the target inputs above
    them appear in increasing order across the uppers."""
    P = cat.P
    if not all(_is_trivial_marking(P, u) for u in f.uppers):
        return False
    upper_seq: list[int] = []
    for j in range(1, len(f.uppers) + 1):
        upper_seq.extend(f.blocks[j])
    return upper_seq == sorted(upper_seq)


def is_lower_prime(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """Lower with the trivial ordering on all target inputs."""
    return is_lower(cat, f) and has_trivial_leaf_perm(f)


def is_perm_iso(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """All markings trivial: the morphism only reorders target inputs."""
    P = cat.P
    return _is_trivial_marking(P, f.q0) and all(
        _is_trivial_marking(P, u) for u in f.uppers
    )


def is_r_psi_minus1(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """Trivial input ordering and every marking an identity or an
    operation of grading -1."""
    P = cat.P
    if not has_trivial_leaf_perm(f):
        return False
    for u in (f.q0,) + f.uppers:
        if not (_is_trivial_marking(P, u) or P.grading(u) == -1):
            return False
    return True


def is_r_psi_ge0(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """Every marking has grading at least 0."""
    P = cat.P
    return all(P.grading(u) >= 0 for u in (f.q0,) + f.uppers)


def _invertible_in_arity_one(cat: TwistedArrowCategory, u) -> bool:
    P = cat.P
    if P.arity(u) != 1:
        return False
    if _is_trivial_marking(P, u):
        return True
    a, b = P.inputs(u)[0], P.output(u)
    for q in P.ops(cat.bound):
        if P.arity(q) != 1 or P.inputs(q)[0] != b or P.output(q) != a:
            continue
        try:
            if P.compose(u, 1, q) == P.identity(b) and P.compose(
                q, 1, u
            ) == P.identity(a):
                return True
        except ValueError:
            continue
    return False


def is_iso(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """All markings have arity 1, grading 0, and are invertible among
    the arity-1 operations."""
    P = cat.P
    for u in (f.q0,) + f.uppers:
        if P.arity(u) != 1 or P.grading(u) != 0:
            return False
        if not _invertible_in_arity_one(cat, u):
            return False
    return True


def is_inert(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """Membership in the right class of the orthogonal system generated
    by (Upper, Lower): the upper half of the factorization is
    invertible, i.e. every upper marking is an invertible arity-1
    operation of grading 0."""
    P = cat.P
    for u in f.uppers:
        if P.arity(u) != 1 or P.grading(u) != 0:
            return False
        if not _invertible_in_arity_one(cat, u):
            return False
    return True


def is_active(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """Membership in the left class of the orthogonal system generated
    by (Upper, Lower): the lower half of the factorization is
    invertible, i.e. the root marking is an invertible arity-1
    operation of grading 0."""
    P = cat.P
    u = f.q0
    return (
        P.arity(u) == 1
        and P.grading(u) == 0
        and _invertible_in_arity_one(cat, u)
    )


def is_elementary_degeneracy(cat: TwistedArrowCategory, f: TwMorphism) -> bool:
    """A grading-collapsing morphism with exactly one non-trivial
    marking."""
    P = cat.P
    if not is_r_psi_minus1(cat, f):
        return False
    nontrivial = [
        u for u in (f.q0,) + f.uppers if not _is_trivial_marking(P, u)
    ]
    return len(nontrivial) == 1


def morph_classes(cat: TwistedArrowCategory, f: TwMorphism) -> set[str]:
    """All named classes the morphism belongs to."""
    out = set()
    if is_upper(cat, f):
        out.add("Upper")
    if is_lower(cat, f):
        out.add("Lower")
    if is_lower_prime(cat, f):
        out.add("LowerPrime")
    if is_perm_iso(cat, f):
        out.add("Perm")
    if is_r_psi_minus1(cat, f):
        out.add("R_psi_minus1")
    if is_r_psi_ge0(cat, f):
        out.add("R_psi_ge0")
    if is_iso(cat, f):
        out.add("Iso")
    if is_active(cat, f):
        out.add("Active")
    if is_inert(cat, f):
        out.add("Inert")
    return out


def system_predicates(
    cat: TwistedArrowCategory, system: str
) -> tuple[Callable, Callable]:
    """(left, right) membership predicates of a named strict system."""
    if system == "UpperLower":
        return (lambda f: is_upper(cat, f), lambda f: is_lower(cat, f))
    if system == "PsiSystem":
        return (
            lambda f: is_r_psi_minus1(cat, f),
            lambda f: is_r_psi_ge0(cat, f),
        )
    raise ValueError(f"unknown system {system!r}")


# ---------------------------------------------------------------------------
# Factorization by search over a materialized truncation
# ---------------------------------------------------------------------------


def _factorizations(
    trunc: CatTrunc, f, left: Callable, right: Callable
) -> list[tuple[Any, Any]]:
    x, y = trunc.source[f], trunc.target[f]
    out = []
    for z in trunc.objects:
        for l in trunc.hom(x, z):
            if not left(l):
                continue
            for r in trunc.hom(z, y):
                if not right(r):
                    continue
                if trunc.composition.get((r, l)) == f:
                    out.append((l, r))
    return out


def factor(
    trunc: CatTrunc,
    f,
    system: str | tuple[Callable, Callable],
    cat: TwistedArrowCategory | None = None,
):
    """The unique (left, right) factorization of f in the given strict
    system; raises if it does not exist or is not unique."""
    if isinstance(system, str):
        if system == "Ternary":
            return factor_ternary(trunc, f, cat)
        if cat is None:
            raise ValueError("a category is needed to resolve a named system")
        left, right = system_predicates(cat, system)
    else:
        left, right = system
    found = _factorizations(trunc, f, left, right)
    if len(found) != 1:
        raise ValueError(
            f"expected exactly one factorization, found {len(found)}"
        )
    return found[0]


def factor_ternary(trunc: CatTrunc, f, cat: TwistedArrowCategory):
    """The unique r . m . l decomposition with l grading-collapsing,
    m upper of non-negative grading, r lower."""
    l1, r1 = factor(trunc, f, "PsiSystem", cat)
    m, r = factor(trunc, r1, "UpperLower", cat)
    return (l1, m, r)


# ---------------------------------------------------------------------------
# Canonical constructions
# ---------------------------------------------------------------------------


def terminal_lower_upper(
    cat: TwistedArrowCategory, f: TwMorphism
) -> tuple[TwMorphism, TwMorphism]:
    """The canonical factorization of f as a trivially-ordered lower
    morphism followed by an upper morphism.

    The lower part carries the root marking of f with the trivial input
    ordering; the upper part carries the upper markings of f followed by
    trivial markings for the root inputs, with the input ordering of f.
    """
    P = cat.P
    ins_p, out_p = P.profile(f.source)
    n = len(ins_p)
    k = len(f.blocks[0])
    lower = TwMorphism(
        f.source,
        f.q0,
        tuple(P.identity(c) for c in ins_p),
        (tuple(range(n + 1, n + k + 1)),)
        + tuple((j,) for j in range(1, n + 1)),
    )
    mid = cat.target(lower)
    ins_mid, out_mid = P.profile(mid)
    upper = TwMorphism(
        mid,
        P.identity(out_mid),
        f.uppers + tuple(P.identity(c) for c in ins_mid[n:]),
        ((),) + f.blocks[1:] + tuple((x,) for x in f.blocks[0]),
    )
    return lower, upper


def _perm_iso_from_sequence(
    cat: TwistedArrowCategory, source, seq: Sequence[int]
) -> TwMorphism:
    """The marking-free morphism sending input j of the source to target
    input seq[j-1]."""
    P = cat.P
    ins, out = P.profile(source)
    return TwMorphism(
        source,
        P.identity(out),
        tuple(P.identity(c) for c in ins),
        ((),) + tuple((seq[j],) for j in range(len(ins))),
    )


def pushout_upper_lower(
    cat: TwistedArrowCategory, f: TwMorphism, g: TwMorphism
) -> dict:
    """The pushout square of an upper morphism f and a lower morphism g
    with common source.

    Returns {"f": f, "g": g, "f_prime": C -> D upper, "g_prime": B -> D
    lower, "apex": D} with f_prime . g == g_prime . f, and f_prime . g a
    terminal lower-upper factorization.
    """
    P = cat.P
    if not is_upper(cat, f):
        raise ValueError("first morphism must be upper")
    if not is_lower(cat, g):
        raise ValueError("second morphism must be lower")
    if f.source != g.source:
        raise ValueError("the two morphisms need a common source")
    if not has_trivial_leaf_perm(g):
        # peel off the input reordering of g and restore it afterwards
        g0 = TwMorphism(
            g.source,
            g.q0,
            g.uppers,
            (
                tuple(
                    range(
                        len(g.uppers) + 1,
                        len(g.uppers) + len(g.blocks[0]) + 1,
                    )
                ),
            )
            + tuple((j,) for j in range(1, len(g.uppers) + 1)),
        )
        seq = leaf_sequence(g)
        inv = [0] * len(seq)
        for j, x in enumerate(seq, start=1):
            inv[x - 1] = j
        base = pushout_upper_lower(cat, f, g0)
        iso_inv = _perm_iso_from_sequence(cat, cat.target(g), inv)
        f_prime = cat.compose(base["f_prime"], iso_inv)
        return {
            "f": f,
            "g": g,
            "f_prime": f_prime,
            "g_prime": base["g_prime"],
            "apex": base["apex"],
        }
    ins_a, out_a = P.profile(f.source)
    n = len(ins_a)
    k = len(g.blocks[0])
    c = cat.target(g)
    ins_c, out_c = P.profile(c)
    b = cat.target(f)
    ins_b, out_b = P.profile(b)
    big_n = len(ins_b)
    f_prime = TwMorphism(
        c,
        P.identity(out_c),
        f.uppers + tuple(P.identity(cc) for cc in ins_c[n:]),
        ((),)
        + f.blocks[1:]
        + tuple((big_n + i,) for i in range(1, k + 1)),
    )
    g_prime = TwMorphism(
        b,
        g.q0,
        tuple(P.identity(cc) for cc in ins_b),
        (tuple(range(big_n + 1, big_n + k + 1)),)
        + tuple((j,) for j in range(1, big_n + 1)),
    )
    apex = cat.target(f_prime)
    if cat.target(g_prime) != apex:
        raise AssertionError("pushout legs disagree on the apex")
    if cat.compose(f_prime, g) != cat.compose(g_prime, f):
        raise AssertionError("pushout square does not commute")
    return {
        "f": f,
        "g": g,
        "f_prime": f_prime,
        "g_prime": g_prime,
        "apex": apex,
    }


def pushout_universal_check(trunc: CatTrunc, square: dict) -> Report:
    """Exactly one mediating morphism for every cocone on the square
    inside the truncation."""
    report = Report("pushout universal property")
    f, g = square["f"], square["g"]
    f_prime, g_prime = square["f_prime"], square["g_prime"]
    b = trunc.target[f]
    c = trunc.target[g]
    d = square["apex"]
    for e in trunc.objects:
        for u in trunc.hom(b, e):
            for v in trunc.hom(c, e):
                if trunc.composition.get((u, f)) != trunc.composition.get(
                    (v, g)
                ):
                    continue
                mediating = [
                    h
                    for h in trunc.hom(d, e)
                    if trunc.composition.get((h, g_prime)) == u
                    and trunc.composition.get((h, f_prime)) == v
                ]
                if len(mediating) != 1:
                    report.add(
                        "mediating-not-unique",
                        cocone=(u, v),
                        count=len(mediating),
                    )
                report.checked += 1
    return report


# ---------------------------------------------------------------------------
# System verifiers over materialized truncations
# ---------------------------------------------------------------------------


def _closed_under_composition(
    trunc: CatTrunc, member: Callable, report: Report, label: str
) -> None:
    for (gg, ff), gf in trunc.composition.items():
        if member(ff) and member(gg) and not member(gf):
            report.add(
                f"{label}-not-closed", first=ff, second=gg, composite=gf
            )
        report.checked += 1


def verify_sfs(trunc: CatTrunc, left: Callable, right: Callable) -> Report:
    """Strictness: both classes are wide subcategories and every
    morphism has exactly one (left, right) factorization."""
    report = Report(f"strict factorization system on {trunc.name}")
    for x, ident in trunc.identities.items():
        if not left(ident) or not right(ident):
            report.add("identity-not-in-both-classes", object=x)
        report.checked += 1
    _closed_under_composition(trunc, left, report, "left")
    _closed_under_composition(trunc, right, report, "right")
    for f in trunc.morphisms():
        found = _factorizations(trunc, f, left, right)
        if len(found) != 1:
            report.add(
                "factorization-count", f=f, count=len(found), found=found[:2]
            )
        report.checked += 1
    return report


def verify_ofs(trunc: CatTrunc, left: Callable, right: Callable) -> Report:
    """Orthogonality: factorizations exist and the category of
    factorizations of each morphism is a contractible groupoid."""
    report = Report(f"orthogonal factorization system on {trunc.name}")
    for f in trunc.morphisms():
        found = _factorizations(trunc, f, left, right)
        if not found:
            report.add("no-factorization", f=f)
            continue
        for (l1, r1), (l2, r2) in itertools.product(found, repeat=2):
            z1 = trunc.target[l1]
            z2 = trunc.target[l2]
            connecting = [
                h
                for h in trunc.hom(z1, z2)
                if trunc.composition.get((h, l1)) == l2
                and trunc.composition.get((r2, h)) == r1
            ]
            if len(connecting) != 1:
                report.add(
                    "factorizations-not-uniquely-connected",
                    f=f,
                    pair=((l1, r1), (l2, r2)),
                    count=len(connecting),
                )
            report.checked += 1
    return report


def verify_ternary(
    trunc: CatTrunc,
    left1: Callable,
    right1: Callable,
    left2: Callable,
    right2: Callable,
) -> Report:
    """Two strict systems with nested classes give unique three-part
    decompositions."""
    report = Report(f"ternary factorization system on {trunc.name}")
    for f in trunc.morphisms():
        if left1(f) and not left2(f):
            report.add("left-classes-not-nested", f=f)
        if right2(f) and not right1(f):
            report.add("right-classes-not-nested", f=f)
        report.checked += 1
    for label, (le, ri) in (
        ("inner", (left1, right1)),
        ("outer", (left2, right2)),
    ):
        sub = verify_sfs(trunc, le, ri)
        report.checked += sub.checked
        for v in sub.violations:
            report.add(f"{label}-{v['kind']}", **{
                k: u for k, u in v.items() if k != "kind"
            })
    middle = lambda h: left2(h) and right1(h)  # noqa: E731
    for f in trunc.morphisms():
        found = _ternary_decompositions(trunc, f, left1, middle, right2)
        if len(found) != 1:
            report.add("ternary-count", f=f, count=len(found))
        report.checked += 1
    return report


def _ternary_decompositions(
    trunc: CatTrunc, f, left: Callable, middle: Callable, right: Callable
) -> list[tuple]:
    x, y = trunc.source[f], trunc.target[f]
    out = []
    for z1 in trunc.objects:
        for l in trunc.hom(x, z1):
            if not left(l):
                continue
            for z2 in trunc.objects:
                for m in trunc.hom(z1, z2):
                    if not middle(m):
                        continue
                    ml = trunc.composition.get((m, l))
                    if ml is None:
                        continue
                    for r in trunc.hom(z2, y):
                        if not right(r):
                            continue
                        if trunc.composition.get((r, ml)) == f:
                            out.append((l, m, r))
    return out


def ternary_decompositions(
    trunc: CatTrunc, f, left: Callable, middle: Callable, right: Callable
) -> list[tuple]:
    """All r . m . l presentations of f with parts in the given classes."""
    return _ternary_decompositions(trunc, f, left, middle, right)


def class_compose(
    trunc: CatTrunc, first: Iterable, second: Iterable
) -> set:
    """All composites of a morphism from ``first`` followed by a
    morphism from ``second``."""
    first = set(first)
    second = set(second)
    out = set()
    for (gg, ff), gf in trunc.composition.items():
        if ff in first and gg in second:
            out.add(gf)
    for x, ident in trunc.identities.items():
        if ident in first or ident in second:
            out.add(ident)
    for f in first:
        ident = trunc.identities.get(trunc.target[f])
        if ident in second:
            out.add(f)
    for g in second:
        ident = trunc.identities.get(trunc.source[g])
        if ident in first:
            out.add(g)
    return out


def closure_failures(trunc: CatTrunc, members: Iterable) -> list[tuple]:
    """Composable pairs inside the class whose composite leaves it."""
    members = set(members)
    out = []
    for (gg, ff), gf in trunc.composition.items():
        if ff in members and gg in members and gf not in members:
            out.append((ff, gg, gf))
    return out


# ---------------------------------------------------------------------------
# Isomorphism cross-checks
# ---------------------------------------------------------------------------


def _has_two_sided_inverse(trunc: CatTrunc, f) -> bool:
    x, y = trunc.source[f], trunc.target[f]
    for g in trunc.hom(y, x):
        if trunc.composition.get((g, f)) == trunc.identities.get(
            x
        ) and trunc.composition.get((f, g)) == trunc.identities.get(y):
            return True
    return False


def iso_matches_invertibility(
    trunc: CatTrunc, cat: TwistedArrowCategory
) -> Report:
    """The structural isomorphism test agrees with having a two-sided
    inverse in the truncation."""
    report = Report(f"isomorphism test on {trunc.name}")
    for f in trunc.morphisms():
        structural = is_iso(cat, f)
        tabulated = _has_two_sided_inverse(trunc, f)
        if structural != tabulated:
            report.add(
                "iso-mismatch",
                f=f,
                structural=structural,
                tabulated=tabulated,
            )
        report.checked += 1
    return report


def iso_objects_same_profile_check(
    trunc: CatTrunc, cat: TwistedArrowCategory
) -> Report:
    """Objects connected by an isomorphism have equal arity and
    grading."""
    P = cat.P
    report = Report(f"isomorphic objects profile: {trunc.name}")
    for f in trunc.morphisms():
        if not _has_two_sided_inverse(trunc, f):
            continue
        x, y = trunc.source[f], trunc.target[f]
        if P.arity(x) != P.arity(y) or P.grading(x) != P.grading(y):
            report.add("profile-differs", x=x, y=y)
        report.checked += 1
    return report


# ---------------------------------------------------------------------------
# Finite hand-built fixtures
# ---------------------------------------------------------------------------


def _finite_category(
    objects: Sequence[str],
    generators: dict[str, tuple[str, str]],
    relations: dict[tuple[str, str], str],
    name: str,
) -> CatTrunc:
    """Build a finite category from generators and a complete
    composition table for the non-identity morphisms."""
    cat = CatTrunc(name)
    for x in objects:
        cat.add_object(x)
        ident = f"id_{x}"
        cat.add_morphism(ident, x, x)
        cat.identities[x] = ident
    for m, (x, y) in generators.items():
        cat.add_morphism(m, x, y)
    for f in cat.morphisms():
        x, y = cat.source[f], cat.target[f]
        cat.set_compose(f, cat.identities[x], f)
        cat.set_compose(cat.identities[y], f, f)
    for (g, f), gf in relations.items():
        cat.set_compose(g, f, gf)
    rep = cat.check_category_axioms()
    if not rep.ok:
        raise AssertionError(f"fixture is not a category: {rep.summary()}")
    return cat


def two_object_fixture() -> tuple[CatTrunc, dict[str, set]]:
    """A two-object category with an involution i and two parallel
    morphisms swapped by it; two distinct strict systems share one
    orthogonal system."""
    cat = _finite_category(
        ["A", "B"],
        {"i": ("A", "A"), "f": ("A", "B"), "g": ("A", "B")},
        {
            ("i", "i"): "id_A",
            ("f", "i"): "g",
            ("g", "i"): "f",
        },
        "two-object involution fixture",
    )
    classes = {
        "L": {"id_A", "id_B", "i"},
        "R1": {"id_A", "id_B", "f"},
        "R2": {"id_A", "id_B", "g"},
        "I": {"id_A", "id_B", "i"},
    }
    return cat, classes


def five_object_fixture() -> tuple[CatTrunc, dict[str, set]]:
    """A five-object category where every morphism has a unique
    three-part decomposition although the middle-then-left composites do
    not form a subcategory."""
    # generators: r: A->B, l: B->C, lp: A->X, mp: X->Y, rp: Y->C
    # one relation identifies the two paths A -> C
    generators = {
        "r": ("A", "B"),
        "l": ("B", "C"),
        "lp": ("A", "X"),
        "mp": ("X", "Y"),
        "rp": ("Y", "C"),
        "q": ("A", "C"),  # q = l . r = rp . mp . lp
        "a": ("A", "Y"),  # a = mp . lp
        "b": ("X", "C"),  # b = rp . mp
    }
    relations = {
        ("l", "r"): "q",
        ("mp", "lp"): "a",
        ("rp", "mp"): "b",
        ("rp", "a"): "q",
        ("b", "lp"): "q",
    }
    cat = _finite_category(
        ["A", "B", "C", "X", "Y"],
        generators,
        relations,
        "five-object ternary fixture",
    )
    ids = {f"id_{x}" for x in ["A", "B", "C", "X", "Y"]}
    classes = {
        "L": ids | {"l", "lp"},
        "M": ids | {"mp"},
        "R": ids | {"r", "rp"},
        "ids": ids,
    }
    return cat, classes
