"""Generalized Reedy structure on twisted-arrow truncations.

The degree of an operation is its grading; the lowering class is
generated by grading-collapsing morphisms and isomorphisms, the raising
class consists of the morphisms whose markings all have non-negative
grading.  This module verifies the Reedy axioms directly on a
truncation, compares the verdict with the marking-level criterion (all
grading-0 operations have arity 1 and are invertible), tests
dualizability, and runs the split-epimorphism / monomorphism battery
that classifies a truncation as an EZ or Eilenberg-Zilber category.

The quotient of a twisted-arrow truncation by input signatures is also
constructed here: it is the image of the canonical projection to the
enveloping category, with objects the colour signatures and morphisms
the marking data of twisted-arrow morphisms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

from .core import OperadHandle, Report, SizeBound
from .factor import (
    _has_two_sided_inverse,
    _invertible_in_arity_one,
    _is_trivial_marking,
    has_trivial_leaf_perm,
    verify_ofs,
)
from .segal import grading_function
from .twisted import CatTrunc, TwistedArrowCategory, TwMorphism


# ---------------------------------------------------------------------------
# Grading-parameterized morphism classes
# ---------------------------------------------------------------------------


def _markings(f) -> tuple:
    return (f.q0,) + tuple(f.uppers)


def raising_pred(P: OperadHandle, grade: Callable) -> Callable:
    """Membership in the raising class: every marking has grading at
    least 0."""
    return lambda f: all(grade(u) >= 0 for u in _markings(f))


def collapsing_pred(P: OperadHandle, grade: Callable) -> Callable:
    """Membership in the strict lowering class: trivial input ordering
    and every marking an identity or of grading -1."""

    def pred(f) -> bool:
        if not has_trivial_leaf_perm(f):
            return False
        return all(
            _is_trivial_marking(P, u) or grade(u) == -1
            for u in _markings(f)
        )

    return pred


def elementary_degeneracy_pred(
    P: OperadHandle, grade: Callable
) -> Callable:
    """A strict lowering morphism with exactly one non-trivial
    marking."""
    strict = collapsing_pred(P, grade)

    def pred(f) -> bool:
        if not strict(f):
            return False
        nontrivial = [
            u for u in _markings(f) if not _is_trivial_marking(P, u)
        ]
        return len(nontrivial) == 1

    return pred


def _iso_set(trunc: CatTrunc) -> set:
    return {
        f for f in trunc.morphisms() if _has_two_sided_inverse(trunc, f)
    }


def _lowering_set(
    trunc: CatTrunc, strict: Callable, isos: set
) -> set:
    """The class of isomorphisms composed after strict lowering
    morphisms, computed from the tabulated compositions."""
    out = {f for f in trunc.morphisms() if strict(f)}
    out |= {
        gf
        for (g, f), gf in trunc.composition.items()
        if g in isos and strict(f)
    }
    return out


# ---------------------------------------------------------------------------
# Reedy verdict
# ---------------------------------------------------------------------------


@dataclass
class ReedyVerdict:
    is_reedy: bool
    dualizable: bool
    witnesses: list = field(default_factory=list)
    degree: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def summary(self) -> str:
        return (
            f"reedy={self.is_reedy} dualizable={self.dualizable} "
            f"({len(self.witnesses)} witnesses)"
        )


def marking_criterion(
    P: OperadHandle, bound: SizeBound, grading: str = "psi"
) -> tuple[bool, list]:
    """All operations of grading 0 have arity 1 and form a groupoid."""
    cat = TwistedArrowCategory(P, bound)
    grade = grading_function(P, grading)
    witnesses = []
    for p in P.ops(bound):
        if grade(p) != 0:
            continue
        if P.arity(p) != 1:
            witnesses.append(("grading-0-arity", p))
        elif not _invertible_in_arity_one(cat, p):
            witnesses.append(("grading-0-not-invertible", p))
    return (not witnesses, witnesses)


def _classify(
    trunc: CatTrunc,
    degree: dict,
    r_minus: set,
    r_plus: Callable,
    isos: set,
) -> tuple[bool, bool, list]:
    """The five axioms plus dualizability, by brute force over the
    tabulated truncation.  Returns (is_reedy, dualizable, witnesses)."""
    witnesses: list = []
    ofs = verify_ofs(
        trunc, lambda f: f in r_minus, r_plus
    )
    if not ofs.ok:
        witnesses.extend(
            ("factorization", v) for v in ofs.violations[:5]
        )
    for f in trunc.morphisms():
        x, y = trunc.source[f], trunc.target[f]
        if f in r_minus and f not in isos and not degree[y] < degree[x]:
            witnesses.append(("lowering-not-decreasing", f))
        if r_plus(f) and f not in isos and not degree[y] > degree[x]:
            witnesses.append(("raising-not-increasing", f))
        if f in isos and degree[x] != degree[y]:
            witnesses.append(("iso-not-degree-preserving", f))
    rigidity_ok = True
    dual_ok = True
    for (g, f), gf in trunc.composition.items():
        if gf != f:
            continue
        if g in isos and f in r_minus:
            if g != trunc.identities[trunc.target[f]]:
                witnesses.append(("lowering-rigidity", f, g))
                rigidity_ok = False
    for (g, f), gf in trunc.composition.items():
        if gf != g:
            continue
        if f in isos and r_plus(g):
            if f != trunc.identities[trunc.source[g]]:
                dual_ok = False
                witnesses.append(("raising-not-rigid", g, f))
    is_reedy = ofs.ok and rigidity_ok and not any(
        w[0]
        in (
            "lowering-not-decreasing",
            "raising-not-increasing",
            "iso-not-degree-preserving",
        )
        for w in witnesses
    )
    return is_reedy, is_reedy and dual_ok, witnesses


def reedy_check(
    P: OperadHandle,
    grading: str = "psi",
    target: str = "Tw",
    bound: SizeBound | None = None,
    objects: list | None = None,
) -> ReedyVerdict:
    """Verify the generalized Reedy axioms on a truncation and compare
    the verdict with the marking-level criterion."""
    if bound is None:
        raise ValueError("a size bound is required")
    cat = TwistedArrowCategory(P, bound)
    grade = grading_function(P, grading)
    if objects is None:
        objects = P.ops(bound)
        full = True
    else:
        full = False
    trunc = cat.truncation(objects)
    if target == "V":
        trunc, degree, fiber_report = signature_quotient(
            cat, trunc, grading
        )
        if not fiber_report.ok:
            return ReedyVerdict(
                False,
                False,
                witnesses=[("degree-not-well-defined", v) for v in fiber_report.violations],
                degree={},
                notes=[fiber_report.summary()],
            )
    elif target == "Tw":
        degree = {p: grade(p) for p in trunc.objects}
    else:
        raise ValueError(f"unknown target {target!r}")
    isos = _iso_set(trunc)
    strict = collapsing_pred(P, grade)
    r_minus = _lowering_set(trunc, strict, isos)
    r_plus = raising_pred(P, grade)
    is_reedy, dualizable, witnesses = _classify(
        trunc, degree, r_minus, r_plus, isos
    )
    verdict = ReedyVerdict(is_reedy, dualizable, witnesses, degree)
    crit_ok, crit_witnesses = marking_criterion(P, bound, grading)
    if full and crit_ok != is_reedy:
        verdict.witnesses.append(
            ("criterion-disagreement", crit_ok, crit_witnesses[:3])
        )
        verdict.is_reedy = False
        verdict.notes.append(
            "direct axiom check and marking criterion disagree"
        )
    else:
        verdict.notes.append(
            f"marking criterion agrees: {crit_ok}"
        )
    return verdict


# ---------------------------------------------------------------------------
# Signature quotient (image in the enveloping category)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VMorphism:
    """A morphism of the signature quotient: the marking data of a
    twisted-arrow morphism together with the source and target
    signatures (the data determines a unique lift at every operation
    of the source signature)."""

    source_sig: Any
    target_sig: Any
    q0: Any
    uppers: tuple
    blocks: tuple


def signature(P: OperadHandle, p) -> tuple:
    return (tuple(P.inputs(p)), P.output(p))


def signature_quotient(
    cat: TwistedArrowCategory,
    trunc: CatTrunc,
    grading: str = "psi",
) -> tuple[CatTrunc, dict, Report]:
    """Quotient a twisted-arrow truncation by input signatures.

    Objects become signatures, morphisms become marking data.  The
    report verifies that the degree is constant on every fibre (the
    required hypothesis: operations with the same multiset of colours
    have the same grading), that the quotient is well-defined on the
    composition table, and that every morphism lifts uniquely at every
    fibre element.
    """
    P = cat.P
    grade = grading_function(P, grading)
    report = Report(f"signature quotient of {trunc.name}")
    sig = lambda p: signature(P, p)
    fibres: dict[Any, list] = {}
    for p in trunc.objects:
        fibres.setdefault(sig(p), []).append(p)
    # degree hypothesis, stated for multisets of colours
    by_multiset: dict[Any, list] = {}
    for p in trunc.objects:
        key = (tuple(sorted(P.inputs(p), key=repr)), P.output(p))
        by_multiset.setdefault(key, []).append(p)
    for key, members in by_multiset.items():
        grades = {grade(p) for p in members}
        if len(grades) != 1:
            report.add(
                "degree-not-constant-on-fibre",
                signature=key,
                grades=sorted(grades),
            )
        report.checked += 1
    degree = {s: grade(members[0]) for s, members in fibres.items()}
    vt = CatTrunc(f"V({P.name})")
    vmap: dict[Any, VMorphism] = {}
    for s in fibres:
        vt.add_object(s)
    for f in trunc.morphisms():
        vf = VMorphism(
            sig(trunc.source[f]),
            sig(trunc.target[f]),
            f.q0,
            f.uppers,
            f.blocks,
        )
        vmap[f] = vf
        vt.add_morphism(vf, vf.source_sig, vf.target_sig)
    for p, ident in trunc.identities.items():
        vt.identities[sig(p)] = vmap[ident]
    # unique lifting at every fibre element
    for vf in set(vmap.values()):
        for p in fibres[vf.source_sig]:
            lift = TwMorphism(p, vf.q0, vf.uppers, vf.blocks)
            try:
                t = cat.target(lift)
            except (ValueError, KeyError):
                report.add("lift-invalid", morphism=vf, source=p)
                continue
            if sig(t) != vf.target_sig:
                report.add("lift-target-signature", morphism=vf, source=p)
            report.checked += 1
    # composition: tabulated pairs must be consistent, and every
    # composable pair of classes gets a composite via a lift
    for (g, f), gf in trunc.composition.items():
        vg, vf, vgf = vmap[g], vmap[f], vmap[gf]
        prior = vt.composition.get((vg, vf))
        if prior is not None and prior != vgf:
            report.add("quotient-not-functorial", g=vg, f=vf)
        vt.set_compose(vg, vf, vgf)
        report.checked += 1
    for vf in set(vmap.values()):
        for vg in set(vmap.values()):
            if vg.source_sig != vf.target_sig:
                continue
            if (vg, vf) in vt.composition:
                continue
            p = fibres[vf.source_sig][0]
            f0 = TwMorphism(p, vf.q0, vf.uppers, vf.blocks)
            r0 = cat.target(f0)
            g0 = TwMorphism(r0, vg.q0, vg.uppers, vg.blocks)
            comp = cat.compose(g0, f0)
            vcomp = VMorphism(
                vf.source_sig,
                vg.target_sig,
                comp.q0,
                comp.uppers,
                comp.blocks,
            )
            if vcomp not in vt.source:
                vt.add_morphism(vcomp, vf.source_sig, vg.target_sig)
            vt.set_compose(vg, vf, vcomp)
    return vt, degree, report


# ---------------------------------------------------------------------------
# Split epimorphisms, monomorphisms and the EZ battery
# ---------------------------------------------------------------------------


def split_epis(trunc: CatTrunc) -> dict[Any, list]:
    """Map each split epimorphism to its list of sections."""
    out: dict[Any, list] = {}
    for e in trunc.morphisms():
        y = trunc.target[e]
        sections = [
            s
            for s in trunc.hom(y, trunc.source[e])
            if trunc.composition.get((e, s)) == trunc.identities[y]
        ]
        if sections:
            out[e] = sections
    return out


def monomorphisms(trunc: CatTrunc) -> set:
    out = set()
    for f in trunc.morphisms():
        x = trunc.source[f]
        mono = True
        for z in trunc.objects:
            pairs = trunc.hom(z, x)
            for g, h in itertools.combinations(pairs, 2):
                if trunc.composition.get((f, g)) == trunc.composition.get(
                    (f, h)
                ):
                    mono = False
                    break
            if not mono:
                break
        if mono:
            out.add(f)
    return out


def split_epi_marking_check(
    P: OperadHandle,
    trunc: CatTrunc,
    epis: dict,
    grade: Callable,
) -> Report:
    """For every splitting e . s = id: markings of s have arity at
    least 1, markings of e arity at most 1 and grading at most 0."""
    report = Report("split epimorphism markings")
    for e, sections in epis.items():
        if not isinstance(e, TwMorphism):
            continue
        for u in _markings(e):
            if P.arity(u) > 1 or grade(u) > 0:
                report.add("epi-marking", e=e, marking=u)
        for s in sections:
            for u in _markings(s):
                if P.arity(u) < 1:
                    report.add("section-marking", s=s, marking=u)
        report.checked += 1
    return report


def _split_pushout_exists(
    trunc: CatTrunc, f, g, epis: dict
) -> bool:
    """A split pushout of f: A -> B and g: A -> C in the asymmetric
    orientation with sections s of f, t of g and u of the pushout leg
    from B, satisfying k . f = h . g and f . t = u . h."""
    a = trunc.source[f]
    b, c = trunc.target[f], trunc.target[g]
    s_candidates = epis.get(f, [])
    t_candidates = epis.get(g, [])
    if not s_candidates or not t_candidates:
        return False
    for pobj in trunc.objects:
        for k in trunc.hom(b, pobj):
            kf = trunc.composition.get((k, f))
            for h in trunc.hom(c, pobj):
                if kf is None or kf != trunc.composition.get((h, g)):
                    continue
                for u in epis.get(k, []):
                    for t in t_candidates:
                        if trunc.composition.get(
                            (f, t)
                        ) == trunc.composition.get((u, h)):
                            return True
    return False


def ez_battery(
    P: OperadHandle,
    grading: str = "psi",
    target: str = "Tw",
    bound: SizeBound | None = None,
    objects: list | None = None,
) -> Report:
    """Classify a truncation as EZ / Eilenberg-Zilber / neither.

    Checks: split epimorphisms against the lowering class and the
    marking lemma, monomorphisms against the raising class,
    degeneracies without sections, and split pushouts for pairs of
    elementary degeneracies with a common source.
    """
    if bound is None:
        raise ValueError("a size bound is required")
    cat = TwistedArrowCategory(P, bound)
    grade = grading_function(P, grading)
    trunc = cat.truncation(objects if objects is not None else P.ops(bound))
    if target == "V":
        trunc, _, quotient_report = signature_quotient(cat, trunc, grading)
        if not quotient_report.ok:
            return quotient_report
    report = Report(f"EZ battery: {target}({P.name})")
    isos = _iso_set(trunc)
    strict = collapsing_pred(P, grade)
    r_minus = _lowering_set(trunc, strict, isos)
    r_plus = raising_pred(P, grade)
    epis = split_epis(trunc)
    monos = monomorphisms(trunc)
    elem = elementary_degeneracy_pred(P, grade)
    degeneracies = [f for f in trunc.morphisms() if elem(f)]

    for e in epis:
        if e not in r_minus:
            report.add("split-epi-not-lowering", e=e)
    lowering_all_split = True
    for f in r_minus:
        if f not in epis and f not in isos:
            lowering_all_split = False
            report.note(f"lowering morphism without section: {f!r}")
    marking_rep = split_epi_marking_check(P, trunc, epis, grade)
    if not marking_rep.ok:
        for v in marking_rep.violations:
            report.add("split-epi-marking", detail=v)
    monos_match = True
    for f in monos:
        if not r_plus(f):
            monos_match = False
            report.note(f"monomorphism outside the raising class: {f!r}")
    for f in trunc.morphisms():
        if r_plus(f) and f not in monos:
            monos_match = False
            report.note(f"raising morphism that is not mono: {f!r}")
    for f in degeneracies:
        if f not in epis:
            report.note(f"elementary degeneracy without a section: {f!r}")
    # absolute pushouts via split pushouts, both orientations
    pushouts_ok = True
    for f, g in itertools.combinations(degeneracies, 2):
        if trunc.source[f] != trunc.source[g]:
            continue
        if not (
            _split_pushout_exists(trunc, f, g, epis)
            and _split_pushout_exists(trunc, g, f, epis)
        ):
            pushouts_ok = False
            report.note(
                f"no split pushout for degeneracies {f!r} and {g!r}"
            )
        report.checked += 1
    # Eilenberg-Zilber: same sections => equal
    same_sections_ok = True
    epi_list = list(epis)
    for e1, e2 in itertools.combinations(epi_list, 2):
        if (
            trunc.source[e1] == trunc.source[e2]
            and trunc.target[e1] == trunc.target[e2]
            and set(epis[e1]) == set(epis[e2])
        ):
            same_sections_ok = False
            report.add("distinct-epis-same-sections", e1=e1, e2=e2)
        report.checked += 1
    ez = (
        monos_match
        and lowering_all_split
        and not any(
            v["kind"] == "split-epi-not-lowering" for v in report.violations
        )
        and pushouts_ok
    )
    ezb = (
        lowering_all_split
        and not any(
            v["kind"] == "split-epi-not-lowering" for v in report.violations
        )
        and same_sections_ok
    )
    report.note(f"EZ: {'yes' if ez else 'no'}")
    report.note(f"Eilenberg-Zilber: {'yes' if ezb else 'no'}")
    report.checked += len(trunc.morphisms())
    return report


def ez_classification(report: Report) -> tuple[bool, bool]:
    """Extract the (EZ, Eilenberg-Zilber) flags from a battery report."""
    ez = "EZ: yes" in report.notes
    ezb = "Eilenberg-Zilber: yes" in report.notes
    return ez, ezb


# ---------------------------------------------------------------------------
# Named witnesses
# ---------------------------------------------------------------------------


def loop_collapse_map(P: OperadHandle) -> TwMorphism:
    """The degeneracy collapsing the one-vertex circle to the
    vertex-less one by grafting the exceptional edge into its leaf."""
    from .graphs import MU0, NU

    return TwMorphism(NU, P.identity(-1), (MU0,), ((), ()))


def unit_insertion_map(P: OperadHandle) -> TwMorphism:
    """The degeneracy from the one-vertex line to the exceptional edge."""
    from .graphs import ID1, MU0

    return TwMorphism(ID1, P.identity(1), (MU0,), ((), ()))


def sectionless_degeneracy_check(
    P: OperadHandle, bound: SizeBound
) -> Report:
    """The collapse of the one-vertex circle is an elementary
    degeneracy without a section at the bound."""
    from .graphs import LOOP, NU

    report = Report(f"sectionless degeneracy: {P.name}")
    cat = TwistedArrowCategory(P, bound)
    grade = grading_function(P, "psi")
    f = loop_collapse_map(P)
    if cat.target(f) != LOOP:
        report.add("wrong-target", got=cat.target(f))
        return report
    if not elementary_degeneracy_pred(P, grade)(f):
        report.add("not-elementary-degeneracy", f=f)
    sections = [
        s
        for s in cat.hom(LOOP, NU)
        if cat.compose(f, s) == cat.identity(LOOP)
    ]
    if sections:
        report.add("unexpected-section", sections=sections)
    report.checked += 1
    return report


def unit_insertion_not_mono_check(
    P: OperadHandle, bound: SizeBound
) -> Report:
    """The degeneracy from the one-vertex line to the exceptional edge
    is not a monomorphism: its composites with the two degeneracies
    from the two-vertex line coincide."""
    from .graphs import ID1, MU0

    report = Report(f"unit insertion not mono: {P.name}")
    cat = TwistedArrowCategory(P, bound)
    grade = grading_function(P, "psi")
    f = unit_insertion_map(P)
    if cat.target(f) != MU0:
        report.add("wrong-target", got=cat.target(f))
        return report
    elem = elementary_degeneracy_pred(P, grade)
    found = False
    for lines in [
        q for q in P.ops(bound) if P.arity(q) == 2 and P.output(q) == 1
    ]:
        gs = [
            g
            for g in cat.hom(lines, ID1)
            if elem(g)
        ]
        for g1, g2 in itertools.combinations(gs, 2):
            if cat.compose(f, g1) == cat.compose(f, g2):
                found = True
                report.checked += 1
    if not found:
        report.add("no-witness-pair")
    return report
