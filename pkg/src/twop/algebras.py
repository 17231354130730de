"""Algebras over coloured set-operads and expression classes.

An algebra assigns a finite carrier to every colour and an evaluation to
every operation.  On top of algebras this module builds the classes of
marked expressions: a flat pair (q, slots) records an operation together
with an assignment of its input slots, where each slot either holds a
plain element of the algebra or is marked (a distinguished copy of an
element, or a colour placeholder).  The congruence generated by
substitution collapse and by the symmetric action is computed by
union-find over all pairs within a bound.
"""

from __future__ import annotations

import itertools
import json
from typing import Any, Callable, Hashable, Iterable, Iterator, Sequence

from .core import (
    BoundExhausted,
    Colour,
    OperadHandle,
    Perm,
    PresentedOperad,
    Report,
    SizeBound,
    UnionFind,
    all_perms,
)

Element = Hashable

# slot encodings in flat pairs
# ("e", a)        plain element a
# ("m", j, a)     marked element a carrying input label j (arrow classes)
# ("h", j)        colour placeholder carrying input label j (enveloping classes)


def plain(a: Element) -> tuple:
    return ("e", a)


def marked(j: int, a: Element) -> tuple:
    return ("m", j, a)


def hole(j: int) -> tuple:
    return ("h", j)


class Algebra:
    """A finite algebra over an operad.

    ``interp(p, args)`` evaluates operation p on a tuple of carrier
    elements; it must respect identities, composition and the symmetric
    action (see :func:`check_algebra_axioms`).
    """

    def __init__(
        self,
        operad: OperadHandle,
        carrier: dict[Colour, tuple[Element, ...]],
        interp: Callable[[Any, tuple[Element, ...]], Element],
        name: str = "algebra",
    ) -> None:
        self.operad = operad
        self.carrier = {c: tuple(v) for c, v in carrier.items()}
        self._interp = interp
        self.name = name

    def eval(self, p, args: Sequence[Element]) -> Element:
        ins, out = self.operad.profile(p)
        if len(args) != len(ins):
            raise ValueError("argument count mismatch")
        for c, a in zip(ins, args):
            if a not in self.carrier.get(c, ()):
                raise ValueError(f"element {a!r} not of colour {c!r}")
        result = self._interp(p, tuple(args))
        if result not in self.carrier.get(out, ()):
            raise ValueError(f"result {result!r} not of colour {out!r}")
        return result

    def elements(self, c: Colour) -> tuple[Element, ...]:
        return self.carrier.get(c, ())

    def all_elements(self) -> list[tuple[Colour, Element]]:
        return [(c, a) for c, es in sorted(self.carrier.items(), key=repr) for a in es]

    # -- constructors -------------------------------------------------------

    @staticmethod
    def terminal(P: OperadHandle, bound: SizeBound, name: str | None = None) -> "Algebra":
        carrier = {c: ("*",) for c in P.colours(bound)}
        return Algebra(P, carrier, lambda p, args: "*", name or f"terminal({P.name})")

    @staticmethod
    def from_table(
        P: OperadHandle,
        carrier: dict[Colour, Sequence[Element]],
        table: dict[tuple[Any, tuple[Element, ...]], Element],
        name: str = "table-algebra",
    ) -> "Algebra":
        def interp(p, args):
            key = (p, tuple(args))
            if key in table:
                return table[key]
            if P.is_identity(p):
                return args[0]
            raise KeyError(f"no table entry for {key!r}")

        return Algebra(P, {c: tuple(v) for c, v in carrier.items()}, interp, name)

    @staticmethod
    def over_presented(
        P: PresentedOperad,
        carrier: dict[Colour, Sequence[Element]],
        gen_interp: dict[str, Callable[..., Element]],
        name: str = "presented-algebra",
    ) -> "Algebra":
        """Interpret normal-form terms by structural recursion on
        generators; the symmetric action is handled by the variable
        labelling of terms."""

        def interp(p, args):
            if P.is_identity(p):
                return args[0]

            def go(t):
                if t[0] == "v":
                    return args[t[1] - 1]
                return gen_interp[t[1]](*[go(c) for c in t[2]])

            return go(p)

        return Algebra(P, {c: tuple(v) for c, v in carrier.items()}, interp, name)


def check_algebra_axioms(
    A: Algebra, bound: SizeBound, max_pairs: int = 20000
) -> Report:
    """Verify that evaluation respects identities, composition and the
    symmetric action over the truncation."""
    P = A.operad
    report = Report(f"algebra axioms: {A.name} over {P.name}")
    ops = [p for p in P.ops(bound) if all(c in A.carrier for c in P.inputs(p)) and P.output(p) in A.carrier]
    by_output: dict[Colour, list] = {}
    for p in ops:
        by_output.setdefault(P.output(p), []).append(p)

    def args_for(p) -> Iterator[tuple[Element, ...]]:
        yield from itertools.product(*[A.elements(c) for c in P.inputs(p)])

    for c, elems in A.carrier.items():
        try:
            ident = P.identity(c)
        except (ValueError, KeyError):
            continue
        for a in elems:
            if A.eval(ident, (a,)) != a:
                report.add("identity", colour=c, a=a)
            report.checked += 1

    for p in ops:
        n = P.arity(p)
        if 2 <= n <= 4:
            for sigma in all_perms(n):
                try:
                    ps = P.act(p, sigma)
                except (ValueError, KeyError, BoundExhausted):
                    continue
                for args in args_for(p):
                    # act(p, sigma) applied to sigma-permuted arguments
                    if A.eval(ps, sigma.permute_tuple(args)) != A.eval(p, args):
                        report.add("action", p=p, sigma=sigma, args=args)
                    report.checked += 1

    done = 0
    for p in ops:
        ins_p = P.inputs(p)
        for i, c in enumerate(ins_p, 1):
            for q in by_output.get(c, []):
                try:
                    t = P.compose(p, i, q)
                except (ValueError, KeyError, BoundExhausted):
                    continue
                for args_p in args_for(p):
                    for args_q in args_for(q):
                        if done >= max_pairs:
                            return report
                        done += 1
                        full = (
                            args_p[: i - 1] + args_q + args_p[i:]
                        )
                        inner = A.eval(q, args_q)
                        nested = args_p[: i - 1] + (inner,) + args_p[i:]
                        if A.eval(t, full) != A.eval(p, nested):
                            report.add(
                                "composition", p=p, i=i, q=q, args=full
                            )
                        report.checked += 1
    return report


# ---------------------------------------------------------------------------
# Expression classes
# ---------------------------------------------------------------------------


FlatPair = tuple[Any, tuple]  # (operation, slot tuple)


def pair_labels(xs: tuple) -> list[int]:
    return [s[1] for s in xs if s[0] in ("m", "h")]


def pair_marked_elements(xs: tuple) -> dict[int, Element]:
    return {s[1]: s[2] for s in xs if s[0] == "m"}


class ClassEngine:
    """Classes of marked expressions over an algebra.

    With ``mode="arrow"`` slots are plain or marked elements and the
    classes are the morphism expressions of the twisted construction;
    with ``mode="enveloping"`` marked slots are colour placeholders and
    the classes are the operations of the enveloping construction.
    """

    def __init__(
        self,
        P: OperadHandle,
        A: Algebra,
        bound: SizeBound,
        mode: str = "arrow",
        ops: Sequence | None = None,
        max_marked: int | None = None,
    ) -> None:
        if mode not in ("arrow", "enveloping"):
            raise ValueError("mode must be 'arrow' or 'enveloping'")
        self.P = P
        self.A = A
        self.bound = bound
        self.mode = mode
        self.ops = list(ops) if ops is not None else P.ops(bound)
        self.max_marked = max_marked
        self.exhausted_notes: list[str] = []
        self._build()

    # -- universe -----------------------------------------------------------

    def _slot_options(self, c: Colour, label_pool: bool) -> list:
        opts = [("e", a) for a in self.A.elements(c)]
        return opts

    def _assignments(self, q) -> Iterator[tuple]:
        ins = self.P.inputs(q)
        n = len(ins)
        max_m = self.max_marked if self.max_marked is not None else n
        for marked_slots in itertools.chain.from_iterable(
            itertools.combinations(range(n), k) for k in range(0, min(n, max_m) + 1)
        ):
            k = len(marked_slots)
            plain_slots = [idx for idx in range(n) if idx not in marked_slots]
            plain_choices = [self.A.elements(ins[idx]) for idx in plain_slots]
            if any(not ch for ch in plain_choices):
                continue
            for labels in itertools.permutations(range(1, k + 1)):
                if self.mode == "enveloping":
                    marked_choices: list[list] = [
                        [("h", labels[t])] for t in range(k)
                    ]
                else:
                    marked_choices = [
                        [("m", labels[t], a) for a in self.A.elements(ins[idx])]
                        for t, idx in enumerate(marked_slots)
                    ]
                if any(not ch for ch in marked_choices):
                    continue
                for plain_vals in itertools.product(*plain_choices):
                    for marked_vals in itertools.product(*marked_choices):
                        xs: list = [None] * n
                        for idx, a in zip(plain_slots, plain_vals):
                            xs[idx] = ("e", a)
                        for t, idx in enumerate(marked_slots):
                            xs[idx] = marked_vals[t]
                        yield (q, tuple(xs))

    def _build(self) -> None:
        self.universe: set[FlatPair] = set()
        for q in self.ops:
            for pair in self._assignments(q):
                self.universe.add(pair)
        uf = UnionFind()

        # symmetric action: adjacent transpositions generate the orbits
        for q, xs in self.universe:
            n = len(xs)
            for t in range(1, n):
                sigma = Perm.transposition(n, t, t + 1)
                try:
                    q2 = self.P.act(q, sigma)
                except (ValueError, KeyError, BoundExhausted):
                    self.exhausted_notes.append(f"act escaped bound on {q!r}")
                    continue
                other = (q2, sigma.permute_tuple(xs))
                if other in self.universe:
                    uf.union((q, xs), other)
                else:
                    self.exhausted_notes.append(
                        f"action image outside universe for {q!r}"
                    )

        # substitution collapse
        by_output: dict[Colour, list] = {}
        for q in self.ops:
            by_output.setdefault(self.P.output(q), []).append(q)
        op_set = set(self.ops)
        for q in self.ops:
            ins_q = self.P.inputs(q)
            for i, c in enumerate(ins_q, 1):
                for r in by_output.get(c, []):
                    k = self.P.arity(r)
                    try:
                        t = self.P.compose(q, i, r)
                    except (ValueError, KeyError, BoundExhausted):
                        self.exhausted_notes.append(
                            f"composition escaped bound: {q!r} o_{i} {r!r}"
                        )
                        continue
                    if t not in op_set:
                        self.exhausted_notes.append(
                            f"composite outside universe: {q!r} o_{i} {r!r}"
                        )
                        continue
                    for q_pair in self._pairs_with_plain_slot(q, i):
                        _, xs = q_pair
                        a = xs[i - 1][1]
                        for args in itertools.product(
                            *[self.A.elements(cc) for cc in self.P.inputs(r)]
                        ):
                            if self.A.eval(r, args) != a:
                                continue
                            ys = (
                                xs[: i - 1]
                                + tuple(("e", b) for b in args)
                                + xs[i:]
                            )
                            t_pair = (t, ys)
                            if t_pair in self.universe:
                                uf.union(q_pair, t_pair)
        self.uf = uf
        groups = uf.classes(self.universe)
        self.rep: dict[FlatPair, FlatPair] = {}
        for members in groups.values():
            least = min(members, key=repr)
            for x in members:
                self.rep[x] = least

    def _pairs_with_plain_slot(self, q, i: int) -> Iterator[FlatPair]:
        for pair in self.universe:
            if pair[0] == q and pair[1][i - 1][0] == "e":
                yield pair

    # -- queries ------------------------------------------------------------

    def to_class(self, q, xs: tuple) -> FlatPair:
        pair = (q, tuple(xs))
        if pair not in self.universe:
            raise BoundExhausted(f"pair outside the class universe: {pair!r}")
        return self.rep[pair]

    def same_class(self, p1: FlatPair, p2: FlatPair) -> bool:
        return self.to_class(*p1) == self.to_class(*p2)

    def classes(self) -> list[FlatPair]:
        return sorted(set(self.rep.values()), key=repr)

    def class_members(self, rep: FlatPair) -> list[FlatPair]:
        return sorted((p for p, r in self.rep.items() if r == rep), key=repr)

    def eval_pair(self, pair: FlatPair) -> Element:
        """Evaluate a pair, unmarking the marked slots (arrow mode)."""
        q, xs = pair
        args = []
        for s in xs:
            if s[0] == "e":
                args.append(s[1])
            elif s[0] == "m":
                args.append(s[2])
            else:
                raise ValueError("cannot evaluate a colour placeholder")
        return self.A.eval(q, tuple(args))

    def class_signature(self, rep: FlatPair):
        """(ordered marked elements, evaluation) of an arrow class."""
        q, xs = rep
        me = pair_marked_elements(xs)
        inputs = tuple(me[j] for j in sorted(me))
        return inputs, self.eval_pair(rep)

    def variable_multiset(self, pair: FlatPair):
        q, xs = pair
        return tuple(sorted((s[2] for s in xs if s[0] == "m"), key=repr))


def check_class_invariants(engine: ClassEngine) -> Report:
    """Evaluation and the variable multiset are class invariants."""
    report = Report(f"class invariants over {engine.P.name}/{engine.A.name}")
    for rep in engine.classes():
        members = engine.class_members(rep)
        if engine.mode == "arrow":
            vals = {engine.eval_pair(m) for m in members}
            if len(vals) != 1:
                report.add("evaluation-not-invariant", rep=rep, values=vals)
            multisets = {engine.variable_multiset(m) for m in members}
            if len(multisets) != 1:
                report.add("variable-multiset-not-invariant", rep=rep)
        report.checked += len(members)
    return report


# ---------------------------------------------------------------------------
# Named fixtures
# ---------------------------------------------------------------------------


def monoid_algebra(
    P: PresentedOperad,
    elements: Sequence[Element],
    unit: Element,
    mult: dict[tuple[Element, Element], Element],
    colour: Colour = "c",
    name: str = "monoid",
) -> Algebra:
    """An algebra over a unit/product presentation of monoids."""
    return Algebra.over_presented(
        P,
        {colour: tuple(elements)},
        {"mu0": lambda: unit, "mu2": lambda a, b: mult[(a, b)]},
        name,
    )


def tree_algebra_of_operad(
    P: OperadHandle,
    bound: SizeBound,
    name: str | None = None,
    carrier: dict[Colour, tuple] | None = None,
) -> Algebra:
    """A one-colour operad as an algebra over the operad of rooted
    trees: the carrier at integer colour n is P(n), and a tree graph
    evaluates by composing its vertex decorations."""
    from .graphs import GraphOperad, evaluate_tree, sOp

    if carrier is None:
        by_arity: dict[Colour, list] = {}
        for p in P.ops(bound):
            by_arity.setdefault(len(P.inputs(p)), []).append(p)
        carrier = {n: tuple(v) for n, v in by_arity.items()}

    base_colour = P.colours(bound)[0]

    def interp(g, args):
        if g.special is not None:
            # the vertexless edge evaluates to the operad identity
            return P.identity(base_colour)
        return evaluate_tree(P, g, args)

    return Algebra(sOp, carrier, interp, name or f"trees({P.name})")


def five_colour_fixture(
    bound: SizeBound | None = None,
) -> tuple[PresentedOperad, Algebra]:
    """An operad and algebra whose arrow classes have no canonical
    representative.

    Five colours; generators p in (k1,k2;k0), q1,q2 in (k3,k4;k2) with
    the single relation p o_2 q1 = p o_2 q2.  The algebra identifies
    just enough values for two incomparable maximal collapses to exist.
    """
    bound = bound or SizeBound(max_arity=4, max_grading=4, max_expr_nodes=3)
    cs = [f"k{i}" for i in range(5)]
    P = PresentedOperad(
        "five_colour",
        cs,
        {
            "p": (("k1", "k2"), "k0"),
            "q1": (("k3", "k4"), "k2"),
            "q2": (("k3", "k4"), "k2"),
        },
        [
            (
                ("g", "p", (("v", 1), ("g", "q1", (("v", 2), ("v", 3))))),
                ("g", "p", (("v", 1), ("g", "q2", (("v", 2), ("v", 3))))),
            )
        ],
        bound,
    )
    carrier = {
        "k0": ("a0",),
        "k1": ("a1",),
        "k2": ("a2", "b2"),
        "k3": ("a3",),
        "k4": ("a4", "b4"),
    }
    values = {
        ("p", ("a1", "a2")): "a0",
        ("p", ("a1", "b2")): "a0",
        ("q1", ("a3", "a4")): "a2",
        ("q1", ("a3", "b4")): "a2",
        ("q2", ("a3", "a4")): "b2",
        ("q2", ("a3", "b4")): "b2",
    }
    A = Algebra.over_presented(
        P,
        carrier,
        {
            "p": lambda x, y: values[("p", (x, y))],
            "q1": lambda x, y: values[("q1", (x, y))],
            "q2": lambda x, y: values[("q2", (x, y))],
        },
        "five-colour-algebra",
    )
    return P, A


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def algebra_to_json(A: Algebra, bound: SizeBound) -> dict:
    structure = []
    P = A.operad
    for p in P.ops(bound):
        ins = P.inputs(p)
        if any(c not in A.carrier for c in ins) or P.output(p) not in A.carrier:
            continue
        for args in itertools.product(*[A.elements(c) for c in ins]):
            structure.append([repr(p), list(args), A.eval(p, args)])
    return {
        "carrier": {repr(c): list(v) for c, v in A.carrier.items()},
        "structure": structure,
    }


def algebra_from_json(
    P: OperadHandle, data: dict, op_parser: Callable[[str], Any]
) -> Algebra:
    carrier = {eval(c): tuple(v) for c, v in data["carrier"].items()}  # noqa: S307
    table = {
        (op_parser(op), tuple(args)): result
        for op, args, result in data["structure"]
    }
    return Algebra.from_table(P, carrier, table)
