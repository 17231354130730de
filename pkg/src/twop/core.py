"""Core abstractions shared by every other module.

Permutations, size bounds, the operad-handle interface, free and finitely
presented operads with bounded normalization, and the brute-force operad
axiom checker.

Conventions used throughout the package:

* Permutations are bijections of ``{1..n}``; ``sigma(j)`` is the image of
  ``j``.  Composition is ``(sigma * tau)(j) = sigma(tau(j))``.
* The symmetric group acts on operations on the right: the ``j``-th input
  of ``act(p, sigma)`` is the ``sigma(j)``-th input of ``p``, so that
  ``act(act(p, sigma), tau) == act(p, sigma * tau)``.
* Partial composition ``compose(p, i, q)`` plugs ``q`` into the ``i``-th
  input of ``p`` (``i`` is 1-based), producing an operation of arity
  ``arity(p) + arity(q) - 1`` whose inputs are ordered: inputs of ``p``
  below ``i``, then the inputs of ``q``, then the remaining inputs of
  ``p``.
"""

from __future__ import annotations

import itertools
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Iterator, Sequence

Colour = Hashable
OperationId = Hashable


def atom(name: str) -> Colour:
    """Colour constructor for named colours such as ``c1``."""
    return name


def genus_pair(g: int, n: int) -> Colour:
    """Colour of a genus-graded graph operad: (genus, arity-like weight)."""
    if g < 0 or n < -1:
        raise ValueError(f"invalid genus pair ({g}, {n})")
    return (g, n)


def tuple_colour(seq: Sequence[Colour]) -> Colour:
    return tuple(seq)


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Perm:
    """A bijection of {1..n}, stored as the image tuple (sigma(1),...,sigma(n))."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.images)
        if sorted(self.images) != list(range(1, n + 1)):
            raise ValueError(f"not a permutation of 1..{n}: {self.images}")

    @staticmethod
    def identity(n: int) -> "Perm":
        return Perm(tuple(range(1, n + 1)))

    @staticmethod
    def transposition(n: int, a: int, b: int) -> "Perm":
        images = list(range(1, n + 1))
        images[a - 1], images[b - 1] = images[b - 1], images[a - 1]
        return Perm(tuple(images))

    @staticmethod
    def cycle(n: int) -> "Perm":
        """The n-cycle (1 2 ... n): j -> j+1, n -> 1."""
        if n == 0:
            return Perm(())
        return Perm(tuple(list(range(2, n + 1)) + [1]))

    @staticmethod
    def from_images(images: Iterable[int]) -> "Perm":
        return Perm(tuple(images))

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, j: int) -> int:
        return self.images[j - 1]

    def compose(self, other: "Perm") -> "Perm":
        """self after other: (self * other)(j) = self(other(j))."""
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return Perm(tuple(self(other(j)) for j in range(1, self.degree + 1)))

    def __mul__(self, other: "Perm") -> "Perm":
        return self.compose(other)

    def inverse(self) -> "Perm":
        inv = [0] * self.degree
        for j in range(1, self.degree + 1):
            inv[self(j) - 1] = j
        return Perm(tuple(inv))

    def is_identity(self) -> bool:
        return all(self(j) == j for j in range(1, self.degree + 1))

    def permute_tuple(self, xs: Sequence[Any]) -> tuple[Any, ...]:
        """Inputs of p^sigma: entry j is entry sigma(j) of the inputs of p."""
        return tuple(xs[self(j) - 1] for j in range(1, self.degree + 1))


def all_perms(n: int) -> Iterator[Perm]:
    for images in itertools.permutations(range(1, n + 1)):
        yield Perm(images)


def sorting_perm(values: Sequence[Any]) -> Perm:
    """The permutation sigma with ``values[sigma(j)-1]`` sorted in j.

    Used to renormalize markings: if an operation carries the index
    sequence ``values`` on its inputs, acting by the returned permutation
    yields the same operation with its index sequence sorted increasingly.
    """
    order = sorted(range(len(values)), key=lambda k: values[k])
    return Perm(tuple(k + 1 for k in order))


def block_perm_inner(n: int, i: int, tau: Perm) -> Perm:
    """The permutation 1 +_i tau of {1..n+m-1} acting on the i-block.

    Satisfies compose(p, i, act(q, tau)) == act(compose(p, i, q), result)
    for arity(p) = n and arity(q) = m = tau.degree.
    """
    m = tau.degree
    images = []
    for j in range(1, n + m):
        if j < i:
            images.append(j)
        elif j < i + m:
            images.append(i - 1 + tau(j - i + 1))
        else:
            images.append(j)
    return Perm(tuple(images))


def block_perm_outer(sigma: Perm, i: int, m: int) -> Perm:
    """The permutation sigma<i,m> of {1..n+m-1} induced by sigma in S_n.

    Satisfies compose(act(p, sigma), i, q) ==
    act(compose(p, sigma(i), q), result) for arity(q) = m.
    """
    n = sigma.degree
    k = sigma(i)

    def shift(v: int) -> int:
        return v if v < k else v + m - 1

    images = []
    for j in range(1, n + m):
        if j < i:
            images.append(shift(sigma(j)))
        elif j < i + m:
            images.append(k + (j - i))
        else:
            images.append(shift(sigma(j - m + 1)))
    return Perm(tuple(images))


# ---------------------------------------------------------------------------
# Size bounds and gradings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SizeBound:
    """Truncation parameters for enumerating infinite operads.

    ``max_arity`` bounds arities, ``max_grading`` bounds the registered
    grading, and ``max_expr_nodes`` bounds structural size (generator
    nodes of expressions, vertices of graphs).
    """

    max_arity: int = 4
    max_grading: int = 4
    max_expr_nodes: int = 6

    def __post_init__(self) -> None:
        if min(self.max_arity, self.max_grading, self.max_expr_nodes) < 0:
            raise ValueError("bounds must be non-negative")

    @staticmethod
    def parse(text: str) -> "SizeBound":
        parts = [int(x) for x in text.split(",")]
        return SizeBound(*parts)


ARITY_GRADING = "arity_phi"
GRAPH_GRADING = "graph_psi"


# ---------------------------------------------------------------------------
# The operad handle interface
# ---------------------------------------------------------------------------


class OperadHandle(ABC):
    """A (possibly infinite) coloured symmetric set-operad.

    Operations are hashable values with structural equality; all methods
    are pure.  Enumeration methods take an explicit :class:`SizeBound`.
    """

    name: str = "operad"

    @abstractmethod
    def colours(self, bound: SizeBound) -> list[Colour]:
        ...

    @abstractmethod
    def ops(self, bound: SizeBound) -> list[OperationId]:
        """All operations within the bound, deterministically ordered."""

    @abstractmethod
    def profile(self, p: OperationId) -> tuple[tuple[Colour, ...], Colour]:
        """(input colours, output colour) of p."""

    @abstractmethod
    def compose(self, p: OperationId, i: int, q: OperationId) -> OperationId:
        ...

    @abstractmethod
    def act(self, p: OperationId, sigma: Perm) -> OperationId:
        ...

    @abstractmethod
    def identity(self, c: Colour) -> OperationId:
        ...

    @abstractmethod
    def grading(self, p: OperationId) -> int:
        ...

    # -- derived helpers ----------------------------------------------------

    def arity(self, p: OperationId) -> int:
        return len(self.profile(p)[0])

    def output(self, p: OperationId) -> Colour:
        return self.profile(p)[1]

    def inputs(self, p: OperationId) -> tuple[Colour, ...]:
        return self.profile(p)[0]

    def equal(self, p: OperationId, q: OperationId) -> bool:
        return p == q

    def is_identity(self, p: OperationId) -> bool:
        ins, out = self.profile(p)
        return len(ins) == 1 and p == self.identity(out)

    def ops_with_profile(
        self, inputs: Sequence[Colour], output: Colour, bound: SizeBound
    ) -> list[OperationId]:
        return [
            p
            for p in self.ops(bound)
            if self.profile(p) == (tuple(inputs), output)
        ]

    def ops_with_output(self, output: Colour, bound: SizeBound) -> list[OperationId]:
        return [p for p in self.ops(bound) if self.profile(p)[1] == output]

    def graft(self, p: OperationId, parts: Sequence[OperationId]) -> OperationId:
        """Simultaneous composition p(parts[0], ..., parts[n-1])."""
        if len(parts) != self.arity(p):
            raise ValueError("graft arity mismatch")
        result = p
        pos = 1
        for q in parts:
            result = self.compose(result, pos, q)
            pos += self.arity(q)
        return result


# ---------------------------------------------------------------------------
# Finite table operads
# ---------------------------------------------------------------------------


class TableOperad(OperadHandle):
    """An operad given by finite explicit tables.

    ``composition`` maps ``(p, i, q)`` to the composite; ``action`` maps
    ``(p, sigma)`` to the acted operation.  Missing action entries default
    to the identity action (adequate for operads enumerated only with
    trivial symmetries).
    """

    def __init__(
        self,
        name: str,
        profiles: dict[OperationId, tuple[tuple[Colour, ...], Colour]],
        identities: dict[Colour, OperationId],
        composition: dict[tuple[OperationId, int, OperationId], OperationId],
        action: dict[tuple[OperationId, Perm], OperationId] | None = None,
        gradings: dict[OperationId, int] | None = None,
    ) -> None:
        self.name = name
        self._profiles = dict(profiles)
        self._identities = dict(identities)
        self._composition = dict(composition)
        self._action = dict(action or {})
        self._gradings = dict(gradings or {})

    def colours(self, bound: SizeBound) -> list[Colour]:
        return sorted(self._identities, key=repr)

    def ops(self, bound: SizeBound) -> list[OperationId]:
        return sorted(self._profiles, key=repr)

    def profile(self, p):
        return self._profiles[p]

    def compose(self, p, i, q):
        key = (p, i, q)
        if key in self._composition:
            return self._composition[key]
        if self.is_identity(q):
            return p
        if self.is_identity(p) and i == 1:
            return q
        raise KeyError(f"composition not tabulated: {key}")

    def act(self, p, sigma: Perm):
        if sigma.is_identity():
            return p
        key = (p, sigma)
        if key in self._action:
            return self._action[key]
        raise KeyError(f"action not tabulated: {key}")

    def identity(self, c):
        return self._identities[c]

    def grading(self, p) -> int:
        if p in self._gradings:
            return self._gradings[p]
        return self.arity(p) - 1


# ---------------------------------------------------------------------------
# Free operads: planar terms with labelled variables
# ---------------------------------------------------------------------------

# A term is a nested tuple: ("v", j) is the j-th variable (an operad input),
# ("g", name, (child, ...)) is a generator applied to child terms.  An
# operation of arity n uses each variable 1..n exactly once; the variable
# labelling carries the symmetric group action.


def term_var(j: int):
    return ("v", j)


def term_gen(name: str, children: Sequence[Any]):
    return ("g", name, tuple(children))


def term_vars(t) -> list[int]:
    if t[0] == "v":
        return [t[1]]
    out: list[int] = []
    for child in t[2]:
        out.extend(term_vars(child))
    return out


def term_size(t) -> int:
    """Number of generator nodes."""
    if t[0] == "v":
        return 0
    return 1 + sum(term_size(c) for c in t[2])


def term_rename(t, rename: Callable[[int], int]):
    if t[0] == "v":
        return ("v", rename(t[1]))
    return ("g", t[1], tuple(term_rename(c, rename) for c in t[2]))


def term_act(t, sigma: Perm):
    """t^sigma: variable k becomes sigma^{-1}(k)."""
    inv = sigma.inverse()
    return term_rename(t, lambda k: inv(k))


def term_compose(p, n: int, i: int, q, m: int):
    """Plug q (arity m) into variable i of p (arity n)."""
    q_shift = term_rename(q, lambda k: k + i - 1)

    def subst(t):
        if t[0] == "v":
            if t[1] == i:
                return q_shift
            if t[1] > i:
                return ("v", t[1] + m - 1)
            return t
        return ("g", t[1], tuple(subst(c) for c in t[2]))

    return subst(p)


class FreeOperad(OperadHandle):
    """The free coloured symmetric operad on a set of typed generators."""

    def __init__(
        self,
        name: str,
        colour_list: Sequence[Colour],
        generators: dict[str, tuple[tuple[Colour, ...], Colour]],
        gen_grading: dict[str, int] | None = None,
    ) -> None:
        self.name = name
        self._colours = list(colour_list)
        self.generators = dict(generators)
        self.gen_grading = dict(gen_grading or {})

    # -- typing -------------------------------------------------------------

    def infer(self, t) -> tuple[tuple[Colour, ...], Colour]:
        """Profile of a well-formed operation term.

        Variables must be exactly 1..n for some n, each used once.
        """
        var_colours: dict[int, Colour] = {}

        def go(s) -> Colour:
            if s[0] == "v":
                raise _VarOut(s[1])
            ins, out = self.generators[s[1]]
            if len(ins) != len(s[2]):
                raise ValueError(f"generator arity mismatch in {s!r}")
            for colour, child in zip(ins, s[2]):
                if child[0] == "v":
                    j = child[1]
                    if j in var_colours and var_colours[j] != colour:
                        raise ValueError(f"variable {j} used at two colours")
                    var_colours[j] = colour
                else:
                    got = go(child)
                    if got != colour:
                        raise ValueError(
                            f"colour mismatch: expected {colour!r}, got {got!r}"
                        )
            return out

        if t[0] == "v":
            raise ValueError("bare variable has no inferable colour")
        output = go(t)
        vs = sorted(term_vars(t))
        if vs != list(range(1, len(vs) + 1)):
            raise ValueError(f"variables must be 1..n exactly once, got {vs}")
        inputs = tuple(var_colours[j] for j in range(1, len(vs) + 1))
        return inputs, output

    # -- handle interface ---------------------------------------------------

    def colours(self, bound: SizeBound) -> list[Colour]:
        return list(self._colours)

    def ops(self, bound: SizeBound) -> list[OperationId]:
        return sorted(self._enumerate(bound), key=repr)

    def _enumerate(self, bound: SizeBound) -> set:
        universe: set = set()
        for c in self._colours:
            universe.add(self.identity(c))
        for gname, (ins, out) in self.generators.items():
            if len(ins) <= bound.max_arity:
                universe.add(
                    term_gen(gname, [term_var(j) for j in range(1, len(ins) + 1)])
                )
        frontier = set(universe)
        while frontier:
            new: set = set()
            for p in sorted(universe, key=repr):
                np_ = self._term_arity(p)
                for q in sorted(frontier, key=repr):
                    for a, b in ((p, q), (q, p)):
                        na = self._term_arity(a)
                        nb = self._term_arity(b)
                        if na == 0:
                            continue
                        if self._term_size(a) + self._term_size(b) > bound.max_expr_nodes:
                            continue
                        if na + nb - 1 > bound.max_arity:
                            continue
                        for i in range(1, na + 1):
                            try:
                                t = self.compose(a, i, b)
                            except (ValueError, KeyError):
                                continue
                            if t not in universe:
                                new.add(t)
                del np_
            # close under the symmetric action
            for p in list(universe | new):
                n = self._term_arity(p)
                if n >= 2 and p[0] != "id":
                    for sigma in all_perms(n):
                        t = term_act(p, sigma)
                        if t not in universe:
                            new.add(t)
            new -= universe
            universe |= new
            frontier = new
        return universe

    def _term_arity(self, t) -> int:
        if t[0] == "id":
            return 1
        return len(term_vars(t))

    def _term_size(self, t) -> int:
        if t[0] == "id":
            return 0
        return term_size(t)

    def profile(self, p):
        if p[0] == "v":
            raise ValueError("untyped identity term; use identity(c)")
        if p[0] == "id":
            return ((p[1],), p[1])
        return self.infer(p)

    def compose(self, p, i, q):
        if p[0] == "id":
            if i != 1:
                raise ValueError("identity has one input")
            return q
        if q[0] == "id":
            return p
        n = self._term_arity(p)
        m = self._term_arity(q)
        if not 1 <= i <= n:
            raise ValueError(f"slot {i} out of range for arity {n}")
        t = term_compose(p, n, i, q, m)
        self.infer(t)  # type check
        return t

    def act(self, p, sigma: Perm):
        if p[0] == "id":
            return p
        return term_act(p, sigma)

    def identity(self, c):
        return ("id", c)

    def grading(self, p) -> int:
        if p[0] == "id":
            return 0
        if not self.gen_grading:
            return self._term_arity(p) - 1
        total = 0

        def go(t):
            nonlocal total
            if t[0] == "g":
                total += self.gen_grading[t[1]]
                for child in t[2]:
                    go(child)

        go(p)
        return total

    def is_identity(self, p) -> bool:
        return p[0] == "id"


class _VarOut(Exception):
    def __init__(self, j):
        self.j = j


# ---------------------------------------------------------------------------
# Finitely presented operads with bounded congruence closure
# ---------------------------------------------------------------------------


class UnionFind:
    def __init__(self) -> None:
        self.parent: dict = {}

    def find(self, x):
        path = []
        while x in self.parent:
            path.append(x)
            x = self.parent[x]
        for y in path:
            self.parent[y] = x
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True

    def classes(self, elements: Iterable) -> dict:
        groups: dict = {}
        for x in elements:
            groups.setdefault(self.find(x), []).append(x)
        return groups


def term_key(t):
    size = 0 if t[0] == "id" else term_size(t)
    return (size, repr(t))


def match_term(pattern, t) -> dict[int, Any] | None:
    """Linear first-order matching of a relation side against a subterm."""
    binding: dict[int, Any] = {}

    def go(pat, s) -> bool:
        if pat[0] == "v":
            binding[pat[1]] = s
            return True
        if s[0] != "g" or s[1] != pat[1] or len(s[2]) != len(pat[2]):
            return False
        return all(go(pc, sc) for pc, sc in zip(pat[2], s[2]))

    return binding if go(pattern, t) else None


def substitute(pattern, binding: dict[int, Any]):
    if pattern[0] == "v":
        return binding[pattern[1]]
    return ("g", pattern[1], tuple(substitute(c, binding) for c in pattern[2]))


class PresentedOperad(OperadHandle):
    """An operad presented by generators and relations.

    Normalization is the congruence generated by the relations, computed
    by exhaustive single-step rewriting (both directions, at every
    subterm) over the universe of well-typed terms within a bound,
    followed by connected components.  Normal forms are least
    representatives in the (size, lexicographic) term order.

    Stability of the computed classes is assessed by re-running the
    closure with extra size headroom and checking that no two distinct
    classes merge; :attr:`stable` records the verdict.
    """

    def __init__(
        self,
        name: str,
        colour_list: Sequence[Colour],
        generators: dict[str, tuple[tuple[Colour, ...], Colour]],
        relations: Sequence[tuple[Any, Any]],
        bound: SizeBound,
        gen_grading: dict[str, int] | None = None,
        headroom: int = 1,
    ) -> None:
        self.name = name
        self.free = FreeOperad(name + "_free", colour_list, generators, gen_grading)
        self.relations = [(l, r) for l, r in relations]
        self.bound = bound
        self._colours = list(colour_list)
        self._build(headroom)

    # -- construction -------------------------------------------------------

    def _close(self, bound: SizeBound) -> tuple[set, UnionFind]:
        universe = self.free._enumerate(bound)
        uf = UnionFind()
        changed = True
        while changed:
            changed = False
            for t in universe:
                for neighbour in self._rewrites(t):
                    if neighbour in universe and uf.union(t, neighbour):
                        changed = True
        return universe, uf

    def _rewrites(self, t) -> Iterator:
        if t[0] == "id":
            return
        for l, r in self.relations:
            for pat, rep in ((l, r), (r, l)):
                for res in self._rewrite_at(t, pat, rep):
                    if res[0] == "v":
                        # the whole term collapsed to its single input:
                        # identify it with the identity of that colour
                        yield ("id", self.free.profile(t)[1])
                    else:
                        yield res

    def _rewrite_at(self, t, pat, rep) -> Iterator:
        binding = match_term(pat, t)
        if binding is not None:
            yield substitute(rep, binding)
        if t[0] == "g":
            for idx, child in enumerate(t[2]):
                for new_child in self._rewrite_at(child, pat, rep):
                    children = list(t[2])
                    children[idx] = new_child
                    yield ("g", t[1], tuple(children))

    def _build(self, headroom: int) -> None:
        universe, uf = self._close(self.bound)
        groups = uf.classes(universe)
        self.normal_form: dict = {}
        for members in groups.values():
            rep = min(members, key=term_key)
            for t in members:
                self.normal_form[t] = rep
        self._universe = universe
        # stability check with headroom
        big = SizeBound(
            self.bound.max_arity,
            self.bound.max_grading,
            self.bound.max_expr_nodes + headroom,
        )
        _, uf_big = self._close(big)
        reps = {self.normal_form[t] for t in universe}
        self.stable = True
        seen: dict = {}
        for rep in reps:
            root = uf_big.find(rep)
            if root in seen:
                self.stable = False
            seen[root] = rep

    # -- normalization ------------------------------------------------------

    def normalize(self, t):
        """Normal form of a term (identity terms pass through)."""
        if isinstance(t, tuple) and t and t[0] == "id":
            return t
        if t not in self.normal_form:
            self.free.infer(t)  # raise on ill-typed input
            raise BoundExhausted(
                f"term {t!r} exceeds the closure bound of {self.name}"
            )
        return self.normal_form[t]

    # -- handle interface ---------------------------------------------------

    def colours(self, bound: SizeBound) -> list[Colour]:
        return list(self._colours)

    def ops(self, bound: SizeBound) -> list[OperationId]:
        reps = {self.normal_form[t] for t in self._universe}
        out = []
        for rep in reps:
            ins, _ = self.free.profile(rep) if rep[0] != "id" else (((rep[1],)), None)
            if rep[0] == "id":
                out.append(rep)
                continue
            if (
                len(ins) <= bound.max_arity
                and term_size(rep) <= bound.max_expr_nodes
                and abs(self.grading(rep)) <= max(bound.max_grading, 1)
            ):
                out.append(rep)
        return sorted(out, key=term_key)

    def profile(self, p):
        return self.free.profile(p)

    def compose(self, p, i, q):
        return self.normalize(self.free.compose(p, i, q))

    def act(self, p, sigma: Perm):
        return self.normalize(self.free.act(p, sigma))

    def identity(self, c):
        return self.free.identity(c)

    def grading(self, p) -> int:
        return self.free.grading(p)

    def is_identity(self, p) -> bool:
        return self.free.is_identity(p)


class BoundExhausted(RuntimeError):
    """Raised when a bounded closure cannot answer a query faithfully."""


# ---------------------------------------------------------------------------
# Reports and the axiom checker
# ---------------------------------------------------------------------------


@dataclass
class Report:
    """A verification report: a subject line plus violation witnesses."""

    subject: str
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, **data) -> None:
        self.violations.append({"kind": kind, **data})

    def note(self, text: str) -> None:
        self.notes.append(text)

    def to_json(self) -> str:
        return json.dumps(
            {
                "subject": self.subject,
                "ok": self.ok,
                "checked": self.checked,
                "violations": [repr(v) for v in self.violations],
                "notes": self.notes,
            },
            indent=2,
        )

    def summary(self) -> str:
        status = "pass" if self.ok else f"FAIL ({len(self.violations)} violations)"
        return f"{self.subject}: {status} [{self.checked} checks]"


def check_operad_axioms(
    P: OperadHandle,
    bound: SizeBound,
    max_triples: int | None = None,
    check_action: bool = True,
) -> Report:
    """Exhaustively verify the operad axioms on a truncation.

    Tests unitality, right action, equivariance of composition in both
    arguments, and parallel/sequential associativity over every
    composable tuple whose constituents and results stay enumerable.
    """
    report = Report(f"operad axioms: {P.name}")
    ops = P.ops(bound)
    op_set = set(ops)
    by_output: dict[Colour, list] = {}
    for p in ops:
        by_output.setdefault(P.output(p), []).append(p)

    def safe_compose(a, i, b):
        try:
            return P.compose(a, i, b)
        except (ValueError, KeyError, BoundExhausted):
            return None

    # unit axioms
    for p in ops:
        ins, out = P.profile(p)
        left = safe_compose(P.identity(out), 1, p)
        if left is not None and left != p:
            report.add("left-unit", p=p)
        report.checked += 1
        for i, c in enumerate(ins, start=1):
            right = safe_compose(p, i, P.identity(c))
            if right is not None and right != p:
                report.add("right-unit", p=p, i=i)
            report.checked += 1

    # right action and equivariance
    if check_action:
        for p in ops:
            n = P.arity(p)
            if n < 2 or n > 5:
                continue
            for sigma in all_perms(n):
                ps = P.act(p, sigma)
                for tau in all_perms(n):
                    if P.act(ps, tau) != P.act(p, sigma * tau):
                        report.add("right-action", p=p, sigma=sigma, tau=tau)
                    report.checked += 1
                ins = P.inputs(p)
                for i in range(1, n + 1):
                    for q in by_output.get(ins[sigma(i) - 1], []):
                        lhs = safe_compose(ps, i, q)
                        base = safe_compose(p, sigma(i), q)
                        if lhs is None or base is None:
                            continue
                        rhs = P.act(base, block_perm_outer(sigma, i, P.arity(q)))
                        if lhs != rhs:
                            report.add(
                                "equivariance-outer", p=p, sigma=sigma, i=i, q=q
                            )
                        report.checked += 1
            # inner equivariance
            for i in range(1, n + 1):
                for q in by_output.get(P.inputs(p)[i - 1], []):
                    m = P.arity(q)
                    if m < 2 or m > 4:
                        continue
                    for tau in all_perms(m):
                        lhs = safe_compose(p, i, P.act(q, tau))
                        base = safe_compose(p, i, q)
                        if lhs is None or base is None:
                            continue
                        rhs = P.act(base, block_perm_inner(n, i, tau))
                        if lhs != rhs:
                            report.add(
                                "equivariance-inner", p=p, i=i, q=q, tau=tau
                            )
                        report.checked += 1

    # associativity
    triples = 0
    for p in ops:
        n = P.arity(p)
        ins_p = P.inputs(p)
        for i in range(1, n + 1):
            for q in by_output.get(ins_p[i - 1], []):
                m = P.arity(q)
                pq = safe_compose(p, i, q)
                if pq is None:
                    continue
                ins_pq = P.inputs(pq)
                for j in range(1, n + m):
                    for r in by_output.get(ins_pq[j - 1], []):
                        if max_triples is not None and triples >= max_triples:
                            return report
                        triples += 1
                        lhs = safe_compose(pq, j, r)
                        if lhs is None:
                            continue
                        if i <= j < i + m:
                            inner = safe_compose(q, j - i + 1, r)
                            rhs = (
                                None
                                if inner is None
                                else safe_compose(p, i, inner)
                            )
                            kind = "sequential"
                        elif j < i:
                            pr = safe_compose(p, j, r)
                            rhs = (
                                None
                                if pr is None
                                else safe_compose(pr, i + P.arity(r) - 1, q)
                            )
                            kind = "parallel-low"
                        else:
                            pr = safe_compose(p, j - m + 1, r)
                            rhs = None if pr is None else safe_compose(pr, i, q)
                            kind = "parallel-high"
                        if rhs is not None and lhs != rhs:
                            report.add(kind, p=p, i=i, q=q, j=j, r=r)
                        report.checked += 1
    del op_set
    return report
