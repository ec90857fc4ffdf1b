"""Event calculus for generic one-parameter families of immersed spheres.

A generic path of immersions crosses the discriminant walls transversally,
and each wall crossing changes the invariant-level state in a prescribed
way: a self-tangency creates, kills, merges or splits a double circle; a
triple-point wall moves the self-intersection linking number by three; in
4-space the walls change the double surface by a Morse move, the resolved
triple curve by a Morse move, or the quadruple count by two.  States stay
combinatorial; the module verifies the resulting first-order calculus
(jumps of a first-order invariant depend on the wall, never on the state
it is crossed from) by brute force over random event paths.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Callable, Iterable, Iterator, Optional, Union

import numpy as np

from . import qform
from . import surfaces
from .invariants import Component5, ImmersionState5, SPIN_TRIVIAL
from .surfaces import ImmersionState4, StrataCounts, SurfaceComponent, \
    SurfaceDescriptor

ELLIPTIC_TANGENCY = "elliptic-tangency"
HYPERBOLIC_TANGENCY = "hyperbolic-tangency"
TRIPLE5 = "triple5"
TANGENCY4 = "tangency4"
TRIPLE4 = "triple4"
QUADRUPLE4 = "quadruple4"
QUINTUPLE4 = "quintuple4"

KINDS_5 = frozenset({ELLIPTIC_TANGENCY, HYPERBOLIC_TANGENCY, TRIPLE5})
KINDS_4 = frozenset({TANGENCY4, TRIPLE4, QUADRUPLE4, QUINTUPLE4})

# details of the Morse-type events; sign is forced by the detail
_TANGENCY5_DETAILS = {"birth": 1, "split": 1, "death": -1, "merge": -1}
_TANGENCY4_DETAILS = {"sphere-birth": 1, "handle-remove": 1,
                      "sphere-death": -1, "handle-attach": -1}

State = Union[ImmersionState5, ImmersionState4]


class InapplicableEventError(ValueError):
    """The event's preconditions fail at the given state."""


@dataclasses.dataclass(frozen=True)
class StratumEvent:
    """One transversal wall crossing.

    sign is the coorientation direction: positive self-tangencies increase
    the number of double circles, positive triple walls increase lk, and in
    4-space positive crossings increase D, T or Q.  operand carries the
    indices the event acts on; a split also records the twist handed to the
    new component.
    """

    kind: str
    sign: int
    operand: tuple = ()
    detail: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS_5 | KINDS_4:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "operand", tuple(int(v) for v in self.operand))
        if self.kind in (ELLIPTIC_TANGENCY, HYPERBOLIC_TANGENCY):
            if self.detail not in _TANGENCY5_DETAILS:
                raise ValueError(f"tangency detail {self.detail!r} must be "
                                 "birth, death, merge or split")
            if self.sign != _TANGENCY5_DETAILS[self.detail]:
                raise ValueError(f"{self.detail} events have sign "
                                 f"{_TANGENCY5_DETAILS[self.detail]:+d}")
        elif self.kind == TANGENCY4:
            if self.detail not in _TANGENCY4_DETAILS:
                raise ValueError(f"tangency detail {self.detail!r} must name "
                                 "a sphere or handle Morse move")
            if self.sign != _TANGENCY4_DETAILS[self.detail]:
                raise ValueError(f"{self.detail} events have sign "
                                 f"{_TANGENCY4_DETAILS[self.detail]:+d}")
        elif self.detail is not None:
            raise ValueError(f"{self.kind} events carry no detail")

    def to_json(self) -> str:
        return json.dumps({"schema": 1, "kind": self.kind, "sign": self.sign,
                           "operand": list(self.operand),
                           "detail": self.detail})

    @staticmethod
    def from_json(text: str) -> "StratumEvent":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed JSON: {exc}") from exc
        for key in ("kind", "sign"):
            if key not in data:
                raise ValueError(f"missing key {key!r}")
        if "schema" in data and data["schema"] != 1:
            raise ValueError(f"unsupported schema {data['schema']!r}")
        return StratumEvent(data["kind"], int(data["sign"]),
                            tuple(data.get("operand", ())),
                            data.get("detail"))


# ---------------------------------------------------------------------------
# event application


def _check_index(i: int, n: int) -> int:
    if not 0 <= i < n:
        raise InapplicableEventError(f"component index {i} out of range")
    return i


def _apply_5(state: ImmersionState5, event: StratumEvent) -> ImmersionState5:
    comps = list(state.components)
    if event.kind == TRIPLE5:
        if not comps:
            raise InapplicableEventError(
                "a triple wall needs an existing double circle")
        return ImmersionState5(state.omega, state.lk + 3 * event.sign,
                               tuple(comps))
    if event.detail == "birth":
        at = event.operand[0] if event.operand else len(comps)
        if not 0 <= at <= len(comps):
            raise InapplicableEventError("birth position out of range")
        comps.insert(at, Component5(False, SPIN_TRIVIAL))
    elif event.detail == "death":
        i = _check_index(event.operand[0], len(comps))
        if comps[i] != Component5(False, SPIN_TRIVIAL):
            raise InapplicableEventError(
                "only a trivial double circle can die")
        del comps[i]
    elif event.detail == "merge":
        i, j = event.operand
        if i == j:
            raise InapplicableEventError("merge needs two distinct circles")
        _check_index(i, len(comps))
        _check_index(j, len(comps))
        t = (comps[i].twist_class + comps[j].twist_class) % 4
        # merge j into i so a later split can restore both positions
        comps[i] = Component5(t % 2 == 1, t)
        del comps[j]
    elif event.detail == "split":
        i, at, handed = event.operand
        _check_index(i, len(comps))
        if not 0 <= at <= len(comps):
            raise InapplicableEventError("split position out of range")
        t = (comps[i].twist_class - handed) % 4
        comps[i] = Component5(t % 2 == 1, t)
        comps.insert(at, Component5(handed % 2 == 1, handed % 4))
    return ImmersionState5(state.omega, state.lk, tuple(comps))


_HANDLE_ORIENTABLE = qform.t_zero()
_HANDLE_CROSSCAPS = qform.direct_sum(qform.p_plus(), qform.p_minus())


def _attach_block(quad, block):
    if quad is None:
        return None
    return qform.direct_sum(quad, block)


def _detach_block(quad, block):
    """Remove a trailing canonical block, verifying it is really there."""
    if quad is None:
        return None
    k = block.dim
    if quad.dim < k:
        raise InapplicableEventError("refinement too small to detach from")
    mat = quad.matrix()
    if (not np.array_equal(mat[-k:, -k:], block.matrix())
            or mat[:-k, -k:].any()
            or quad.basis_q[-k:] != block.basis_q):
        raise InapplicableEventError(
            "refinement does not end in the canonical handle block")
    return qform.QuadraticSpace(mat[:-k, :-k], quad.basis_q[:-k])


def _apply_4(state: ImmersionState4, event: StratumEvent) -> ImmersionState4:
    surf = state.surface
    if event.kind == QUINTUPLE4:
        return state
    if event.kind == TRIPLE4:
        if state.T + event.sign < 0:
            raise InapplicableEventError("no triple circle left to remove")
        return ImmersionState4(surf, state.Q, state.T + event.sign, state.D)
    if event.kind == QUADRUPLE4:
        dq = 2 * event.sign
        if state.Q + dq < 0:
            raise InapplicableEventError("quadruple count cannot go negative")
        try:
            strata = dataclasses.replace(
                surf.strata,
                quadruple_points=surf.strata.quadruple_points + dq,
                stratum_points_f0=surf.strata.stratum_points_f0 + 6 * dq)
        except ValueError as exc:
            raise InapplicableEventError(str(exc)) from exc
        surf = SurfaceDescriptor(surf.components, strata, surf.quad_data)
        return ImmersionState4(surf, state.Q + dq, state.T, state.D)

    comps = list(surf.components)
    quad = surf.quad_data
    if event.detail == "sphere-birth":
        at = event.operand[0] if event.operand else len(comps)
        if not 0 <= at <= len(comps):
            raise InapplicableEventError("birth position out of range")
        comps.insert(at, surfaces.SPHERE)
    elif event.detail == "sphere-death":
        i = _check_index(event.operand[0], len(comps))
        if comps[i] != surfaces.SPHERE:
            raise InapplicableEventError("component is not a sphere")
        del comps[i]
    elif event.detail == "handle-attach":
        i = _check_index(event.operand[0], len(comps))
        c = comps[i]
        comps[i] = SurfaceComponent(c.orientable, c.genus_or_crosscaps
                                    + (1 if c.orientable else 2))
        quad = _attach_block(quad, _HANDLE_ORIENTABLE if c.orientable
                             else _HANDLE_CROSSCAPS)
    elif event.detail == "handle-remove":
        i = _check_index(event.operand[0], len(comps))
        c = comps[i]
        drop = 1 if c.orientable else 2
        if c.genus_or_crosscaps - drop < (0 if c.orientable else 1):
            raise InapplicableEventError("no handle left to remove")
        comps[i] = SurfaceComponent(c.orientable, c.genus_or_crosscaps - drop)
        quad = _detach_block(quad, _HANDLE_ORIENTABLE if c.orientable
                             else _HANDLE_CROSSCAPS)
    surf = SurfaceDescriptor(tuple(comps), surf.strata, quad)
    return ImmersionState4(surf, state.Q, state.T, surfaces.euler(surf))


def apply(state: State, event: StratumEvent) -> State:
    """The state after crossing the wall; raises when inapplicable."""
    if isinstance(state, ImmersionState5):
        if event.kind not in KINDS_5:
            raise InapplicableEventError(f"{event.kind} is a 4-space wall")
        return _apply_5(state, event)
    if isinstance(state, ImmersionState4):
        if event.kind not in KINDS_4:
            raise InapplicableEventError(f"{event.kind} is a 5-space wall")
        return _apply_4(state, event)
    raise TypeError("state must be a 5-space or 4-space immersion state")


def reverse(event: StratumEvent, state: Optional[State] = None) -> StratumEvent:
    """The event undoing this one: apply(apply(s, e), reverse(e, s)) == s.

    Merges and unpositioned births lose information the reverse needs (the
    twist handed to the vanished circle, the append position), so for those
    the state the event was applied to must be supplied.
    """
    if event.kind in (ELLIPTIC_TANGENCY, HYPERBOLIC_TANGENCY):
        if event.detail == "birth":
            if event.operand:
                at = event.operand[0]
            elif isinstance(state, ImmersionState5):
                at = len(state.components)
            else:
                raise ValueError("reversing an append birth needs the state")
            return StratumEvent(event.kind, -1, (at,), "death")
        if event.detail == "death":
            return StratumEvent(event.kind, 1, (event.operand[0],), "birth")
        if event.detail == "split":
            i, at, _ = event.operand
            i2 = i + 1 if at <= i else i
            return StratumEvent(event.kind, -1, (i2, at), "merge")
        if event.detail == "merge":
            if not isinstance(state, ImmersionState5):
                raise ValueError("reversing a merge needs the state")
            i, j = event.operand
            handed = state.components[j].twist_class
            p = i - 1 if j < i else i
            return StratumEvent(event.kind, 1, (p, j, handed), "split")
    if event.kind == TANGENCY4:
        if event.detail == "sphere-birth":
            if event.operand:
                at = event.operand[0]
            elif isinstance(state, ImmersionState4):
                at = len(state.surface.components)
            else:
                raise ValueError("reversing an append birth needs the state")
            return StratumEvent(TANGENCY4, -1, (at,), "sphere-death")
        if event.detail == "sphere-death":
            return StratumEvent(TANGENCY4, 1, event.operand, "sphere-birth")
        if event.detail == "handle-attach":
            return StratumEvent(TANGENCY4, 1, event.operand, "handle-remove")
        if event.detail == "handle-remove":
            return StratumEvent(TANGENCY4, -1, event.operand, "handle-attach")
    return StratumEvent(event.kind, -event.sign, event.operand, event.detail)


# ---------------------------------------------------------------------------
# paths


@dataclasses.dataclass(frozen=True)
class Path:
    """An initial state and the ordered walls a family crosses."""

    initial: State
    events: tuple[StratumEvent, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        list(self.states())  # validate applicability up front

    def states(self) -> Iterator[State]:
        s = self.initial
        yield s
        for e in self.events:
            s = apply(s, e)
            yield s

    @property
    def final(self) -> State:
        s = self.initial
        for e in self.events:
            s = apply(s, e)
        return s

    def to_json(self) -> str:
        if isinstance(self.initial, ImmersionState5):
            init = {"space": 5, "state": json.loads(self.initial.to_json())}
        else:
            init = {"space": 4,
                    "surface": json.loads(self.initial.surface.to_json()),
                    "Q": self.initial.Q, "T": self.initial.T,
                    "D": self.initial.D}
        return json.dumps({"schema": 1, "initial": init,
                           "events": [json.loads(e.to_json())
                                      for e in self.events]})


def _candidate_events_5(state: ImmersionState5, rng) -> list[StratumEvent]:
    comps = state.components
    kind = (ELLIPTIC_TANGENCY, HYPERBOLIC_TANGENCY)[rng.integers(0, 2)]
    out = [StratumEvent(kind, 1, (int(rng.integers(0, len(comps) + 1)),),
                        "birth")]
    trivial = [i for i, c in enumerate(comps)
               if c == Component5(False, SPIN_TRIVIAL)]
    if trivial:
        out.append(StratumEvent(kind, -1,
                                (trivial[rng.integers(0, len(trivial))],),
                                "death"))
    if len(comps) >= 2:
        i, j = rng.choice(len(comps), size=2, replace=False)
        out.append(StratumEvent(kind, -1, (int(i), int(j)), "merge"))
    if comps:
        i = int(rng.integers(0, len(comps)))
        handed = int(rng.integers(0, 4))
        at = int(rng.integers(0, len(comps) + 1))
        out.append(StratumEvent(kind, 1, (i, at, handed), "split"))
        out.append(StratumEvent(TRIPLE5, int(rng.choice((1, -1))), ()))
    return out


def _candidate_events_4(state: ImmersionState4, rng) -> list[StratumEvent]:
    comps = state.surface.components
    out = [StratumEvent(TANGENCY4, 1,
                        (int(rng.integers(0, len(comps) + 1)),),
                        "sphere-birth"),
           StratumEvent(TRIPLE4, 1, ()),
           StratumEvent(QUADRUPLE4, 1, ()),
           StratumEvent(QUINTUPLE4, int(rng.choice((1, -1))), ())]
    spheres = [i for i, c in enumerate(comps) if c == surfaces.SPHERE]
    if spheres:
        out.append(StratumEvent(TANGENCY4, -1,
                                (spheres[rng.integers(0, len(spheres))],),
                                "sphere-death"))
    if comps:
        i = int(rng.integers(0, len(comps)))
        out.append(StratumEvent(TANGENCY4, -1, (i,), "handle-attach"))
    handled = [i for i, c in enumerate(comps)
               if c.genus_or_crosscaps >= (1 if c.orientable else 3)]
    if handled:
        out.append(StratumEvent(
            TANGENCY4, 1, (handled[rng.integers(0, len(handled))],),
            "handle-remove"))
    if state.T >= 1:
        out.append(StratumEvent(TRIPLE4, -1, ()))
    if state.Q >= 2:
        out.append(StratumEvent(QUADRUPLE4, -1, ()))
    return out


def random_paths(initial: State, events_per_path: int, n_paths: int,
                 seed: int = 0) -> Iterator[Path]:
    """Random event paths, every event applicable where it occurs."""
    rng = np.random.default_rng(seed)
    five = isinstance(initial, ImmersionState5)
    for _ in range(n_paths):
        state = initial
        events = []
        while len(events) < events_per_path:
            cands = (_candidate_events_5(state, rng) if five
                     else _candidate_events_4(state, rng))
            event = cands[rng.integers(0, len(cands))]
            try:
                state = apply(state, event)
            except InapplicableEventError:
                continue
            events.append(event)
        yield Path(initial, tuple(events))


# ---------------------------------------------------------------------------
# verification reports


@dataclasses.dataclass(frozen=True)
class Violation:
    path: Path
    description: str


@dataclasses.dataclass(frozen=True)
class CalculusReport:
    checked: int
    skipped: int
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        word = "ok" if self.ok else f"{len(self.violations)} violations"
        return (f"{self.checked} configurations checked "
                f"({self.skipped} skipped): {word}")


def _swap_kind(event: StratumEvent) -> StratumEvent:
    swap = {ELLIPTIC_TANGENCY: HYPERBOLIC_TANGENCY,
            HYPERBOLIC_TANGENCY: ELLIPTIC_TANGENCY}
    if event.kind not in swap:
        return event
    return StratumEvent(swap[event.kind], event.sign, event.operand,
                        event.detail)


def verify_first_order(invariant: Callable[[State], int],
                       paths: Iterable[Path]) -> CalculusReport:
    """Brute-force check that an invariant is first order.

    For every two-event path the jump of the second wall is compared at the
    base state and after the first wall: first-order invariants jump by an
    amount depending on the wall alone, so the second difference must
    vanish.  Degenerate self-tangencies identify the elliptic and
    hyperbolic branches, so the jump must also be blind to that kind swap.
    """
    checked = skipped = 0
    violations = []
    for path in paths:
        if len(path.events) < 2:
            skipped += 1
            continue
        s0 = path.initial
        e1, e2 = path.events[0], path.events[1]
        s1 = apply(s0, e1)
        s12 = apply(s1, e2)
        try:
            s2 = apply(s0, e2)
        except InapplicableEventError:
            skipped += 1
            continue
        checked += 1
        second = ((invariant(s12) - invariant(s1))
                  - (invariant(s2) - invariant(s0)))
        if second != 0:
            violations.append(Violation(
                path, f"second difference {second} across "
                      f"{e1.kind}/{e2.kind}"))
        twin = _swap_kind(e1)
        if twin is not e1:
            jump = invariant(s1) - invariant(s0)
            twin_jump = invariant(apply(s0, twin)) - invariant(s0)
            if jump != twin_jump:
                violations.append(Violation(
                    path, f"tangency branches jump {jump} vs {twin_jump}"))
    return CalculusReport(checked, skipped, tuple(violations))


def invariance_along_paths(invariant: Callable[[State], object],
                           paths: Iterable[Path]) -> CalculusReport:
    """Check an invariant is constant along every path."""
    checked = 0
    violations = []
    for path in paths:
        checked += 1
        values = [invariant(s) for s in path.states()]
        for k in range(1, len(values)):
            if values[k] != values[0]:
                violations.append(Violation(
                    path, f"value changed from {values[0]} to {values[k]} "
                          f"at step {k} ({path.events[k - 1].kind})"))
                break
    return CalculusReport(checked, 0, tuple(violations))
