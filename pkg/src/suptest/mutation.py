"""Mutant generation and classification for tool qualification.

Mutation operates on the Mealy machine and guarded-action IR rather than
on target-language source, keeping the fault model aligned with the
testing theory: output faults, transfer faults, extra states, and guard
flips.  Equivalence is always decided by the product-machine oracle,
never by "passed all tests".
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field, replace

from .encoding import encode_valuation
from .fsm import MealyMachine
from .guards import (
    And, Comparison, DEFAULT_ENUM_BOUND, Not, Or,
    enumerate_valuations,
)
from .harness import PASS, SutAdapter, run_suite, run_suite_offline
from .sfsm import POLICY_SELFLOOP
from .supervisor import GuardedActionProgram, interpret_step

OUTPUT_FAULT = "output-fault"
TRANSFER_FAULT = "transfer-fault"
EXTRA_STATE = "extra-state"
GUARD_FLIP = "guard-literal-flip"

MACHINE_OPERATORS = (OUTPUT_FAULT, TRANSFER_FAULT, EXTRA_STATE)
PROGRAM_OPERATORS = (OUTPUT_FAULT, TRANSFER_FAULT, GUARD_FLIP)

DEFAULT_ENUMERATION_LIMIT = 10_000

EQUIVALENT = "EQUIVALENT"
KILLED = "KILLED"
ESCAPED = "ESCAPED"


@dataclass
class Mutant:
    id: str
    operator: str
    locus: str
    target: object  # MealyMachine | GuardedActionProgram


@dataclass
class MutationOutcome:
    mutant_id: str
    status: str  # EQUIVALENT | KILLED | ESCAPED | ERROR
    first_failing_case: int | None = None
    detail: str | None = None


# ---------------------------------------------------------------------------
# Machine mutants
# ---------------------------------------------------------------------------

def _machine_transitions_in_order(m: MealyMachine):
    for s in m.states:
        for x in m.inputs:
            if (s, x) in m.transitions:
                yield (s, x), m.transitions[(s, x)]


def _machine_mutants(m: MealyMachine, operators) -> list[Mutant]:
    mutants = []

    def emit(operator, locus, states, initial, transitions):
        mid = f"m{len(mutants)}"
        mutants.append(
            Mutant(mid, operator, locus,
                   MealyMachine(states, initial, m.inputs, m.outputs, transitions))
        )

    if OUTPUT_FAULT in operators:
        for (s, x), (t, y) in _machine_transitions_in_order(m):
            for y2 in m.outputs:
                if y2 == y:
                    continue
                mutated = dict(m.transitions)
                mutated[(s, x)] = (t, y2)
                emit(OUTPUT_FAULT, f"({s},{x}) output {y}->{y2}",
                     m.states, m.initial, mutated)
    if TRANSFER_FAULT in operators:
        for (s, x), (t, y) in _machine_transitions_in_order(m):
            for t2 in m.states:
                if t2 == t:
                    continue
                mutated = dict(m.transitions)
                mutated[(s, x)] = (t2, y)
                emit(TRANSFER_FAULT, f"({s},{x}) target {t}->{t2}",
                     m.states, m.initial, mutated)
    if EXTRA_STATE in operators:
        for s in m.states:
            clone = s + "__dup"
            inbound = [
                (t, x) for (t, x), (tgt, _) in _machine_transitions_in_order(m)
                if tgt == s
            ]
            for (src, x) in inbound:
                base = dict(m.transitions)
                base[(src, x)] = (clone, base[(src, x)][1])
                for x2 in m.inputs:
                    base[(clone, x2)] = m.transitions[(s, x2)]
                states = list(m.states) + [clone]
                emit(EXTRA_STATE, f"clone {s} via ({src},{x})",
                     states, m.initial, base)
                for x2 in m.inputs:
                    t0, y0 = base[(clone, x2)]
                    for y2 in m.outputs:
                        if y2 == y0:
                            continue
                        mutated = dict(base)
                        mutated[(clone, x2)] = (t0, y2)
                        emit(EXTRA_STATE,
                             f"clone {s} via ({src},{x}), ({clone},{x2}) output {y0}->{y2}",
                             states, m.initial, mutated)
                    for t2 in states:
                        if t2 == t0:
                            continue
                        mutated = dict(base)
                        mutated[(clone, x2)] = (t2, y0)
                        emit(EXTRA_STATE,
                             f"clone {s} via ({src},{x}), ({clone},{x2}) target {t0}->{t2}",
                             states, m.initial, mutated)
    return mutants


# ---------------------------------------------------------------------------
# Program mutants
# ---------------------------------------------------------------------------

_COMPLEMENT = {"=": "!=", "!=": "=", "<": ">=", ">=": "<", "<=": ">", ">": "<="}


def _flip_nth_comparison(g, n: int):
    """Replace the n-th comparison (in-order) by its complement.

    Returns (new guard, comparisons seen).
    """
    if isinstance(g, Comparison):
        if n == 0:
            return Comparison(g.var, _COMPLEMENT[g.op], g.literal), 1
        return g, 1
    if isinstance(g, Not):
        inner, seen = _flip_nth_comparison(g.operand, n)
        return Not(inner), seen
    if isinstance(g, (And, Or)):
        left, seen_l = _flip_nth_comparison(g.left, n)
        right, seen_r = _flip_nth_comparison(g.right, n - seen_l)
        return type(g)(left, right), seen_l + seen_r
    return g, 0


def _count_comparisons(g) -> int:
    if isinstance(g, Comparison):
        return 1
    if isinstance(g, Not):
        return _count_comparisons(g.operand)
    if isinstance(g, (And, Or)):
        return _count_comparisons(g.left) + _count_comparisons(g.right)
    return 0


def _program_mutants(p: GuardedActionProgram, operators) -> list[Mutant]:
    mutants = []

    def emit(operator, locus, actions):
        mid = f"m{len(mutants)}"
        mutant = replace(
            p, actions=actions, policy=POLICY_SELFLOOP, resolution="first"
        )
        mutants.append(Mutant(mid, operator, locus, mutant))

    distinct_outputs = []
    for a in p.actions:
        if a.output not in distinct_outputs:
            distinct_outputs.append(a.output)
    risk_states = [tuple(sorted(r.items())) for r in p.risk_states()]

    if OUTPUT_FAULT in operators:
        for i, a in enumerate(p.actions):
            for out in distinct_outputs:
                if out == a.output:
                    continue
                actions = list(p.actions)
                actions[i] = replace(a, output=out)
                emit(OUTPUT_FAULT,
                     f"action {i} ({a.name}) output -> {encode_valuation(out)}",
                     actions)
    if TRANSFER_FAULT in operators:
        for i, a in enumerate(p.actions):
            for r in risk_states:
                if r == a.target:
                    continue
                actions = list(p.actions)
                actions[i] = replace(a, target=r)
                emit(TRANSFER_FAULT,
                     f"action {i} ({a.name}) target -> {dict(r)}", actions)
    if GUARD_FLIP in operators:
        for i, a in enumerate(p.actions):
            for n in range(_count_comparisons(a.guard)):
                flipped, _ = _flip_nth_comparison(a.guard, n)
                actions = list(p.actions)
                actions[i] = replace(a, guard=flipped)
                emit(GUARD_FLIP, f"action {i} ({a.name}) comparison {n} flipped",
                     actions)
    return mutants


# ---------------------------------------------------------------------------
# Generation entry point
# ---------------------------------------------------------------------------

def generate_mutants(
    target,
    operators=None,
    limit: int | None = None,
    seed: int = 0,
) -> list[Mutant]:
    """Enumerate mutants in deterministic order; sample uniformly if a
    limit below the enumeration size is given (fixed seed)."""
    if isinstance(target, MealyMachine):
        mutants = _machine_mutants(target, operators or MACHINE_OPERATORS)
    elif isinstance(target, GuardedActionProgram):
        mutants = _program_mutants(target, operators or PROGRAM_OPERATORS)
    else:
        raise TypeError(f"cannot mutate {type(target).__name__}")
    if limit is not None and limit < len(mutants):
        rng = random.Random(seed)
        keep = sorted(rng.sample(range(len(mutants)), limit))
        mutants = [mutants[i] for i in keep]
    return mutants


# ---------------------------------------------------------------------------
# Program equivalence oracle
# ---------------------------------------------------------------------------

def program_equivalent(
    p1: GuardedActionProgram,
    p2: GuardedActionProgram,
    bound: int = DEFAULT_ENUM_BOUND,
) -> bool:
    """Exact observational equivalence over the full input valuation space.

    Breadth-first product traversal of the two interpreters' risk-state
    spaces; exhaustive at desk scale.
    """
    inputs = list(enumerate_valuations(p1.input_vars, bound))
    start = (tuple(sorted(p1.initial.items())), tuple(sorted(p2.initial.items())))
    seen = {start}
    queue = deque([start])
    while queue:
        r1, r2 = queue.popleft()
        for v in inputs:
            o1, n1 = interpret_step(p1, v, dict(r1))
            o2, n2 = interpret_step(p2, v, dict(r2))
            if o1 != o2:
                return False
            pair = (tuple(sorted(n1.items())), tuple(sorted(n2.items())))
            if pair not in seen:
                seen.add(pair)
                queue.append(pair)
    return True


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def _first_failing_case(report) -> int | None:
    for v in report.verdicts:
        if v.status != PASS:
            return v.case_index
    return None


def classify(reference, suite, mutant: Mutant, via: str = "oracle",
             sut_command=None, bound: int = DEFAULT_ENUM_BOUND) -> MutationOutcome:
    """Decide EQUIVALENT / KILLED / ESCAPED for one mutant.

    `oracle` mode runs the suite in-memory; `harness` mode serves the
    mutant over the wire protocol (requires `sut_command`, a callable
    mapping the mutant to an adapter command line).
    """
    if isinstance(mutant.target, MealyMachine):
        equivalent = reference.equivalent(mutant.target) is None
    else:
        equivalent = program_equivalent(reference, mutant.target, bound)

    if via == "oracle":
        if isinstance(mutant.target, MealyMachine):
            failing = _run_suite_on_machine(mutant.target, suite)
        else:
            failing = _first_failing_case(run_suite_offline(mutant.target, suite))
    elif via == "harness":
        if sut_command is None:
            raise ValueError("harness mode needs a sut_command factory")
        with SutAdapter(sut_command(mutant)) as sut:
            failing = _first_failing_case(run_suite(sut, suite))
    else:
        raise ValueError(f"unknown classification mode {via!r}")

    if equivalent:
        if failing is not None:
            # a test failing on an equivalent mutant is a tooling fault
            return MutationOutcome(mutant.id, "ERROR", failing,
                                   "equivalent mutant failed a test")
        return MutationOutcome(mutant.id, EQUIVALENT)
    if failing is not None:
        return MutationOutcome(mutant.id, KILLED, failing)
    return MutationOutcome(mutant.id, ESCAPED)


def _run_suite_on_machine(machine: MealyMachine, suite) -> int | None:
    """First failing case index of an abstract suite on a machine, or None."""
    for index, case in enumerate(suite.cases):
        state = machine.initial
        for inp, expected in zip(case.inputs, case.expected):
            state, observed = machine.transitions[(state, inp)]
            if observed != expected:
                break
        else:
            continue
        return index
    return None


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

@dataclass
class MutationReport:
    outcomes: list[MutationOutcome] = field(default_factory=list)

    @property
    def counts(self) -> dict:
        c = {EQUIVALENT: 0, KILLED: 0, ESCAPED: 0, "ERROR": 0}
        for o in self.outcomes:
            c[o.status] += 1
        return c

    @property
    def score(self) -> float | None:
        c = self.counts
        denominator = c[KILLED] + c[ESCAPED]
        if denominator == 0:
            return None
        return c[KILLED] / denominator

    def to_obj(self) -> dict:
        return {
            "outcomes": [
                {
                    "mutant": o.mutant_id,
                    "status": o.status,
                    "firstFailingCase": o.first_failing_case,
                    "detail": o.detail,
                }
                for o in self.outcomes
            ],
            "counts": self.counts,
            "score": self.score,
        }

    def to_csv(self) -> str:
        lines = ["mutant,status,first_failing_case"]
        for o in self.outcomes:
            case = "" if o.first_failing_case is None else str(o.first_failing_case)
            lines.append(f"{o.mutant_id},{o.status},{case}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        c = self.counts
        score = "n/a" if self.score is None else f"{self.score:.3f}"
        lines = [
            f"mutants: {len(self.outcomes)}  killed: {c[KILLED]}  "
            f"equivalent: {c[EQUIVALENT]}  escaped: {c[ESCAPED]}  "
            f"errors: {c['ERROR']}  score: {score}",
        ]
        for o in self.outcomes:
            if o.status in (ESCAPED, "ERROR"):
                lines.append(f"  {o.mutant_id}: {o.status} {o.detail or ''}".rstrip())
        return "\n".join(lines)


def mutation_report(outcomes) -> MutationReport:
    return MutationReport(list(outcomes))
