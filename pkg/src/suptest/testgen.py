"""Complete conformance test suites: H-Method, W-Method, completeness check.

Suites store only maximal input traces; every prefix is implicitly part of
the suite because the harness checks all intermediate outputs.  The
completeness checker re-verifies the H-conditions by direct enumeration
and shares no code with the generator beyond the Mealy machine primitives,
so generator and checker cannot mask each other's faults.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product

from .fsm import MealyMachine


class TestGenError(Exception):
    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    inputs: tuple
    expected: tuple


@dataclass
class TestSuite:
    __test__ = False  # not a pytest class

    cases: list[TestCase]
    method: str  # "h" | "w"
    m_bound: int
    reference_fingerprint: str
    concrete: bool = False

    def to_obj(self) -> dict:
        return {
            "method": self.method,
            "mBound": self.m_bound,
            "referenceFingerprint": self.reference_fingerprint,
            "concrete": self.concrete,
            "cases": [
                {"inputs": list(c.inputs), "expectedOutputs": list(c.expected)}
                for c in self.cases
            ],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TestSuite":
        return cls(
            cases=[
                TestCase(tuple(c["inputs"]), tuple(c["expectedOutputs"]))
                for c in obj["cases"]
            ],
            method=obj["method"],
            m_bound=obj["mBound"],
            reference_fingerprint=obj["referenceFingerprint"],
            concrete=obj.get("concrete", False),
        )


def suite_stats(ts: TestSuite) -> dict:
    lengths = [len(c.inputs) for c in ts.cases]
    return {
        "cases": len(ts.cases),
        "total_input_symbols": sum(lengths),
        "max_length": max(lengths, default=0),
    }


# ---------------------------------------------------------------------------
# Construction helpers
# ---------------------------------------------------------------------------

def _require_testable(m: MealyMachine, m_bound: int) -> None:
    if not m.complete:
        raise TestGenError("reference machine must be complete")
    if len(m.reachable_states()) < len(m.states):
        raise TestGenError("reference machine has unreachable states")
    if not m.is_minimal():
        raise TestGenError("reference machine must be minimal")
    if m_bound < len(m.states):
        raise TestGenError(
            f"mBound {m_bound} is below the reference state count {len(m.states)}"
        )


def state_cover(m: MealyMachine) -> list[tuple]:
    """One shortest access trace per state, BFS with input-order tie-break.

    Contains the empty trace (for the initial state); ordered by discovery.
    """
    access = {m.initial: ()}
    order = [()]
    queue = deque([m.initial])
    while queue:
        s = queue.popleft()
        for x in m.inputs:
            entry = m.transitions.get((s, x))
            if entry is None:
                continue
            t = entry[0]
            if t not in access:
                access[t] = access[s] + (x,)
                order.append(access[t])
                queue.append(t)
    if len(access) < len(m.states):
        missing = [s for s in m.states if s not in access]
        raise TestGenError(f"unreachable states: {', '.join(missing)}")
    return order


def _trace_key(m: MealyMachine, trace: tuple) -> tuple:
    return tuple(m.inputs.index(x) for x in trace)


def _maximal_traces(m: MealyMachine, closure: set[tuple]) -> list[tuple]:
    maximal = [
        t for t in closure if not any(t + (x,) in closure for x in m.inputs)
    ]
    maximal.sort(key=lambda t: _trace_key(m, t))
    return maximal


def _close_prefixes(closure: set[tuple], trace: tuple) -> None:
    for i in range(len(trace) + 1):
        closure.add(trace[:i])


def _to_suite(m: MealyMachine, closure: set[tuple], method: str, m_bound: int) -> TestSuite:
    cases = []
    for trace in _maximal_traces(m, closure):
        if not trace:
            continue
        outputs, _ = m.run(trace)
        cases.append(TestCase(trace, outputs))
    return TestSuite(cases, method, m_bound, m.fingerprint())


# ---------------------------------------------------------------------------
# H-Method
# ---------------------------------------------------------------------------

def h_method(m: MealyMachine, m_bound: int) -> TestSuite:
    """Complete suite for implementations with at most `m_bound` states.

    Starts from a state cover extended by all input words of the traversal
    depth, then adds distinguishing suffixes for the required trace pairs,
    preferring suffixes already present so the suite stays small.
    """
    _require_testable(m, m_bound)
    n = len(m.states)
    k = m_bound - n + 1
    cover = state_cover(m)
    cover_set = set(cover)

    closure: set[tuple] = set()
    for v in cover:
        for word in product(m.inputs, repeat=k):
            _close_prefixes(closure, v + word)

    # traversal set V . inputs^{<=k}, ordered deterministically
    traversal = []
    for v in cover:
        for length in range(k + 1):
            for word in product(m.inputs, repeat=length):
                traversal.append(v + word)
    traversal.sort(key=lambda t: (len(t), _trace_key(m, t)))

    def state_after(trace: tuple) -> str:
        _, s = m.run(trace)
        return s

    def suffixes_in(closure_set: set[tuple], prefix: tuple) -> set[tuple]:
        npfx = len(prefix)
        return {
            t[npfx:] for t in closure_set if len(t) >= npfx and t[:npfx] == prefix
        }

    def ensure_distinguished(alpha: tuple, beta: tuple) -> None:
        sa, sb = state_after(alpha), state_after(beta)
        if sa == sb:
            return
        common = suffixes_in(closure, alpha) & suffixes_in(closure, beta)
        best = None
        for gamma in common:
            if not gamma:
                continue
            oa, _ = m.run_from(sa, gamma)
            ob, _ = m.run_from(sb, gamma)
            if oa != ob:
                key = (len(gamma), _trace_key(m, gamma))
                if best is None or key < best[0]:
                    best = (key, gamma)
        if best is not None:
            return
        gamma = m.distinguishing_trace(sa, sb)
        if gamma is None:  # minimal machine: cannot happen
            raise TestGenError(f"states {sa!r} and {sb!r} are not distinguishable")
        _close_prefixes(closure, alpha + gamma)
        _close_prefixes(closure, beta + gamma)

    # (a) pairs within the state cover
    for i, alpha in enumerate(cover):
        for beta in cover[i + 1:]:
            ensure_distinguished(alpha, beta)
    # (b) cover trace against proper traversal extension
    for alpha in cover:
        for beta in traversal:
            if beta in cover_set:
                continue
            ensure_distinguished(alpha, beta)
    # (c) distinct non-empty prefixes of each traversal trace
    for omega in traversal:
        for i in range(1, len(omega) + 1):
            for j in range(i + 1, len(omega) + 1):
                ensure_distinguished(omega[:i], omega[:j])

    return _to_suite(m, closure, "h", m_bound)


# ---------------------------------------------------------------------------
# W-Method
# ---------------------------------------------------------------------------

def characterization_set(m: MealyMachine) -> list[tuple]:
    """Trace set distinguishing every pair of states, greedily accumulated."""
    if not m.complete:
        raise TestGenError("characterization_set requires a complete machine")
    if len(m.state_partition()) != len(m.states):
        raise TestGenError("characterization_set requires a minimal machine")
    w: list[tuple] = []
    for i, s in enumerate(m.states):
        for t in m.states[i + 1:]:
            if any(m.run_from(s, word)[0] != m.run_from(t, word)[0] for word in w):
                continue
            gamma = m.distinguishing_trace(s, t)
            if gamma is None:
                raise TestGenError(f"states {s!r} and {t!r} are not distinguishable")
            w.append(gamma)
    return w


def w_method(m: MealyMachine, m_bound: int) -> TestSuite:
    """Classical construction: cover . inputs^{<=k} . characterization set."""
    _require_testable(m, m_bound)
    n = len(m.states)
    k = m_bound - n + 1
    cover = state_cover(m)
    w = characterization_set(m) or [()]
    closure: set[tuple] = set()
    for v in cover:
        for length in range(k + 1):
            for word in product(m.inputs, repeat=length):
                for u in w:
                    _close_prefixes(closure, v + word + u)
    return _to_suite(m, closure, "w", m_bound)


# ---------------------------------------------------------------------------
# Orthogonal completeness checker
# ---------------------------------------------------------------------------

@dataclass
class CompletenessReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return "suite completeness: PASS"
        lines = ["suite completeness: FAIL"]
        lines.extend(f"  {v}" for v in self.violations)
        return "\n".join(lines)


def check_h_completeness(m: MealyMachine, m_bound: int, ts: TestSuite) -> CompletenessReport:
    """Re-verify the H-conditions of a suite by direct enumeration.

    Independent of the generator: membership, pair enumeration, and suffix
    search are all recomputed from scratch here.
    """
    _require_testable(m, m_bound)
    report = CompletenessReport()
    n = len(m.states)
    k = m_bound - n + 1

    # the suite as a prefix-closed trace set
    suite_traces: set[tuple] = {()}
    for case in ts.cases:
        expected, _ = m.run(case.inputs)
        if expected != case.expected:
            report.violations.append(
                f"expected outputs of case {case.inputs} disagree with the reference"
            )
        for i in range(len(case.inputs) + 1):
            suite_traces.add(tuple(case.inputs[:i]))

    # own breadth-first state cover
    access: dict[str, tuple] = {m.initial: ()}
    frontier = [m.initial]
    while frontier:
        nxt = []
        for s in frontier:
            for x in m.inputs:
                t = m.transitions[(s, x)][0]
                if t not in access:
                    access[t] = access[s] + (x,)
                    nxt.append(t)
        frontier = nxt
    cover = sorted(access.values(), key=lambda t: (len(t), _trace_key(m, t)))

    for v in cover:
        if v not in suite_traces:
            report.violations.append(f"H1: cover trace {v} missing")

    for v in cover:
        for word in product(m.inputs, repeat=k):
            if v + word not in suite_traces:
                report.violations.append(f"H2: traversal trace {v + word} missing")

    extensions = []
    for v in cover:
        for length in range(k + 1):
            for word in product(m.inputs, repeat=length):
                extensions.append(v + word)

    def distinguished_in_suite(alpha: tuple, beta: tuple) -> bool:
        sa = m.run(alpha)[1]
        sb = m.run(beta)[1]
        if sa == sb:
            return True
        for t in suite_traces:
            if len(t) <= len(alpha) or t[:len(alpha)] != alpha:
                continue
            gamma = t[len(alpha):]
            if beta + gamma not in suite_traces:
                continue
            if m.run_from(sa, gamma)[0] != m.run_from(sb, gamma)[0]:
                return True
        return False

    cover_set = set(cover)
    for i, alpha in enumerate(cover):
        for beta in cover[i + 1:]:
            if not distinguished_in_suite(alpha, beta):
                report.violations.append(f"H3(a): pair ({alpha}, {beta}) not distinguished")
    for alpha in cover:
        for beta in extensions:
            if beta in cover_set:
                continue
            if not distinguished_in_suite(alpha, beta):
                report.violations.append(f"H3(b): pair ({alpha}, {beta}) not distinguished")
    for omega in extensions:
        for i in range(1, len(omega) + 1):
            for j in range(i + 1, len(omega) + 1):
                if not distinguished_in_suite(omega[:i], omega[:j]):
                    report.violations.append(
                        f"H3(c): prefixes ({omega[:i]}, {omega[:j]}) of {omega} not distinguished"
                    )
    return report
