"""Shared fixtures and independent oracles for the test suite.

The brute-force functions here deliberately reimplement semantics by plain
enumeration so they can serve as oracles for the production code paths.
"""

from __future__ import annotations

import random
from itertools import product

from suptest.fsm import MealyMachine
from suptest.guards import EnumSort, IntSort, VarDecl
from suptest.sfsm import Sfsm, SfsmTransition
from suptest.guards import And, BoolConst, Comparison, Not, Or


def m0() -> MealyMachine:
    """Two-state reference machine used across the docs and tests."""
    return MealyMachine(
        states=["s0", "s1"],
        initial="s0",
        inputs=["a", "b"],
        outputs=["0", "1"],
        transitions={
            ("s0", "a"): ("s1", "1"),
            ("s0", "b"): ("s0", "0"),
            ("s1", "a"): ("s0", "0"),
            ("s1", "b"): ("s1", "1"),
        },
    )


def brute_outputs(m: MealyMachine, word) -> tuple:
    """Hand-rolled run: follow the map symbol by symbol."""
    state = m.initial
    outputs = []
    for x in word:
        state, y = m.transitions[(state, x)]
        outputs.append(y)
    return tuple(outputs)


def brute_equivalent(m1: MealyMachine, m2: MealyMachine, max_len: int) -> bool:
    """Exhaustive word enumeration up to max_len; the equivalence oracle's
    oracle.  For product state counts below max_len this is exact."""
    for length in range(1, max_len + 1):
        for word in product(m1.inputs, repeat=length):
            if brute_outputs(m1, word) != brute_outputs(m2, word):
                return False
    return True


def brute_distinguishable(m: MealyMachine, s: str, t: str, max_len: int) -> bool:
    for length in range(1, max_len + 1):
        for word in product(m.inputs, repeat=length):
            state1, state2 = s, t
            for x in word:
                state1, y1 = m.transitions[(state1, x)]
                state2, y2 = m.transitions[(state2, x)]
                if y1 != y2:
                    break
            else:
                continue
            return True
    return False


def random_machine(rng: random.Random, n: int, n_inputs: int, n_outputs: int,
                   max_tries: int = 200) -> MealyMachine:
    """Random complete, reachable, minimal machine with exactly n states."""
    if n > 1 and n_outputs < 2:
        n_outputs = 2  # a multi-state machine needs two outputs to be minimal
    inputs = [chr(ord("a") + i) for i in range(n_inputs)]
    outputs = [str(i) for i in range(n_outputs)]
    for _ in range(max_tries):
        states = [f"s{i}" for i in range(n)]
        transitions = {}
        feasible = True
        # spanning edges first: state i gets an inbound edge from some j < i
        for i in range(1, n):
            free = [
                (j, x) for j in range(i) for x in inputs
                if (states[j], x) not in transitions
            ]
            if not free:
                feasible = False
                break
            j, x = rng.choice(free)
            transitions[(states[j], x)] = (states[i], rng.choice(outputs))
        if not feasible:
            continue
        for s in states:
            for x in inputs:
                if (s, x) not in transitions:
                    transitions[(s, x)] = (rng.choice(states), rng.choice(outputs))
        m = MealyMachine(states, "s0", inputs, outputs, transitions)
        if len(m.reachable_states()) != n:
            continue
        if m.is_minimal():
            return m
    raise RuntimeError(f"could not generate a minimal {n}-state machine")


def random_sfsm(rng: random.Random) -> Sfsm:
    """Random deterministic, complete SFSM within the enumeration bound.

    Guards are built as disjunctions of input-class conjuncts over a random
    atom set, so per-state disjointness and completeness hold by
    construction.
    """
    decls = []
    n_vars = rng.randint(1, 3)
    for i in range(n_vars):
        if rng.random() < 0.5:
            decls.append(VarDecl(f"x{i}", IntSort(0, rng.randint(1, 3))))
        else:
            size = rng.randint(2, 3)
            decls.append(VarDecl(f"e{i}", EnumSort(tuple("uvw"[:size]))))
    out_decls = [VarDecl("y", IntSort(0, rng.randint(1, 2)), "controlled")]

    atoms = []
    for d in decls:
        if isinstance(d.sort, IntSort):
            atoms.append(Comparison(d.name, rng.choice(["<", "<=", ">", ">="]),
                                    rng.randint(d.sort.lo, d.sort.hi)))
        else:
            atoms.append(Comparison(d.name, "=", rng.choice(d.sort.literals)))
    atoms = atoms[: rng.randint(1, len(atoms))]

    def conjunct(signature):
        g = None
        for atom, positive in zip(atoms, signature):
            term = atom if positive else Not(atom)
            g = term if g is None else And(g, term)
        return g if g is not None else BoolConst(True)

    from suptest.guards import enumerate_valuations, eval_guard

    signatures = []
    for v in enumerate_valuations(decls):
        sig = tuple(eval_guard(a, v) for a in atoms)
        if sig not in signatures:
            signatures.append(sig)

    n_states = rng.randint(1, 4)
    states = [f"r{i}" for i in range(n_states)]
    outputs = [{"y": y} for y in out_decls[0].sort.values()]
    transitions = []
    for s in states:
        # group the classes randomly; one transition per group
        groups: dict[tuple, list] = {}
        for sig in signatures:
            key = (rng.choice(states), rng.randrange(len(outputs)))
            groups.setdefault(key, []).append(sig)
        for (target, out_index), sigs in groups.items():
            guard = None
            for sig in sigs:
                c = conjunct(sig)
                guard = c if guard is None else Or(guard, c)
            transitions.append(
                SfsmTransition(s, f"t{len(transitions)}", guard,
                               outputs[out_index], target)
            )
    return Sfsm(decls, out_decls, states, states[0], transitions)
