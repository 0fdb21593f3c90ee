"""Command-line pipeline: behaviour -> program/reference -> suites -> verdicts.

Every artefact is written in the canonical encoding and embeds the
fingerprints of the artefacts it was derived from, so a pipeline run is
reproducible byte for byte and mismatched artefacts are refused.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness, mutation, sfsm, supervisor, testgen
from .encoding import canonical_dumps, fingerprint
from .fsm import MealyMachine
from .guards import DEFAULT_ENUM_BOUND
from .sfsm import POLICY_ERROR, Sfsm

CONFIG_ENV = "SUPTEST_CONFIG"

DEFAULTS = {
    "enum_bound": DEFAULT_ENUM_BOUND,
    "policy": POLICY_ERROR,
    "m_extra": 0,  # mBound = n + m_extra unless --m given
    "step_timeout": harness.DEFAULT_STEP_TIMEOUT,
    "mutation_limit": None,
    "mutation_seed": 0,
}


class CliError(Exception):
    pass


def load_config() -> dict:
    config = dict(DEFAULTS)
    path = os.environ.get(CONFIG_ENV)
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            config.update(json.load(fh))
    return config


# ---------------------------------------------------------------------------
# Artefact I/O
# ---------------------------------------------------------------------------

def write_artifact(path, payload: dict, inputs: dict | None = None) -> None:
    doc = dict(payload)
    if inputs:
        doc["derivedFrom"] = inputs
    Path(path).write_text(canonical_dumps(doc), encoding="utf-8")


def read_artifact(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def check_inputs(doc: dict, expected: dict, path) -> None:
    stored = doc.get("derivedFrom", {})
    for name, fp in expected.items():
        if name in stored and stored[name] != fp:
            raise CliError(
                f"{path}: fingerprint mismatch for {name} "
                f"(artefact has {stored[name]}, current input is {fp})"
            )


def load_machine(path) -> MealyMachine:
    return MealyMachine.from_obj(read_artifact(path))


def load_sfsm(path) -> Sfsm:
    return Sfsm.from_obj(read_artifact(path))


def load_program(path) -> supervisor.GuardedActionProgram:
    return supervisor.GuardedActionProgram.from_obj(read_artifact(path))


def load_suite(path) -> testgen.TestSuite:
    obj = read_artifact(path)
    suite = testgen.TestSuite.from_obj(obj)
    if suite.concrete:
        suite.cases = [
            testgen.TestCase(
                tuple(dict(v) if isinstance(v, dict) else v for v in c.inputs),
                tuple(dict(v) if isinstance(v, dict) else v for v in c.expected),
            )
            for c in suite.cases
        ]
    return suite


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_translate(args, config) -> int:
    behaviour = supervisor.load_behavior(args.behaviour)
    bound = config["enum_bound"]
    program = supervisor.to_guarded_actions(behaviour, config["policy"], bound)
    reference = supervisor.to_test_reference(behaviour, config["policy"], bound)
    report = supervisor.check_hypotheses(program, reference)
    for warning in behaviour.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    behaviour_fp = fingerprint(read_artifact(args.behaviour))
    write_artifact(out / "program.gap", program.to_obj(), {"behaviour": behaviour_fp})
    write_artifact(out / "reference.sfsm", reference.to_obj(), {"behaviour": behaviour_fp})
    print(report.summary())
    return 0 if report.ok else 1


def cmd_classes(args, config) -> int:
    reference = load_sfsm(args.sfsm)
    partition = sfsm.input_classes(reference, config["enum_bound"])
    write_artifact(args.out or "partition.json", partition.to_obj(),
                   {"sfsm": reference.fingerprint()})
    print(f"{len(partition.classes)} input equivalence classes")
    return 0


def cmd_abstract(args, config) -> int:
    reference = load_sfsm(args.sfsm)
    machine, amap = sfsm.abstract_to_fsm(reference, config["policy"], config["enum_bound"])
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    ref_fp = reference.fingerprint()
    write_artifact(out / "fsm.json", machine.to_obj(), {"sfsm": ref_fp})
    write_artifact(out / "abstraction.json", amap.to_obj(), {"sfsm": ref_fp})
    print(f"FSM: {len(machine.states)} states, {len(machine.inputs)} inputs, "
          f"{len(machine.outputs)} outputs")
    return 0


def _m_bound(args, config, machine) -> int:
    if getattr(args, "m", None) is not None:
        return args.m
    return len(machine.states) + config["m_extra"]


def cmd_generate(args, config) -> int:
    machine = load_machine(args.fsm)
    m_bound = _m_bound(args, config, machine)
    if args.method == "h":
        suite = testgen.h_method(machine, m_bound)
    else:
        suite = testgen.w_method(machine, m_bound)
    write_artifact(args.out or f"suite-{args.method}.json", suite.to_obj(),
                   {"fsm": machine.fingerprint()})
    stats = testgen.suite_stats(suite)
    print(f"{args.method}-suite: {stats['cases']} cases, "
          f"{stats['total_input_symbols']} input symbols, "
          f"max length {stats['max_length']}")
    return 0


def cmd_concretize(args, config) -> int:
    suite = load_suite(args.suite)
    partition_doc = read_artifact(args.partition)
    abstraction_doc = read_artifact(args.abstraction)
    p_fp = partition_doc.get("derivedFrom", {}).get("sfsm")
    a_fp = abstraction_doc.get("derivedFrom", {}).get("sfsm")
    if p_fp and a_fp and p_fp != a_fp:
        raise CliError("partition and abstraction map come from different SFSMs")
    partition = sfsm.InputClassPartition.from_obj(partition_doc)
    amap = sfsm.AbstractionMap.from_obj(abstraction_doc)
    concrete = sfsm.concretize_suite(suite, partition, amap)
    write_artifact(args.out or "suite-concrete.json", concrete.to_obj(),
                   {"suite": fingerprint(suite.to_obj())})
    print(f"concretized {len(concrete.cases)} cases")
    return 0


def cmd_check_suite(args, config) -> int:
    machine = load_machine(args.fsm)
    suite = load_suite(args.suite)
    if suite.reference_fingerprint != machine.fingerprint():
        raise CliError("suite was generated from a different reference machine")
    report = testgen.check_h_completeness(machine, suite.m_bound, suite)
    print(report.summary())
    return 0 if report.ok else 1


def cmd_run(args, config) -> int:
    suite = load_suite(args.suite)
    with harness.SutAdapter(args.sut, config["step_timeout"]) as sut:
        report = harness.run_suite(sut, suite)
    if args.out:
        write_artifact(args.out, report.to_obj(),
                       {"suite": fingerprint(suite.to_obj())})
    print(report.summary())
    return 0 if report.complete_pass else 1


def cmd_serve_reference(args, config) -> int:
    program = load_program(args.program)
    harness.serve_reference(program)
    return 0


def cmd_serve_machine(args, config) -> int:
    machine = load_machine(args.fsm)
    harness.serve_machine(machine)
    return 0


def cmd_mutate(args, config) -> int:
    suite = load_suite(args.suite)
    if args.kind == "fsm":
        target = load_machine(args.target)
    else:
        target = load_program(args.target)
    operators = args.ops.split(",") if args.ops else None
    limit = args.limit if args.limit is not None else config["mutation_limit"]
    mutants = mutation.generate_mutants(target, operators, limit,
                                        config["mutation_seed"])
    outcomes = [
        mutation.classify(target, suite, m, via="oracle", bound=config["enum_bound"])
        for m in mutants
    ]
    report = mutation.mutation_report(outcomes)
    if args.out:
        write_artifact(args.out, report.to_obj(), {"suite": fingerprint(suite.to_obj())})
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    print(report.summary())
    return 0 if report.counts[mutation.ESCAPED] == 0 and report.counts["ERROR"] == 0 else 1


def cmd_render(args, config) -> int:
    obj = read_artifact(args.model)
    if "input_vars" in obj:
        text = sfsm.export_dot(Sfsm.from_obj(obj), bound=config["enum_bound"])
    else:
        text = MealyMachine.from_obj(obj).to_dot()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_pipeline(args, config) -> int:
    out = Path(args.out or "artefacts")
    out.mkdir(parents=True, exist_ok=True)
    bound = config["enum_bound"]

    behaviour = supervisor.load_behavior(args.behaviour)
    behaviour_fp = fingerprint(read_artifact(args.behaviour))
    program = supervisor.to_guarded_actions(behaviour, config["policy"], bound)
    reference = supervisor.to_test_reference(behaviour, config["policy"], bound)
    hypo = supervisor.check_hypotheses(program, reference)
    write_artifact(out / "program.gap", program.to_obj(), {"behaviour": behaviour_fp})
    write_artifact(out / "reference.sfsm", reference.to_obj(), {"behaviour": behaviour_fp})
    print(hypo.summary())
    if not hypo.ok:
        return 1

    ref_fp = reference.fingerprint()
    partition = sfsm.input_classes(reference, bound)
    write_artifact(out / "partition.json", partition.to_obj(), {"sfsm": ref_fp})
    machine, amap = sfsm.abstract_to_fsm(reference, config["policy"], bound)
    write_artifact(out / "fsm.json", machine.to_obj(), {"sfsm": ref_fp})
    write_artifact(out / "abstraction.json", amap.to_obj(), {"sfsm": ref_fp})

    m_bound = _m_bound(args, config, machine)
    suite = testgen.h_method(machine, m_bound)
    write_artifact(out / "suite-h.json", suite.to_obj(), {"fsm": machine.fingerprint()})
    stats = testgen.suite_stats(suite)
    print(f"h-suite: {stats['cases']} cases, {stats['total_input_symbols']} symbols")

    completeness = testgen.check_h_completeness(machine, m_bound, suite)
    print(completeness.summary())
    if not completeness.ok:
        return 1

    concrete = sfsm.concretize_suite(suite, partition, amap)
    write_artifact(out / "suite-concrete.json", concrete.to_obj(),
                   {"suite": fingerprint(suite.to_obj())})

    (out / "reference.dot").write_text(sfsm.export_dot(reference, bound=bound),
                                       encoding="utf-8")
    (out / "fsm.dot").write_text(machine.to_dot(), encoding="utf-8")

    sut_command = args.sut or f"{sys.executable} -m suptest serve-reference {out / 'program.gap'}"
    with harness.SutAdapter(sut_command, config["step_timeout"]) as sut:
        report = harness.run_suite(sut, concrete)
    write_artifact(out / "report.json", report.to_obj(),
                   {"suite": fingerprint(concrete.to_obj())})
    print(report.summary())
    return 0 if report.complete_pass else 1


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="suptest",
        description="Conformance testing toolkit for supervisory safety controllers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("translate", help="behaviour -> guarded-action program + SFSM")
    p.add_argument("behaviour")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("classes", help="input equivalence classes of an SFSM")
    p.add_argument("sfsm")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classes)

    p = sub.add_parser("abstract", help="SFSM -> FSM + abstraction map")
    p.add_argument("sfsm")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_abstract)

    p = sub.add_parser("generate", help="derive a complete abstract test suite")
    p.add_argument("fsm")
    p.add_argument("--method", choices=("h", "w"), default="h")
    p.add_argument("--m", type=int, help="assumed max SUT state count")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("concretize", help="refine an abstract suite to valuations")
    p.add_argument("suite")
    p.add_argument("partition")
    p.add_argument("abstraction")
    p.add_argument("--out")
    p.set_defaults(func=cmd_concretize)

    p = sub.add_parser("check-suite", help="orthogonal H-completeness check")
    p.add_argument("fsm")
    p.add_argument("suite")
    p.set_defaults(func=cmd_check_suite)

    p = sub.add_parser("run", help="execute a concrete suite against a SUT")
    p.add_argument("suite")
    p.add_argument("--sut", required=True, help="SUT command line")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve-reference", help="run a program as reference SUT")
    p.add_argument("program")
    p.set_defaults(func=cmd_serve_reference)

    p = sub.add_parser("serve-machine", help="run an FSM as a symbolic SUT")
    p.add_argument("fsm")
    p.set_defaults(func=cmd_serve_machine)

    p = sub.add_parser("mutate", help="mutation analysis of a suite")
    p.add_argument("target")
    p.add_argument("--kind", choices=("fsm", "program"), default="program")
    p.add_argument("--suite", required=True)
    p.add_argument("--ops", help="comma-separated operator names")
    p.add_argument("--limit", type=int)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("render", help="DOT export of an SFSM or FSM")
    p.add_argument("model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("pipeline", help="full pipeline, one artefact directory")
    p.add_argument("behaviour")
    p.add_argument("--sut", help="SUT command line (default: bundled reference)")
    p.add_argument("--m", type=int)
    p.add_argument("--out", help="artefact directory")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config()
    try:
        return args.func(args, config)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
