"""Command-line interface.

Exit codes are a stable contract: 0 for success (violation found, test
passed, classification positive), 10 for a negative result, 11 when the
input state fails a by-construction precondition (no hidden-variable model
exists for it), and 2 for malformed input.
"""

import argparse
import json
import os
import sys

import numpy as np

from .bell import (
    chsh_max,
    find_witness,
    witness_to_dict,
    yurke_stoler_postselect,
)
from .circuits import (
    circuit_from_dict,
    circuit_to_dict,
    load_circuit,
    reck_decompose,
    run_circuit,
)
from .classify import is_single_mode_type
from .errors import FockoptError, InvalidFile, ZeroOutcome
from .lhv import DEFAULT_SEED, EpistemicSpec, compare_lhv_quantum
from .states import embed, load_state, state_to_dict

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NEGATIVE = 10
EXIT_PRECONDITION = 11


def _fmt(value):
    return f"{value:.12g}"


def _print_json(payload):
    print(json.dumps(payload, indent=1))


def _complex_matrix_json(m):
    return [[[z.real, z.imag] for z in row] for row in np.asarray(m, dtype=complex)]


def _load_unitary(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidFile(
            f"JSON parse error: {exc.msg}", line=exc.lineno, column=exc.colno
        ) from exc
    try:
        rows = data["matrix"]
        u = np.array(
            [[complex(entry[0], entry[1]) for entry in row] for row in rows],
            dtype=complex,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InvalidFile(f"malformed unitary description: {exc}") from exc
    return u


def _resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FOCKOPT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InvalidFile(f"FOCKOPT_SEED must be an integer, got {env!r}") from exc
    return DEFAULT_SEED


def _cmd_classify(args):
    state = load_state(args.state)
    verdict = is_single_mode_type(state, tol=args.tol)
    if args.format == "json":
        payload = {
            "single_mode": verdict.single_mode,
            "alpha": None
            if verdict.alpha is None
            else [[a.real, a.imag] for a in verdict.alpha],
            "residual": verdict.residual if verdict.residual != float("inf") else None,
            "violation": list(verdict.violation) if verdict.violation else None,
        }
        _print_json(payload)
    elif verdict.single_mode:
        print("SINGLE-MODE-TYPE")
        if verdict.alpha is None:
            print("alpha: undefined (vacuum)")
        else:
            entries = ", ".join(
                f"{a.real:.12g}{a.imag:+.12g}j" for a in verdict.alpha
            )
            print(f"alpha (up to global phase): [{entries}]")
        print(f"worst residual: {_fmt(verdict.residual)}")
    else:
        print("NOT-SINGLE-MODE")
        if verdict.violation is not None:
            print(f"first violated coefficient: {verdict.violation}")
    return EXIT_OK if verdict.single_mode else EXIT_NEGATIVE


def _cmd_evolve(args):
    state = load_state(args.state)
    circuit = load_circuit(args.circuit)
    if state.n_modes < circuit.n_modes:
        state = embed(state, circuit.n_modes, range(state.n_modes))
    try:
        out, prob = run_circuit(state, circuit)
    except ZeroOutcome as exc:
        print(f"herald never fires: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    if args.output:
        from .states import save_state

        save_state(out, args.output)
    if args.format == "json":
        _print_json({"probability": prob, "state": state_to_dict(out)})
    else:
        print(f"herald probability: {_fmt(prob)}")
        if args.output:
            print(f"output state written to {args.output}")
        else:
            for occ, amp in sorted(out.items()):
                print(f"  {occ}: {amp.real:.12g}{amp.imag:+.12g}j")
    return EXIT_OK


def _cmd_ys_test(args):
    state = load_state(args.state)
    chi, prob = yurke_stoler_postselect(state)
    result = chsh_max(chi)
    if args.format == "json":
        _print_json(
            {
                "chsh": result.chsh,
                "violated": result.violated,
                "success_probability": prob,
                "settings": {
                    "party_A": [_complex_matrix_json(b) for b in result.settings_a],
                    "party_B": [_complex_matrix_json(b) for b in result.settings_b],
                },
            }
        )
    else:
        print(f"chsh: {_fmt(result.chsh)}")
        print(f"post-selection probability: {_fmt(prob)}")
        print(f"violated: {result.violated}")
    return EXIT_OK if result.violated else EXIT_NEGATIVE


def _cmd_witness(args):
    state = load_state(args.state)
    experiment = find_witness(state)
    if experiment is None:
        print("NO-VIOLATION-FOUND (state is of single-mode type)")
        return EXIT_NEGATIVE
    payload = witness_to_dict(experiment)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    if args.format == "json" or not args.output:
        _print_json(payload)
    else:
        print(f"chsh: {_fmt(experiment.result.chsh)}")
        print(f"success probability: {_fmt(experiment.result.success_probability)}")
        print(f"heralds: { {m + 1: c for m, c in sorted(experiment.heralds.items())} }")
        print(f"witness written to {args.output}")
    return EXIT_OK


def _cmd_lhv_compare(args):
    state = load_state(args.state)
    circuit = load_circuit(args.circuit)
    verdict = is_single_mode_type(state, tol=args.tol)
    if not verdict.single_mode:
        print(
            "state is not reducible to a single mode: it is a genuine non-local "
            "resource and admits no local hidden-variable model",
            file=sys.stderr,
        )
        return EXIT_PRECONDITION
    alpha = verdict.alpha
    if alpha is None:
        alpha = np.zeros(state.n_modes, dtype=complex)
        alpha[0] = 1.0
    seed = _resolve_seed(args)
    spec = EpistemicSpec(alpha, state.n_particles)
    report = compare_lhv_quantum(spec, circuit, shots=args.shots, seed=seed)
    if args.format == "json":
        _print_json(report.to_json_dict())
    elif args.format == "csv":
        print(report.to_csv())
    else:
        print(report.to_table())
    return EXIT_OK if report.passed else EXIT_NEGATIVE


def _cmd_decompose(args):
    u = _load_unitary(args.unitary)
    circuit = reck_decompose(u)
    payload = circuit_to_dict(circuit)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
        print(f"circuit written to {args.output}")
    else:
        _print_json(payload)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fockopt",
        description=(
            "Simulate definite-particle-number states in passive linear optics, "
            "classify single-mode-type states, construct Bell-violating "
            "experiments, and cross-check the local hidden-variable model."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="decide whether a state is of single-mode type")
    p.add_argument("state", help="state file (JSON)")
    p.add_argument("--tol", type=float, default=1e-8, help="relative residual tolerance")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("evolve", help="run a circuit file on a state file")
    p.add_argument("state")
    p.add_argument("circuit")
    p.add_argument("--output", help="write the heralded output state here")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser(
        "ys-test", help="two-particle two-mode Bell test with optimal settings"
    )
    p.add_argument("state")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_ys_test)

    p = sub.add_parser("witness", help="search for a Bell-violating experiment")
    p.add_argument("state")
    p.add_argument("--output", help="write the witness JSON here")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_witness)

    p = sub.add_parser(
        "lhv-compare",
        help="compare hidden-variable Monte Carlo against exact quantum statistics",
    )
    p.add_argument("state")
    p.add_argument("circuit")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None, help="overrides FOCKOPT_SEED")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.set_defaults(func=_cmd_lhv_compare)

    p = sub.add_parser("decompose", help="triangular mesh decomposition of a unitary")
    p.add_argument("unitary", help='JSON file {"matrix": [[[re,im],...],...]}')
    p.add_argument("--output", help="write the circuit JSON here")
    p.set_defaults(func=_cmd_decompose)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidFile as exc:
        location = ""
        if exc.line is not None:
            location = f" (line {exc.line}, column {exc.column})"
        print(f"input error{location}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FockoptError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
