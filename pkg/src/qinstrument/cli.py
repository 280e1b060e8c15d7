"""Command-line front end.

Subcommands: ``validate``, ``classify``, ``report``, ``qq``, ``simulate``,
``search``.  Reports are JSON with sorted keys, written to stdout or
``--out``.  Exit codes: 0 success, 1 usage, 2 parse/validation failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from . import __version__, classify, effects, linalg, montecarlo, scenario, search
from . import instrument as qi
from .errors import (
    DegenerateVariance,
    ParseError,
    QInstrumentError,
    ValidationError,
    ZeroProbabilityConditioning,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

_REQUIRE_ALIASES = {
    "qoe": "qoe_deviation",
    "aa": "aa_residual",
    "aba": "aba_residual",
    "bab": "bab_residual",
    "qq": "qq_abs",
    "ftp": "ftp_abs",
    "ucomm": "u_comm_norm",
    "ocomm": "o_comm_norm",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _tuple_key(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _pair_table(mapping) -> dict:
    return {_tuple_key(k): float(v) for k, v in mapping.items()}


def parse_require(text: str) -> tuple:
    """Parse 'qoe>=0.05,aba<=1e-9,...' into effect constraints."""
    constraints = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        for comparator in ("<=", ">="):
            if comparator in token:
                name, _, threshold = token.partition(comparator)
                name = name.strip()
                diagnostic = _REQUIRE_ALIASES.get(name, name)
                try:
                    value = float(threshold)
                except ValueError:
                    raise ParseError(f"constraint {token!r}: threshold {threshold!r} is not a number") from None
                try:
                    constraints.append(search.EffectConstraint(diagnostic, comparator, value))
                except ValueError as exc:
                    raise ParseError(f"constraint {token!r}: {exc}") from None
                break
        else:
            raise ParseError(f"constraint {token!r}: expected '<=' or '>='")
    if not constraints:
        raise ParseError("--require: no constraints given")
    return tuple(constraints)


def _load_scenario(path: str) -> scenario.Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read scenario {path!r}: {exc}") from None
    return scenario.parse_scenario(text)


def _classify_entry(label: classify.ClassLabel) -> dict:
    return {
        "sharp": label.sharp,
        "repeatable": label.repeatable,
        "projective": label.projective,
        "invasive": label.invasive,
        "taxon": label.taxon,
    }


def run_analysis(scn: scenario.Scenario, analysis: dict, seed: int, trials: Optional[int] = None) -> dict:
    """Execute one analysis entry from a scenario and return its result record."""
    kind = analysis.get("kind")
    out = {"kind": kind}
    if kind == "validate":
        inst = scn.instrument(analysis["instrument"])
        diag = qi.validate(inst, analysis.get("tol", linalg.DEFAULT_TOL))
        out.update(
            instrument=analysis["instrument"],
            trace_residual=diag.trace_residual,
            choi_min_eigenvalue={repr(float(k)): v for k, v in diag.choi_min_eigenvalue.items()},
            passes=diag.passes,
        )
    elif kind == "classify":
        inst = scn.instrument(analysis["instrument"])
        label = classify.classify_label(inst, analysis.get("tol", classify.CLASSIFY_TOL))
        out.update(instrument=analysis["instrument"], **_classify_entry(label))
    elif kind == "invasiveness":
        inst = scn.instrument(analysis["instrument"])
        rho = scn.state(analysis["state"]) if "state" in analysis else None
        rep = classify.invasiveness(inst, rho, analysis.get("tol", classify.CLASSIFY_TOL))
        out.update(
            instrument=analysis["instrument"],
            global_noninvasive=rep.global_noninvasive,
            global_residual=rep.global_residual,
            state_noninvasive=rep.state_noninvasive,
            state_residual=rep.state_residual,
        )
    elif kind == "qoe":
        rep = effects.qoe_report(
            scn.instrument(analysis["a"]), scn.instrument(analysis["b"]), scn.state(analysis["state"])
        )
        out.update(
            a=analysis["a"],
            b=analysis["b"],
            state=analysis["state"],
            deviations=_pair_table(rep.deviations),
            trace_commutators=_pair_table(rep.trace_commutators),
            max_abs_deviation=rep.max_abs_deviation,
            shows_qoe=rep.shows_qoe,
        )
    elif kind == "rre":
        rep = effects.rre_report(
            scn.instrument(analysis["a"]), scn.instrument(analysis["b"]), scn.state(analysis["state"])
        )
        out.update(
            a=analysis["a"],
            b=analysis["b"],
            state=analysis["state"],
            aa_residual=rep.aa_residual,
            aba_residual=rep.aba_residual,
            bab_residual=rep.bab_residual,
        )
    elif kind == "qq":
        rep = effects.qq_value(
            scn.instrument(analysis["a"]), scn.instrument(analysis["b"]), scn.state(analysis["state"])
        )
        out.update(a=analysis["a"], b=analysis["b"], state=analysis["state"],
                   q=rep.q, q_alt=rep.q_alt, q_y=rep.q_y, q_n=rep.q_n)
    elif kind == "ftp":
        a = scn.instrument(analysis["a"])
        b = scn.instrument(analysis["b"])
        rho = scn.state(analysis["state"])
        residuals = {repr(float(y)): effects.ftp_residual(a, b, y, rho) for y in b.outcomes}
        out.update(a=analysis["a"], b=analysis["b"], state=analysis["state"], residuals=residuals)
    elif kind == "robertson":
        rep = effects.robertson_check(
            scn.observable(analysis["a"]), scn.observable(analysis["b"]), scn.state(analysis["state"])
        )
        out.update(a=analysis["a"], b=analysis["b"], state=analysis["state"],
                   lhs=rep.lhs, rhs=rep.rhs, holds=rep.holds)
    elif kind == "joint_existence":
        decomps = [linalg.spectral_decompose(scn.observable(name)) for name in analysis["observables"]]
        rep = effects.joint_existence(decomps, scn.state_vector(analysis["state"]), analysis.get("tol", 1e-10))
        out.update(
            observables=list(analysis["observables"]),
            state=analysis["state"],
            exists=rep.exists,
            max_disagreement=rep.max_disagreement,
            joint=None if rep.joint is None else _pair_table(rep.joint),
        )
    elif kind == "state_commutation":
        rep = effects.state_dependent_commutation(
            scn.observable(analysis["a"]),
            scn.observable(analysis["b"]),
            scn.instrument(analysis["ia"]),
            scn.instrument(analysis["ib"]),
            scn.state_vector(analysis["state"]) if analysis.get("pure", True) else scn.state(analysis["state"]),
        )
        out.update(
            a=analysis["a"], b=analysis["b"], ia=analysis["ia"], ib=analysis["ib"], state=analysis["state"],
            observable_term=rep.observable_term,
            update_term=rep.update_term,
            projection_term=rep.projection_term,
        )
    elif kind == "simulate":
        seq = [scn.instrument(name) for name in analysis["sequence"]]
        n = int(trials if trials is not None else analysis.get("trials", 10000))
        stats = montecarlo.simulate_sequence(seq, scn.state(analysis["state"]), n, seed)
        out.update(
            sequence=list(analysis["sequence"]),
            state=analysis["state"],
            trials=n,
            seed=seed,
            counts={_tuple_key(k): v for k, v in stats.counts.items()},
            frequencies={_tuple_key(k): v for k, v in stats.frequencies.items()},
        )
    elif kind == "search":
        constraints = parse_require(analysis["require"]) if isinstance(analysis.get("require"), str) else tuple(
            search.EffectConstraint(c["diagnostic"], c["comparator"], float(c["threshold"]))
            for c in analysis.get("require", [])
        )
        state = scn.state(analysis["state"]) if "state" in analysis else None
        budget = search.SearchBudget(
            restarts=int(analysis.get("restarts", 100)),
            max_iters=int(analysis.get("max_iters", 2000)),
            seed=int(analysis.get("seed", seed)),
        )
        result = search.search_effects(analysis["family"], search.EffectConstraintSet(constraints, state), budget)
        out.update(_search_result_doc(result))
    else:
        raise ValidationError(f"analysis kind {kind!r} is not supported")
    return out


def _search_result_doc(result: search.SearchResult) -> dict:
    return {
        "family": result.family,
        "params": [float(p) for p in result.params],
        "state": scenario.matrix_to_doc(result.state),
        "diagnostics": {k: float(v) for k, v in sorted(result.diagnostics.items())},
        "feasible": result.feasible,
        "objective": result.objective,
        "iterations": result.iterations,
        "restarts_used": result.restarts_used,
        "seed": result.seed,
    }


def _provenance(seed, tolerances) -> dict:
    return {"tool": "qinstrument", "version": __version__, "seed": seed, "tolerances": tolerances}


def _emit(report: dict, out_path: Optional[str]) -> None:
    import json

    text = json.dumps(report, sort_keys=True, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _cmd_validate(args) -> int:
    if args.instrument:
        with open(args.instrument, "r", encoding="utf-8") as fh:
            inst = scenario.load_instrument(fh.read())
        diag = qi.validate(inst, args.tol)
        report = {
            "provenance": _provenance(args.seed, {"validate": args.tol}),
            "trace_residual": diag.trace_residual,
            "choi_min_eigenvalue": {repr(float(k)): v for k, v in diag.choi_min_eigenvalue.items()},
            "passes": diag.passes,
        }
        _emit(report, args.out)
        return EXIT_OK if diag.passes else EXIT_INVALID
    scn = _load_scenario(args.scenario)
    results = {}
    all_pass = True
    for name, inst in sorted(scn.instruments.items()):
        diag = qi.validate(inst, args.tol)
        all_pass = all_pass and diag.passes
        results[name] = {
            "trace_residual": diag.trace_residual,
            "choi_min_eigenvalue": {repr(float(k)): v for k, v in diag.choi_min_eigenvalue.items()},
            "passes": diag.passes,
        }
    _emit({"provenance": _provenance(args.seed, {"validate": args.tol}), "instruments": results}, args.out)
    return EXIT_OK if all_pass else EXIT_INVALID


def _cmd_classify(args) -> int:
    scn = _load_scenario(args.scenario)
    tol = args.tol if args.tol is not None else scn.tolerances.get("classify", classify.CLASSIFY_TOL)
    results = {name: _classify_entry(classify.classify_label(inst, tol)) for name, inst in sorted(scn.instruments.items())}
    _emit({"provenance": _provenance(args.seed, {"classify": tol}), "instruments": results}, args.out)
    return EXIT_OK


def _cmd_report(args) -> int:
    scn = _load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else scn.seed
    analyses = [run_analysis(scn, analysis, seed, args.trials) for analysis in scn.analyses]
    report = {"provenance": _provenance(seed, scn.tolerances), "analyses": analyses}
    _emit(report, args.out)
    return EXIT_OK


def _cmd_qq(args) -> int:
    with open(args.data, "r", encoding="utf-8") as fh:
        counts_ab, counts_ba = scenario.ingest_contingency(fh.read())
    stats = montecarlo.empirical_qq(counts_ab, counts_ba)
    report = {
        "provenance": _provenance(args.seed, {}),
        "counts_ab": counts_ab.tolist(),
        "counts_ba": counts_ba.tolist(),
        "q_hat": stats.q_hat,
        "q_se": stats.q_se,
        "z": stats.z,
        "n_ab": stats.n_ab,
        "n_ba": stats.n_ba,
    }
    _emit(report, args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    scn = _load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else scn.seed
    analyses = [a for a in scn.analyses if a.get("kind") == "simulate"]
    if not analyses:
        raise ValidationError("scenario has no 'simulate' analyses")
    results = [run_analysis(scn, analysis, seed, args.trials) for analysis in analyses]
    _emit({"provenance": _provenance(seed, scn.tolerances), "analyses": results}, args.out)
    return EXIT_OK


def _cmd_search(args) -> int:
    constraints = parse_require(args.require)
    budget = search.SearchBudget(restarts=args.restarts, max_iters=args.max_iters, seed=args.seed)
    result = search.search_effects(args.family, search.EffectConstraintSet(constraints, None), budget)
    report = {"provenance": _provenance(args.seed, {}), "search": _search_result_doc(result)}
    _emit(report, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qinstrument", description="Quantum instrument diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=True):
        if scenario_required:
            p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--trials", type=int, default=None, help="override simulation trial count")

    p = sub.add_parser("validate", help="check trace preservation and complete positivity")
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--instrument", help="instrument JSON file")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=linalg.DEFAULT_TOL)
    p.set_defaults(func=_cmd_validate, needs_one_of=("scenario", "instrument"))

    p = sub.add_parser("classify", help="taxonomy labels for every instrument in a scenario")
    common(p)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("report", help="run the scenario's full analysis battery")
    common(p)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("qq", help="empirical QQ statistic from a contingency CSV")
    p.add_argument("--data", required=True, help="CSV with header order,a_answer,b_answer,count")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_qq)

    p = sub.add_parser("simulate", help="run the scenario's simulate analyses")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("search", help="search a family for prescribed effect combinations")
    p.add_argument("--family", required=True, help=f"one of {', '.join(search.family_names())}")
    p.add_argument("--require", required=True, help="e.g. 'qoe>=0.05,aba<=1e-9,bab<=1e-9,aa<=1e-9'")
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_search)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "needs_one_of", None) and not (args.scenario or args.instrument):
            raise _UsageError("validate needs --scenario or --instrument")
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ZeroProbabilityConditioning, DegenerateVariance) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QInstrumentError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
