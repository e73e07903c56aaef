"""Command-line entry point.

Exit codes: 0 ok, 1 I/O error, 2 invalid spec or capability, 3 budget
exceeded, 4 verification failed.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io as _io
import json
import os
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from evolab import io as eio
from evolab.adversaries import REGISTRY as ADVERSARIES
from evolab.adversaries import build_adversary
from evolab.catalog import REGISTRY as FAMILIES
from evolab.catalog import build_family
from evolab.core import BudgetError, CapabilityError, SpecError, require_enumerated
from evolab.dimensions import dimension_report
from evolab.engine import METRICS, monte_carlo, run_game
from evolab.learners import REGISTRY as LEARNERS
from evolab.learners import build_learner

EXIT_OK, EXIT_IO, EXIT_SPEC, EXIT_BUDGET, EXIT_VERIFY = 0, 1, 2, 3, 4

EPILOG = """exit codes:
  0  success
  1  I/O error (missing or unreadable file)
  2  invalid spec, parameters or capability mismatch
  3  enumeration budget exceeded (see --budget / EVOLAB_BUDGET)
  4  verification failed
"""


def _coerce(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return [_coerce(t) for t in text.split(",") if t]
    if "/" in text:
        try:
            return str(Fraction(text))
        except ValueError:
            pass
    return text


def parse_extra(tokens: Sequence[str]) -> Dict[str, Any]:
    """Turn leftover ``--key value`` pairs into a parameter dict."""
    out: Dict[str, Any] = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise SpecError(f"unexpected argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, val = key.split("=", 1)
            out[key] = _coerce(val)
            i += 1
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].startswith("--"):
            raise SpecError(f"missing value for --{key}")
        out[key] = _coerce(tokens[i + 1])
        i += 2
    return out


def _json_arg(text: Optional[str], what: str) -> Dict[str, Any]:
    if not text:
        return {}
    try:
        val = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{what} must be a JSON object: {exc}") from None
    if not isinstance(val, dict):
        raise SpecError(f"{what} must be a JSON object")
    return val


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _family_from_args(name: Optional[str], params: Dict[str, Any]) -> Any:
    if not name:
        raise SpecError("--family is required")
    eio.validate({"family": name, "params": params}, eio.FAMILY_SPEC_SCHEMA, "family spec")
    return build_family(name, params)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_dims(args: argparse.Namespace, extra: Dict[str, Any]) -> int:
    params = {**_json_arg(args.params, "--params"), **extra}
    family = _family_from_args(args.family, params)
    require_enumerated(family, "dims")
    gammas = args.gamma or ["1/4", "1/2", "1", "2"]
    report = dimension_report(
        family,
        args.T,
        [Fraction(g) for g in gammas],
        ldim=args.ldim,
        dsdim=args.dsdim,
        ds_cap=args.ds_cap,
        branching=True,
        witnesses=args.witnesses,
    )
    _emit(eio.dumps(report.to_dict()), args.out)
    return EXIT_OK


def _build_adv(name: str, family: Any, params: Dict[str, Any], T: Optional[int]) -> Any:
    if name not in ADVERSARIES:
        raise SpecError(f"unknown adversary {name!r}; known: {', '.join(sorted(ADVERSARIES))}")
    params = dict(params)
    if T is not None and "T" not in params and "T" in inspect.signature(ADVERSARIES[name]).parameters:
        params["T"] = T
    return build_adversary(name, family, params)


def _game_config(args: argparse.Namespace, extra: Dict[str, Any]) -> Dict[str, Any]:
    if args.config:
        cfg = eio.load_json(args.config)
    else:
        cfg = {
            "family": {"family": args.family, "params": {**_json_arg(args.params, "--params"), **extra}},
            "learner": {"learner": args.learner, "params": _json_arg(args.learner_params, "--learner-params"), "seed": args.learner_seed},
        }
        if args.stream:
            cfg["stream_file"] = args.stream
        else:
            cfg["adversary"] = {"adversary": args.adversary, "params": _json_arg(args.adversary_params, "--adversary-params"), "seed": args.adversary_seed}
        for key in ("T", "trials", "seed", "metric", "workers"):
            val = getattr(args, key)
            if val is not None:
                cfg[key] = val
        if args.family is None or args.learner is None or (args.adversary is None and args.stream is None):
            raise SpecError("game needs --config, or --family, --learner and --adversary/--stream")
    return eio.validate(cfg, eio.EXPERIMENT_SCHEMA, "experiment config")


def cmd_game(args: argparse.Namespace, extra: Dict[str, Any]) -> int:
    cfg = _game_config(args, extra)
    fam_spec = cfg["family"]
    family = build_family(fam_spec["family"], fam_spec.get("params", {}))
    lspec = cfg["learner"]
    learner = build_learner(lspec["learner"], family, lspec.get("params", {}))
    if "stream_file" in cfg:
        with open(cfg["stream_file"], encoding="utf-8") as fh:
            target: Any = eio.stream_from_csv(fh.read(), family)
        adv_seed = 0
    else:
        aspec = cfg["adversary"]
        target = _build_adv(aspec["adversary"], family, aspec.get("params", {}), cfg.get("T"))
        adv_seed = aspec.get("seed", 0)
    trials = cfg.get("trials", 1)
    out = args.out or cfg.get("out")
    csv_path = args.csv or cfg.get("csv")
    if trials > 1:
        summary = monte_carlo(learner, target, trials, cfg.get("seed", 0), cfg.get("metric", "mistakes"), workers=cfg.get("workers"))
        _emit(eio.dumps(summary.to_dict(include_trials=True)), out)
        return EXIT_OK
    report = run_game(learner, target, lspec.get("seed", 0), adv_seed)
    text = eio.dumps(report.to_dict())
    csv_text = None
    if csv_path:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "prediction", "truth", "mistake"])
        w.writerows(report.csv_rows())
        csv_text = buf.getvalue()
    _emit(text, out)
    if csv_text is not None:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, extra: Dict[str, Any]) -> int:
    from evolab import verify

    if extra:
        raise SpecError(f"verify takes no extra parameters, got {sorted(extra)}")
    results = verify.run_suite(args.suite)
    if args.suite == "all":
        first = {r.criterion: verify.to_json([r]) for r in results}
        results.append(verify.check_reproducibility(first))
    for r in results:
        print(r.line(), file=sys.stderr)
    payload = {"suite": args.suite, "passed": all(r.passed for r in results), "results": [r.to_dict() for r in results]}
    _emit(eio.dumps(payload), args.out)
    return EXIT_OK if payload["passed"] else EXIT_VERIFY


def cmd_family(args: argparse.Namespace, extra: Dict[str, Any]) -> int:
    family = _family_from_args(args.family, {**_json_arg(args.params, "--params"), **extra})
    if args.action == "export":
        require_enumerated(family, "family export")
        _emit(eio.family_to_csv(family), args.out)
    else:
        info = {"spec": family.spec(), "enumerated": family.enumerated, "capabilities": sorted(family.capabilities)}
        if family.enumerated:
            info.update(members=family.member_count, states=family.space.to_dict())
        _emit(eio.dumps(info), args.out)
    return EXIT_OK


def cmd_stream(args: argparse.Namespace, extra: Dict[str, Any]) -> int:
    family = _family_from_args(args.family, {**_json_arg(args.params, "--params"), **extra})
    adv = _build_adv(args.adversary, family, _json_arg(args.adversary_params, "--adversary-params"), args.T)
    stream = adv.sample(args.seed)
    _emit(eio.stream_to_csv(stream, family, seed=args.seed), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="evolab",
        description="Learnability of evolution families: dimensions, games and verification suites.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
    )
    p.add_argument("--budget", type=float, help="enumeration budget (overrides EVOLAB_BUDGET)")
    sub = p.add_subparsers(dest="command", required=True)

    fam_help = f"family name ({', '.join(sorted(FAMILIES))})"

    d = sub.add_parser("dims", help="compute dimensions of an enumerated family", allow_abbrev=False,
                       epilog="extra --key value pairs become family parameters, e.g. --n 2")
    d.add_argument("--family", required=True, help=fam_help)
    d.add_argument("--params", help="family parameters as a JSON object")
    d.add_argument("--T", type=int, default=4)
    d.add_argument("--gamma", action="append", help="gamma for E_gamma (repeatable, e.g. 1/2)")
    d.add_argument("--ldim", action="store_true", help="include the Littlestone dimension")
    d.add_argument("--dsdim", action="store_true", help="include the DS dimension")
    d.add_argument("--ds-cap", type=int, default=3)
    d.add_argument("--witnesses", action="store_true", help="include witness trees")
    d.add_argument("--out")
    d.set_defaults(func=cmd_dims)

    g = sub.add_parser("game", help="play one game or a Monte Carlo batch", allow_abbrev=False)
    g.add_argument("--config", help="experiment config JSON")
    g.add_argument("--family", help=fam_help)
    g.add_argument("--params", help="family parameters as a JSON object")
    g.add_argument("--learner", help=f"learner id ({', '.join(sorted(LEARNERS))})")
    g.add_argument("--learner-params")
    g.add_argument("--learner-seed", type=int, default=0)
    g.add_argument("--adversary", help=f"adversary id ({', '.join(sorted(ADVERSARIES))})")
    g.add_argument("--adversary-params")
    g.add_argument("--adversary-seed", type=int, default=0)
    g.add_argument("--stream", help="stream CSV (t,state) instead of an adversary")
    g.add_argument("--T", type=int)
    g.add_argument("--trials", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--metric", choices=METRICS)
    g.add_argument("--workers", type=int)
    g.add_argument("--out")
    g.add_argument("--csv", help="write the per-round transcript as CSV")
    g.set_defaults(func=cmd_game)

    v = sub.add_parser("verify", help="run a verification suite", allow_abbrev=False)
    v.add_argument("suite", choices=["realizable", "agnostic-markovian", "flow", "dimensions", "oracle", "all"])
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("family", help="export or describe a family", allow_abbrev=False)
    f.add_argument("action", choices=["export", "info"])
    f.add_argument("--family", required=True, help=fam_help)
    f.add_argument("--params")
    f.add_argument("--out")
    f.set_defaults(func=cmd_family)

    s = sub.add_parser("stream", help="sample a stream from an oblivious adversary as CSV", allow_abbrev=False)
    s.add_argument("--family", required=True, help=fam_help)
    s.add_argument("--params")
    s.add_argument("--adversary", required=True)
    s.add_argument("--adversary-params")
    s.add_argument("--T", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stream)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    try:
        if args.budget is not None:
            os.environ["EVOLAB_BUDGET"] = str(int(args.budget))
        extra = parse_extra(rest)
        return args.func(args, extra)
    except BudgetError as exc:
        print(f"evolab: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SpecError, CapabilityError) as exc:
        print(f"evolab: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except OSError as exc:
        print(f"evolab: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
