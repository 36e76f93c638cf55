"""Command-line client for the scenario operations.

By default commands run in-process against the same engine the HTTP service
wraps; with --server URL they post the scenario to a running instance
instead. Artifacts (CSV/JSON) are written only by the in-process path; the
remote path prints the returned report.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .engine import (
    run_arbitrage,
    run_check_martingale,
    run_price,
    run_risk_neutral,
    run_validate,
)
from .errors import BinfiltError, NoSolutionError, ScenarioError
from .riskneutral import FreeValuePolicy
from .scenario import load_scenario


def _free_value_policy(spec: str | None):
    if spec is None:
        return None
    if spec in ("half", "zero", "one"):
        return FreeValuePolicy.constant(spec)
    if spec.startswith("table:"):
        path = Path(spec.split(":", 1)[1])
        with path.open(encoding="utf-8") as fh:
            table = json.load(fh)
        return FreeValuePolicy.from_table(table)
    raise ScenarioError(f"--free-value must be half|zero|one|table:PATH, got {spec!r}")


def _overrides(args) -> dict:
    out = {}
    if args.exact:
        out["exact"] = True
    if args.tol is not None:
        out["check_tol"] = args.tol
    policy = _free_value_policy(args.free_value)
    if policy is not None:
        out["free_value"] = policy
    return out


def _post_remote(server: str, path: str, payload: dict) -> dict:
    import httpx

    resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=120.0)
    if resp.status_code >= 400:
        raise BinfiltError(f"server returned {resp.status_code}: {resp.text}")
    return resp.json()


def _scenario_doc(args) -> dict:
    import yaml

    doc = yaml.safe_load(Path(args.scenario).read_text(encoding="utf-8"))
    if args.exact:
        doc.setdefault("arithmetic", {})["exact"] = True
    if args.tol is not None:
        doc.setdefault("arithmetic", {})["check_tol"] = args.tol
    return doc


def cmd_validate(args) -> int:
    if args.server:
        out = _post_remote(args.server, "/validate", {"scenario": _scenario_doc(args)})
    else:
        out = run_validate(load_scenario(args.scenario, _overrides(args)))
    for step in out["schedule"]["steps"]:
        status = "ok" if step["null_preserving"] else "NOT null-preserving"
        print(f"step {step['step']:>2} [{step['kind']}] {status}")
    print(f"p non-trivial: {out['p_non_trivial']}")
    na = out["na_precondition"]
    print(f"|mu - r| = {na['abs_mu_minus_r']:.6g} vs sigma = {na['sigma']:.6g} "
          f"=> {na['regime']}")
    for note in out["notes"]:
        print(f"note: {note}")
    print("legal" if out["legal"] else "NOT legal under the subjective measures")
    return 0 if out["legal"] and na["holds"] else 1


def cmd_risk_neutral(args) -> int:
    if args.server:
        out = _post_remote(args.server, "/risk-neutral", {"scenario": _scenario_doc(args)})
    else:
        out_dir = Path(args.out) if args.out else None
        out = run_risk_neutral(load_scenario(args.scenario, _overrides(args)), out_dir)
    check = out["transition_check"]
    print(f"max violation (supported steps): {check['max_violation_supported']:.3e}")
    print(f"max violation (all steps):       {check['max_violation_all']:.3e}")
    if check["feeder_steps"]:
        print(f"structural residual at steps {check['feeder_steps']}: the equation "
              f"feeding a forgetting step is unsatisfiable (visible branch carries "
              f"conditional mass c0 != 1)")
    print(f"legal risk-neutral filtration: {out['legality']['legal']}")
    for a in out.get("artifacts", []):
        print(f"wrote {a}")
    return 0 if check["passes"] and out["legality"]["legal"] else 1


def cmd_price(args) -> int:
    if args.server:
        out = _post_remote(args.server, "/price", {"scenario": _scenario_doc(args)})
    else:
        out_dir = Path(args.out) if args.out else None
        out = run_price(load_scenario(args.scenario, _overrides(args)), out_dir)
    claim = out["claim"]
    strike = "" if claim["strike"] is None else f" K={claim['strike']:g}"
    print(f"claim: {claim['kind']}{strike}, T={claim['horizon']}")
    print(f"price at time 0 (cash):       {out['price0_cash']:.10g}")
    print(f"price at time 0 (discounted): {out['price0_discounted']:.10g}")
    rep = out["replication"]
    for c in rep["checks"]:
        print(f"replication check {c['name']}: {'pass' if c['passed'] else 'FAIL'} "
              f"(max error {c['max_error']:.3e})")
    if rep["vacuous_atoms"]:
        print(f"replication vacuous on {len(rep['vacuous_atoms'])} zero-mass terminal atoms")
    for a in out.get("artifacts", []):
        print(f"wrote {a}")
    return 0 if rep["passed"] else 1


def cmd_arbitrage(args) -> int:
    if args.server:
        out = _post_remote(args.server, "/arbitrage", {"scenario": _scenario_doc(args)})
    else:
        out_dir = Path(args.out) if args.out else None
        out = run_arbitrage(load_scenario(args.scenario, _overrides(args)), out_dir)
    drivers = out["gain_drivers"]
    print(f"one-step excess returns: up {drivers['up_move']:+.6g}, "
          f"down {drivers['down_move']:+.6g}")
    if not out["found"]:
        print("none")
        return 0
    cert = out["certificate"]
    print(f"arbitrage found ({cert['regime']}): min gain {cert['min_gain']:.3e}, "
          f"first positive-gain step {cert['positive_step']} "
          f"with probability {cert['positive_prob']:.6g}")
    if cert.get("note"):
        print(f"note: {cert['note']}")
    for a in out.get("artifacts", []):
        print(f"wrote {a}")
    return 0


def cmd_check_martingale(args) -> int:
    custom_rows = None
    if args.process_csv:
        with open(args.process_csv, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["word", "value"]:
                raise ScenarioError(
                    f"{args.process_csv}: expected header word,value"
                )
            custom_rows = [(row[0], row[1]) for row in reader]
    process = "custom" if custom_rows is not None else args.process
    if args.server:
        payload = {
            "scenario": _scenario_doc(args),
            "process": process,
            "under": args.under,
            "custom_rows": custom_rows,
        }
        out = _post_remote(args.server, "/check-martingale", payload)
    else:
        out = run_check_martingale(
            load_scenario(args.scenario, _overrides(args)),
            process, args.under, custom_rows,
        )
    report = out["report"]
    print(f"process {out['process']} under {out['under']}:")
    for step in report["steps"]:
        dev = step["max_deviation"]
        extra = f" ({step['detail']})" if step.get("detail") else ""
        print(f"  step {step['step']:>2}: {step['status']} "
              f"max deviation {dev:.3e}{extra}")
    verdict = "martingale" if report["is_martingale"] else "NOT a martingale"
    print(f"{verdict} within tol {report['tol']:.1e}")
    return 0 if report["is_martingale"] else 1


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("binfilt.service.app:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binfilt",
        description="Binomial pricing over information-distorting filtrations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out=True):
        p.add_argument("--scenario", required=True, help="scenario YAML file")
        p.add_argument("--out", default=None if needs_out else argparse.SUPPRESS,
                       help="directory for artifact files")
        p.add_argument("--exact", action="store_true",
                       help="exact rational arithmetic")
        p.add_argument("--tol", type=float, default=None,
                       help="override the check tolerance")
        p.add_argument("--free-value", default=None,
                       help="free kernel policy: half|zero|one|table:PATH")
        p.add_argument("--server", default=None,
                       help="POST to a running service instead of running in-process")

    p = sub.add_parser("validate", help="schedule legality and market regime")
    add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("risk-neutral", help="solve the risk-neutral measures")
    add_common(p)
    p.set_defaults(func=cmd_risk_neutral)

    p = sub.add_parser("price", help="price and replicate the scenario claim")
    add_common(p)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("arbitrage", help="construct an arbitrage if one exists")
    add_common(p)
    p.set_defaults(func=cmd_arbitrage)

    p = sub.add_parser("check-martingale", help="one-step martingale audit")
    add_common(p)
    p.add_argument("--process", default="discounted_stock",
                   choices=["stock", "bond", "discounted_stock"],
                   help="named process to check")
    p.add_argument("--process-csv", default=None,
                   help="CSV (word,value) defining a custom process")
    p.add_argument("--under", default="P", choices=["P", "Q"],
                   help="measure family to check against")
    p.set_defaults(func=cmd_check_martingale)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, NoSolutionError, BinfiltError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
