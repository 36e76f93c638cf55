"""Run-level operations shared by the HTTP service and the CLI.

Each function takes a parsed Scenario, returns a JSON-able report dict, and
(optionally) writes artifact files. File writes go through a temp file and an
atomic rename so failed runs leave nothing half-written.
"""
from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

from .condexp import is_martingale
from .errors import BinfiltError, ScenarioError
from .filtration import validate_schedule
from .market import (
    bond_process,
    construct_arbitrage,
    discounted_stock,
    stock_process,
)
from .measure import product_measures
from .numerics import as_float, number_str
from .riskneutral import (
    check_C_legality,
    solve_schedule,
    transition_check,
)
from .scenario import Scenario
from .valuation import replicate, verify_replication


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def run_validate(sc: Scenario) -> dict:
    """Schedule legality under the subjective measures, non-triviality of p,
    and the no-arbitrage precondition |mu - r| < sigma."""
    measures = product_measures(sc.prob_seq, sc.schedule.horizon, sc.tolerances)
    report = validate_schedule(sc.schedule, measures)
    band = sc.params.excess_band
    notes = list(report.notes)
    if not report.legal:
        notes.append(
            "steps {} are not null-preserving under the subjective measures; "
            "pricing can still proceed under the solved risk-neutral measures".format(
                report.failing_steps()
            )
        )
    out = {
        "schedule": report.to_dict(),
        "p_non_trivial": sc.prob_seq.non_trivial,
        "na_precondition": {
            "holds": band < 0,
            "abs_mu_minus_r": as_float(abs(sc.params.mu - sc.params.r)),
            "sigma": as_float(sc.params.sigma),
            "regime": "no-arbitrage band" if band < 0 else "arbitrage regime",
        },
        "legal": report.legal,
        "notes": notes,
    }
    return out


def run_risk_neutral(sc: Scenario, out_dir: Path | None = None) -> dict:
    solution = solve_schedule(sc.params, sc.schedule, sc.free_policy,
                              sc.prob_seq, sc.tolerances)
    check = transition_check(solution.measures, sc.schedule, sc.params,
                             sc.tolerances.check_tol)
    legality = check_C_legality(solution, sc.schedule)
    result = {
        "solution": solution.to_dict(),
        "transition_check": check.to_dict(),
        "legality": legality.to_dict(),
    }
    if out_dir is not None:
        _atomic_write(out_dir / "solution.json", json.dumps(result["solution"], indent=2))
        for n, m in enumerate(solution.measures):
            _atomic_write(
                out_dir / f"Q_level_{n}.csv",
                _csv_text(["word", "weight"],
                          [(w, number_str(x)) for w, x in m.to_rows()]),
            )
        result["artifacts"] = [str(out_dir / "solution.json")] + [
            str(out_dir / f"Q_level_{n}.csv") for n in range(len(solution.measures))
        ]
    return result


def run_price(sc: Scenario, out_dir: Path | None = None) -> dict:
    if sc.claim_spec is None:
        raise ScenarioError("pricing needs a 'claim' block in the scenario")
    stock, bond = sc.stock_and_bond()
    claim = sc.claim(stock)
    solution = solve_schedule(sc.params, sc.schedule, sc.free_policy,
                              sc.prob_seq, sc.tolerances)
    result_val = replicate(claim, solution, sc.schedule, stock, bond)
    audit = verify_replication(result_val, claim, stock, bond, sc.schedule,
                               solution, sc.tolerances.check_tol)
    prices = result_val.prices
    out = {
        "claim": {"kind": claim.descriptor,
                  "strike": None if claim.strike is None else as_float(claim.strike),
                  "horizon": claim.horizon},
        "price0_cash": as_float(prices.price0()),
        "price0_discounted": as_float(prices.discounted[0].at(0)),
        "replication": audit.to_dict(),
        "rows": result_val.rows(),
    }
    if out_dir is not None:
        _atomic_write(
            out_dir / "valuation.csv",
            _csv_text(
                ["level", "word", "discounted_price", "cash_price",
                 "phi_next", "psi_next", "visible"],
                [[r["level"], r["word"], r["discounted_price"], r["cash_price"],
                  r["phi_next"], r["psi_next"], int(r["visible"])]
                 for r in out["rows"]],
            ),
        )
        _atomic_write(out_dir / "valuation.json",
                      json.dumps({k: v for k, v in out.items() if k != "rows"}, indent=2))
        out["artifacts"] = [str(out_dir / "valuation.csv"), str(out_dir / "valuation.json")]
    return out


def run_arbitrage(sc: Scenario, out_dir: Path | None = None) -> dict:
    measures = product_measures(sc.prob_seq, sc.schedule.horizon, sc.tolerances)
    cert = construct_arbitrage(sc.params, sc.schedule, measures)
    band = sc.params.excess_band
    out = {
        "band": as_float(band),
        "gain_drivers": {
            "up_move": as_float(sc.params.mu + sc.params.sigma - sc.params.r),
            "down_move": as_float(sc.params.mu - sc.params.sigma - sc.params.r),
        },
        "found": cert is not None,
    }
    if cert is None:
        out["note"] = "|mu - r| < sigma: the explicit construction does not apply"
        return out
    out["certificate"] = cert.to_dict()
    if out_dir is not None:
        _atomic_write(
            out_dir / "arbitrage_strategy.csv",
            _csv_text(["n", "word", "phi", "psi"],
                      [(n, w, number_str(p), number_str(q))
                       for n, w, p, q in cert.strategy.to_rows()]),
        )
        out["artifacts"] = [str(out_dir / "arbitrage_strategy.csv")]
    return out


def run_check_martingale(sc: Scenario, process: str, under: str = "P",
                         custom_rows: list | None = None) -> dict:
    stock = stock_process(sc.params, sc.schedule)
    bond = bond_process(sc.params, sc.schedule)
    if process == "stock":
        proc = stock
    elif process == "bond":
        proc = bond
    elif process == "discounted_stock":
        proc = discounted_stock(stock, bond)
    elif process == "custom":
        proc = _process_from_rows(sc, custom_rows or [])
    else:
        raise BinfiltError(f"unknown process {process!r}; "
                           f"expected stock|bond|discounted_stock|custom")

    if under == "P":
        measures = product_measures(sc.prob_seq, sc.schedule.horizon, sc.tolerances)
    elif under == "Q":
        solution = solve_schedule(sc.params, sc.schedule, sc.free_policy,
                                  sc.prob_seq, sc.tolerances)
        measures = list(solution.measures)
    else:
        raise BinfiltError(f"unknown measure family {under!r}; expected P or Q")

    report = is_martingale(proc, sc.schedule, measures, sc.tolerances.check_tol)
    return {"process": process, "under": under, "report": report.to_dict()}


def _process_from_rows(sc: Scenario, rows: list):
    from .condexp import AdaptedProcess, RandomVariable
    from .binword import BinWord
    from .numerics import to_number, zero

    T = sc.schedule.horizon
    tables = [[zero(sc.exact)] * (1 << n) for n in range(T + 1)]
    seen = [0] * (T + 1)
    for word, value in rows:
        w = BinWord.from_string(str(word))
        if w.length > T:
            raise ScenarioError(f"custom process word {word!r} beyond horizon {T}")
        tables[w.length][w.index] = to_number(value, sc.exact)
        seen[w.length] += 1
    for n, count in enumerate(seen):
        if count != (1 << n):
            raise ScenarioError(
                f"custom process level {n}: {count} values given, {1 << n} needed"
            )
    return AdaptedProcess(tuple(
        RandomVariable(n, tuple(t)) for n, t in enumerate(tables)
    ))
