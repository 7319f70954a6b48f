"""Command line entry point: ``mofpca {pca,mofpca,sweep,select,verify}``.

Exit codes: 0 success, 1 verification mismatch, 2 input error,
3 config error, 4 enumeration cap exceeded.
"""

import argparse
import csv
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from math import comb
from pathlib import Path

from .dataset import SCALING_MODES, load_csv, load_default_credit, standardize
from .dominance import (DEFAULT_ENUMERATION_CAP, FrontRecord, brute_force_front, format_indices, front_rows,
                        parse_indices, read_front, worker_count, write_front)
from .exceptions import ConfigError, InputError, MofpcaError
from .pca import classical_selection, compute_basis, evaluate, evaluate_batch, evaluate_direct, load_basis, save_basis
from .selection import SelectionWeights, compute_lambda, report_to_json, select_solution, selection_report
from .spea2 import default_config, load_config_file, run, write_history

logger = logging.getLogger("mofpca")

SWEEP_COLUMNS = ["r", "method", "indices", "indices_1based", "recon_error", "recon_error_per_sample",
                 "fairness", "group_a_error_per_sample", "group_b_error_per_sample", "runtime_ms"]
VERIFY_RTOL = 1e-8


def _dataset_args(p, required=True):
    p.add_argument("--input", required=required, help="CSV file with a header row")
    p.add_argument("--sensitive", help="name of the two-valued sensitive column")
    p.add_argument("--group-a", help="sensitive value marking group A (default: smallest value)")
    p.add_argument("--keep-sensitive", action="store_true",
                   help="keep the sensitive column among the features")
    p.add_argument("--preset", choices=["default-credit"],
                   help="built-in loader; derives the groups from EDUCATION")
    p.add_argument("--scaling", choices=SCALING_MODES, default="zscore")


def _output_args(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def _search_args(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON/TOML file with SPEA2 settings")
    p.add_argument("--exhaustive", action="store_true", help="enumerate every subset instead of SPEA2")
    p.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP, help="enumeration cap")
    p.add_argument("--dataset-kind", choices=["tabular", "image"], default="tabular")
    p.add_argument("--verify", action="store_true", help="re-derive every emitted objective")


def build_parser():
    parser = argparse.ArgumentParser(prog="mofpca", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pca", help="objectives of the classical top-r projection")
    _dataset_args(p)
    _output_args(p)
    p.add_argument("--r", type=int, required=True)

    p = sub.add_parser("mofpca", help="Pareto front over r-subsets plus the selected solution")
    _dataset_args(p)
    _output_args(p)
    _search_args(p)
    p.add_argument("--r", type=int)

    p = sub.add_parser("sweep", help="PCA vs MOFPCA across a range of r")
    _dataset_args(p)
    _output_args(p)
    _search_args(p)
    p.add_argument("--r-min", type=int, default=1)
    p.add_argument("--r-max", type=int)
    p.add_argument("--timing", action="store_true", help="fill the runtime_ms column")

    p = sub.add_parser("select", help="pick one solution from a saved front")
    _dataset_args(p, required=False)
    p.add_argument("--basis", help="basis JSON written by pca/mofpca (instead of --input)")
    p.add_argument("--front", required=True)
    p.add_argument("--lambda", dest="lam", type=float, help="override the computed weight")
    p.add_argument("--out", default=".")

    p = sub.add_parser("verify", help="re-derive the objectives in a front or sweep file")
    _dataset_args(p)
    p.add_argument("--results", required=True, help="front or sweep file (csv or json)")
    return parser


def _load_dataset(args):
    if args.preset == "default-credit":
        table, a_rows, b_rows = load_default_credit(args.input)
    else:
        if not args.sensitive:
            raise InputError("--sensitive is required unless --preset is given")
        table, a_rows, b_rows = load_csv(args.input, args.sensitive, args.group_a, args.keep_sensitive)
    return standardize(table, a_rows, b_rows, args.scaling)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spea2_config(args, d, r):
    overrides = load_config_file(args.config) if args.config else {}
    if r is None:
        r = overrides.get("r")
    if r is None:
        raise ConfigError("--r is required (or r in the config file)")
    r = int(r)
    if not 1 <= r <= d:
        raise InputError(f"r must lie in 1..{d}, got {r}")
    overrides = {k: v for k, v in overrides.items() if k != "r"}
    if args.seed is not None:
        overrides["seed"] = args.seed
    return default_config(d, r, args.dataset_kind).with_overrides(overrides)


def _search(basis, args, r):
    if args.exhaustive:
        return brute_force_front(basis, r, cap=args.cap), None
    cfg = _spea2_config(args, basis.d, r)
    return run(basis, cfg), cfg


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def _rel_close(a, b, scale):
    return abs(a - b) <= VERIFY_RTOL * max(abs(a), abs(b)) + 1e-12 * scale


def _check_rows(ds, basis, rows):
    """Return a list of mismatch descriptions for rows holding indices + objectives."""
    problems = []
    for row in rows:
        sel = row["indices"]
        fast = evaluate(basis, sel)
        direct = evaluate_direct(ds, basis, sel)
        for name, got in (("recon_error", row["recon_error"]), ("fairness", row["fairness"])):
            ref = getattr(fast, name)
            scale = basis.total_energy if name == "recon_error" else max(basis.group_a_total / basis.n_a,
                                                                          basis.group_b_total / basis.n_b) ** 2
            if not (_rel_close(got, ref, scale) and _rel_close(ref, getattr(direct, name), scale)):
                problems.append(f"{format_indices(sel)}: {name} {got!r} vs {ref!r} / {getattr(direct, name)!r}")
    return problems


def cmd_pca(args):
    ds = _load_dataset(args)
    basis = compute_basis(ds)
    if not 1 <= args.r <= basis.d:
        raise InputError(f"r must lie in 1..{basis.d}, got {args.r}")
    out = _out_dir(args)
    save_basis(basis, out / "basis.json")
    sel = classical_selection(args.r)
    record = FrontRecord(sel, evaluate(basis, sel))
    path = write_front(basis, [record], out / f"pca.{args.format}", args.format)
    row = front_rows(basis, [record])[0]
    print(f"pca r={args.r}: recon_error={row['recon_error']:.6g} fairness={row['fairness']:.6g} "
          f"group_a={row['group_a_error']:.6g} group_b={row['group_b_error']:.6g} -> {path}")
    return 0


def cmd_mofpca(args):
    ds = _load_dataset(args)
    basis = compute_basis(ds)
    out = _out_dir(args)
    r = args.r
    if args.exhaustive and r is None:
        raise ConfigError("--r is required")
    if r is not None and not 1 <= r <= basis.d:
        raise InputError(f"r must lie in 1..{basis.d}, got {r}")
    result, cfg = _search(basis, args, r)
    front = result if cfg is None else result.records
    save_basis(basis, out / "basis.json")
    front_path = write_front(basis, front, out / f"front.{args.format}", args.format)
    if cfg is not None:
        write_history(result.history, out / "spea2_log.csv")
        _write_text(out / "config.json", json.dumps(cfg.to_dict(), indent=1) + "\n")
    weights = compute_lambda(basis)
    report = selection_report(basis, front, weights)
    _write_text(out / "selection.json", report_to_json(report))
    chosen = report["selected"]
    print(f"front of {len(front)} solutions -> {front_path}")
    print(f"selected u[{format_indices(chosen['indices_1based'])}] (1-based): "
          f"recon_error={chosen['recon_error']:.6g} fairness={chosen['fairness']:.6g} lambda={weights.lam:.6g}")
    if args.verify:
        problems = _check_rows(ds, basis, front_rows(basis, front))
        if problems:
            print("\n".join(["verification failed:"] + problems), file=sys.stderr)
            return 1
        print("verify: ok")
    return 0


def _sweep_rows(basis, args, r, weights):
    rows = []

    def row(method, sel, elapsed):
        out = evaluate_batch(basis, [sel])
        recon = float(out["recon_error"][0])
        return {
            "r": r, "method": method, "indices": list(sel), "indices_1based": [i + 1 for i in sel],
            "recon_error": recon, "recon_error_per_sample": recon / basis.n,
            "fairness": float(out["fairness"][0]),
            "group_a_error_per_sample": float(out["group_a_error"][0]),
            "group_b_error_per_sample": float(out["group_b_error"][0]),
            "runtime_ms": round(elapsed * 1000, 3) if args.timing else None,
        }

    t0 = time.perf_counter()
    sel = classical_selection(r)
    rows.append(row("pca", sel, time.perf_counter() - t0))

    t0 = time.perf_counter()
    cfg = _spea2_config(args, basis.d, r)
    front = run(basis, cfg).records
    rows.append(row("mofpca-selected", select_solution(front, weights).selection, time.perf_counter() - t0))

    if args.exhaustive and comb(basis.d, r) <= args.cap:
        t0 = time.perf_counter()
        front = brute_force_front(basis, r, cap=args.cap, workers=1)
        rows.append(row("brute-force-selected", select_solution(front, weights).selection,
                        time.perf_counter() - t0))
    return rows


def sweep_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([
            row["r"], row["method"], format_indices(row["indices"]), format_indices(row["indices"], True),
            *(repr(row[c]) for c in SWEEP_COLUMNS[4:9]),
            "" if row["runtime_ms"] is None else repr(row["runtime_ms"]),
        ])
    return buf.getvalue()


def cmd_sweep(args):
    ds = _load_dataset(args)
    basis = compute_basis(ds)
    r_max = args.r_max if args.r_max is not None else min(basis.d, 20)
    if not 1 <= args.r_min <= r_max <= basis.d:
        raise InputError(f"need 1 <= r_min <= r_max <= {basis.d}")
    if args.config:
        load_config_file(args.config)  # fail early on a bad file
    weights = compute_lambda(basis)
    rs = list(range(args.r_min, r_max + 1))
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_r = list(pool.map(lambda r: _sweep_rows(basis, args, r, weights), rs))
    else:
        per_r = [_sweep_rows(basis, args, r, weights) for r in rs]
    rows = [row for block in per_r for row in block]
    out = _out_dir(args)
    if args.format == "csv":
        path = _write_text(out / "sweep.csv", sweep_to_csv(rows))
    else:
        path = _write_text(out / "sweep.json", json.dumps({"rows": rows}, indent=1) + "\n")
    print(f"sweep r={args.r_min}..{r_max}: {len(rows)} rows -> {path}")
    if args.verify:
        problems = _check_rows(ds, basis, rows)
        if problems:
            print("\n".join(["verification failed:"] + problems), file=sys.stderr)
            return 1
        print("verify: ok")
    return 0


def cmd_select(args):
    if args.basis:
        basis = load_basis(args.basis)
    elif args.input:
        basis = compute_basis(_load_dataset(args))
    else:
        raise InputError("select needs --basis or --input")
    front = read_front(args.front, basis.d)
    if not front:
        raise InputError(f"front file {args.front} holds no solutions")
    weights = compute_lambda(basis)
    if args.lam is not None:
        if not 0 <= args.lam <= 1:
            raise ConfigError("--lambda must lie in [0, 1]")
        weights = SelectionWeights(args.lam, weights.m_re, weights.m_fm)
    report = selection_report(basis, front, weights)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "selection.json", report_to_json(report))
    chosen = report["selected"]
    print(f"selected u[{format_indices(chosen['indices_1based'])}] (1-based) "
          f"score={chosen['weighted_score']:.6g} lambda={weights.lam:.6g}")
    return 0


def _read_result_rows(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"results file not found: {path}")
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        rows = data.get("front") or data.get("rows") or []
        return [{"indices": r["indices"], "recon_error": float(r["recon_error"]),
                 "fairness": float(r["fairness"])} for r in rows]
    with path.open(newline="") as fh:
        return [{"indices": parse_indices(r["indices"]), "recon_error": float(r["recon_error"]),
                 "fairness": float(r["fairness"])} for r in csv.DictReader(fh)]


def cmd_verify(args):
    ds = _load_dataset(args)
    basis = compute_basis(ds)
    try:
        rows = _read_result_rows(args.results)
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed results file: {exc}") from exc
    problems = _check_rows(ds, basis, rows)
    if problems:
        print("\n".join([f"{len(problems)} mismatches:"] + problems))
        return 1
    print(f"verify: {len(rows)} rows consistent")
    return 0


COMMANDS = {"pca": cmd_pca, "mofpca": cmd_mofpca, "sweep": cmd_sweep, "select": cmd_select, "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except MofpcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
