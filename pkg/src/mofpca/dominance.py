"""Pareto dominance, non-dominated filtering and the exhaustive front."""

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, islice
from math import comb
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .exceptions import EnumerationCapError, InputError
from .pca import ObjectiveVector, PrincipalBasis, Selection, as_selection, evaluate_batch

DEFAULT_ENUMERATION_CAP = 10**6
_CHUNK = 50_000

FRONT_COLUMNS = ["r", "indices", "indices_1based", "recon_error", "recon_error_per_sample",
                 "fairness", "group_a_error", "group_b_error"]


@dataclass(frozen=True)
class FrontRecord:
    selection: Selection
    objectives: ObjectiveVector

    @property
    def recon_error(self) -> float:
        return self.objectives.recon_error

    @property
    def fairness(self) -> float:
        return self.objectives.fairness


def worker_count() -> int:
    """Worker threads from ``MOFPCA_WORKERS`` (default 1). Never changes results."""
    raw = os.environ.get("MOFPCA_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def dominates(a, b) -> bool:
    """True when ``a`` is no worse than ``b`` in both objectives and better in one."""
    return (a[0] <= b[0] and a[1] <= b[1]) and (a[0] < b[0] or a[1] < b[1])


def pareto_order(recon, fairness, selections) -> np.ndarray:
    """Positions of the non-dominated rows, ascending recon_error.

    Among rows sharing an objective vector only the lexicographically
    smallest selection survives.
    """
    recon = np.asarray(recon, dtype=float)
    fairness = np.asarray(fairness, dtype=float)
    sels = np.asarray(selections)
    if len(recon) == 0:
        return np.empty(0, dtype=np.intp)
    keys = [sels[:, j] for j in range(sels.shape[1] - 1, -1, -1)] + [fairness, recon]
    order = np.lexsort(keys)
    f = fairness[order]
    best_before = np.concatenate([[np.inf], np.minimum.accumulate(f)[:-1]])
    return order[f < best_before]


def nondominated_filter(records: Sequence[FrontRecord]) -> List[FrontRecord]:
    records = list(records)
    if not records:
        raise InputError("cannot filter an empty record list")
    r = max(len(rec.selection) for rec in records)
    # pad ragged selections so lexsort gets a rectangular key array
    sels = np.array([list(rec.selection) + [-1] * (r - len(rec.selection)) for rec in records])
    keep = pareto_order([rec.recon_error for rec in records],
                        [rec.fairness for rec in records], sels)
    return [records[i] for i in keep]


def _evaluate_chunk(basis, chunk):
    out = evaluate_batch(basis, chunk)
    return out["recon_error"], out["fairness"]


def brute_force_front(basis: PrincipalBasis, r: int, cap: int = DEFAULT_ENUMERATION_CAP,
                      workers: int = None) -> List[FrontRecord]:
    """Exact Pareto front over every size-r subset of the basis columns."""
    d = basis.d
    if not 1 <= r <= d:
        raise InputError(f"r must lie in 1..{d}, got {r}")
    total = comb(d, r)
    if total > cap:
        raise EnumerationCapError(f"C({d},{r}) = {total} subsets exceeds the enumeration cap {cap}")
    gen = combinations(range(d), r)
    chunks = []
    while True:
        block = list(islice(gen, _CHUNK))
        if not block:
            break
        chunks.append(np.array(block, dtype=np.intp))
    workers = workers or worker_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _evaluate_chunk(basis, c), chunks))
    else:
        results = [_evaluate_chunk(basis, c) for c in chunks]
    sels = np.concatenate(chunks)
    recon = np.concatenate([res[0] for res in results])
    fair = np.concatenate([res[1] for res in results])
    keep = pareto_order(recon, fair, sels)
    return [FrontRecord(tuple(int(i) for i in sels[k]), ObjectiveVector(float(recon[k]), float(fair[k])))
            for k in keep]


def format_indices(selection, one_based: bool = False) -> str:
    offset = 1 if one_based else 0
    return " ".join(str(i + offset) for i in selection)


def parse_indices(text: str) -> List[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def front_rows(basis: PrincipalBasis, records: Sequence[FrontRecord]) -> List[dict]:
    rows = []
    if not records:
        return rows
    out = evaluate_batch(basis, [list(rec.selection) for rec in records])
    for k, rec in enumerate(records):
        rows.append({
            "r": len(rec.selection),
            "indices": list(rec.selection),
            "indices_1based": [i + 1 for i in rec.selection],
            "recon_error": rec.recon_error,
            "recon_error_per_sample": rec.recon_error / basis.n,
            "fairness": rec.fairness,
            "group_a_error": float(out["group_a_error"][k]),
            "group_b_error": float(out["group_b_error"][k]),
        })
    return rows


def front_to_csv(basis: PrincipalBasis, records: Sequence[FrontRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FRONT_COLUMNS)
    for row in front_rows(basis, records):
        writer.writerow([
            row["r"], format_indices(row["indices"]), format_indices(row["indices"], True),
            *(repr(row[c]) for c in FRONT_COLUMNS[3:]),
        ])
    return buf.getvalue()


def front_to_json(basis: PrincipalBasis, records: Sequence[FrontRecord]) -> str:
    return json.dumps({"front": front_rows(basis, records)}, indent=1) + "\n"


def write_front(basis: PrincipalBasis, records: Sequence[FrontRecord], path, fmt: str = "csv") -> Path:
    path = Path(path)
    text = front_to_csv(basis, records) if fmt == "csv" else front_to_json(basis, records)
    path.write_text(text)
    return path


def read_front(path, d: int = None) -> List[FrontRecord]:
    """Read a front written by :func:`write_front` (CSV or JSON by extension)."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"front file not found: {path}")
    records = []
    try:
        if path.suffix.lower() == ".json":
            for row in json.loads(path.read_text())["front"]:
                records.append((row["indices"], row["recon_error"], row["fairness"]))
        else:
            with path.open(newline="") as fh:
                for row in csv.DictReader(fh):
                    records.append((parse_indices(row["indices"]),
                                    float(row["recon_error"]), float(row["fairness"])))
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed front file {path}: {exc}") from exc
    out = []
    for indices, recon, fair in records:
        sel = as_selection(indices, d) if d is not None else tuple(sorted(indices))
        out.append(FrontRecord(sel, ObjectiveVector(recon, fair)))
    return out
