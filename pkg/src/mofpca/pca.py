"""Principal basis and the two objectives (reconstruction error, group disparity).

Objectives for a subset of basis columns are computed from per-column
energies, so an evaluation costs O(d) vector work and needs no projection.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .dataset import StandardizedDataset
from .exceptions import InputError

SCHEMA_VERSION = 1

Selection = Tuple[int, ...]


class ObjectiveVector(NamedTuple):
    recon_error: float
    fairness: float


@dataclass(frozen=True)
class PrincipalBasis:
    u: Optional[np.ndarray]
    eigenvalues: np.ndarray
    total_energy: float
    group_a_energy: np.ndarray
    group_b_energy: np.ndarray
    group_a_total: float
    group_b_total: float
    n_a: int
    n_b: int

    @property
    def d(self) -> int:
        return len(self.eigenvalues)

    @property
    def n(self) -> int:
        return self.n_a + self.n_b

    def to_dict(self, include_matrix: bool = True) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "d": self.d,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "total_energy": self.total_energy,
            "group_a_total": self.group_a_total,
            "group_b_total": self.group_b_total,
            "eigenvalues": self.eigenvalues.tolist(),
            "group_a_energy": self.group_a_energy.tolist(),
            "group_b_energy": self.group_b_energy.tolist(),
        }
        if include_matrix and self.u is not None:
            out["u"] = self.u.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PrincipalBasis":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise InputError(f"unsupported basis schema version {version!r}")
        try:
            u = data.get("u")
            return cls(
                u=None if u is None else np.asarray(u, dtype=float),
                eigenvalues=np.asarray(data["eigenvalues"], dtype=float),
                total_energy=float(data["total_energy"]),
                group_a_energy=np.asarray(data["group_a_energy"], dtype=float),
                group_b_energy=np.asarray(data["group_b_energy"], dtype=float),
                group_a_total=float(data["group_a_total"]),
                group_b_total=float(data["group_b_total"]),
                n_a=int(data["n_a"]),
                n_b=int(data["n_b"]),
            )
        except KeyError as exc:
            raise InputError(f"basis file missing field {exc}") from exc


def save_basis(basis: PrincipalBasis, path, include_matrix: bool = True) -> None:
    Path(path).write_text(json.dumps(basis.to_dict(include_matrix), indent=1) + "\n")


def load_basis(path) -> PrincipalBasis:
    try:
        return PrincipalBasis.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"could not read basis file {path}: {exc}") from exc


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def compute_basis(ds: StandardizedDataset) -> PrincipalBasis:
    """Eigendecompose the Gram matrix of ``ds.x`` and tabulate column energies."""
    x = ds.x
    if not np.all(np.isfinite(x)):
        raise InputError("cannot compute a basis from non-finite data")
    gram = x.T @ x
    vals, vecs = np.linalg.eigh(gram)
    # eigh returns ascending eigenvalues; reverse keeps the solver's tie order
    vals = np.clip(vals[::-1], 0.0, None)
    u = _fix_signs(vecs[:, ::-1])
    xa, xb = ds.x_a, ds.x_b
    return PrincipalBasis(
        u=u,
        eigenvalues=vals,
        total_energy=float(np.sum(x * x)),
        group_a_energy=np.sum((xa @ u) ** 2, axis=0),
        group_b_energy=np.sum((xb @ u) ** 2, axis=0),
        group_a_total=float(np.sum(xa * xa)),
        group_b_total=float(np.sum(xb * xb)),
        n_a=len(ds.group_a_rows),
        n_b=len(ds.group_b_rows),
    )


def as_selection(indices, d: int) -> Selection:
    """Validate ``indices`` against a d-column basis and return them sorted."""
    sel = tuple(sorted(int(i) for i in indices))
    if len(sel) == 0:
        raise InputError("a selection needs at least one component (r >= 1)")
    if len(set(sel)) != len(sel):
        raise InputError(f"duplicate component indices in {list(indices)}")
    if sel[0] < 0 or sel[-1] >= d:
        raise InputError(f"component index out of range 0..{d - 1}: {list(indices)}")
    return sel


def _residual_sums(mask_kept: np.ndarray, energies: np.ndarray) -> np.ndarray:
    # Fixed ascending-index accumulation: a row's value never depends on
    # how many rows share the batch, so ties compare bitwise.
    acc = np.zeros(mask_kept.shape[0])
    for i, e in enumerate(energies):
        acc += np.where(mask_kept[:, i], 0.0, e)
    return acc


def evaluate_batch(basis: PrincipalBasis, selections) -> dict:
    """Objectives for an (m, r) integer array of selections.

    Returns a dict of length-m arrays: ``recon_error``, ``fairness``,
    ``group_a_error`` and ``group_b_error`` (the latter two per sample).
    """
    sel = np.asarray(selections, dtype=np.intp)
    if sel.ndim == 1:
        sel = sel[None, :]
    m, r = sel.shape
    d = basis.d
    if r < 1:
        raise InputError("a selection needs at least one component (r >= 1)")
    if m and (sel.min() < 0 or sel.max() >= d):
        raise InputError(f"component index out of range 0..{d - 1}")
    kept = np.zeros((m, d), dtype=bool)
    kept[np.arange(m)[:, None], sel] = True
    if m and np.any(kept.sum(axis=1) != r):
        raise InputError("duplicate component indices in selection")
    recon = _residual_sums(kept, basis.eigenvalues)
    err_a = _residual_sums(kept, basis.group_a_energy) / basis.n_a
    err_b = _residual_sums(kept, basis.group_b_energy) / basis.n_b
    return {
        "recon_error": recon,
        "fairness": (err_a - err_b) ** 2,
        "group_a_error": err_a,
        "group_b_error": err_b,
    }


def evaluate(basis: PrincipalBasis, sel: Sequence[int]) -> ObjectiveVector:
    sel = as_selection(sel, basis.d)
    out = evaluate_batch(basis, [sel])
    return ObjectiveVector(float(out["recon_error"][0]), float(out["fairness"][0]))


def group_errors(basis: PrincipalBasis, sel: Sequence[int]) -> Tuple[float, float]:
    """Per-sample reconstruction error of group A and group B."""
    sel = as_selection(sel, basis.d)
    out = evaluate_batch(basis, [sel])
    return float(out["group_a_error"][0]), float(out["group_b_error"][0])


def evaluate_direct(ds: StandardizedDataset, basis: PrincipalBasis, sel: Sequence[int]) -> ObjectiveVector:
    """Reference evaluation that forms the projection explicitly."""
    if basis.u is None:
        raise InputError("direct evaluation needs the basis matrix")
    sel = as_selection(sel, basis.d)
    u_sel = basis.u[:, list(sel)]

    def residual(x):
        diff = x - (x @ u_sel) @ u_sel.T
        return float(np.sum(diff * diff))

    recon = residual(ds.x)
    gap = residual(ds.x_a) / len(ds.group_a_rows) - residual(ds.x_b) / len(ds.group_b_rows)
    return ObjectiveVector(recon, gap * gap)


def classical_selection(r: int) -> Selection:
    return tuple(range(r))
