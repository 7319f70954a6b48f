"""Pick one member of a Pareto front with a scale-compensating weighted sum."""

import json
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .dominance import FrontRecord, front_rows
from .exceptions import InputError
from .pca import PrincipalBasis, evaluate_batch


@dataclass(frozen=True)
class SelectionWeights:
    lam: float
    m_re: float
    m_fm: float

    def score(self, recon_error: float, fairness: float) -> float:
        return self.lam * recon_error + (1.0 - self.lam) * fairness


def compute_lambda(basis: PrincipalBasis) -> SelectionWeights:
    """Weight on the reconstruction error: m_fm / (m_re + m_fm).

    m_re is the error of keeping only the leading component; m_fm is the
    smallest disparity over all single-component projections.
    """
    singles = evaluate_batch(basis, np.arange(basis.d)[:, None])
    m_re = float(singles["recon_error"][0])
    m_fm = float(singles["fairness"].min())
    total = m_re + m_fm
    lam = 0.5 if total == 0 else m_fm / total
    return SelectionWeights(lam, m_re, m_fm)


def scored_front(front: Sequence[FrontRecord], weights: SelectionWeights) -> List[float]:
    return [weights.score(rec.recon_error, rec.fairness) for rec in front]


def select_solution(front: Sequence[FrontRecord], weights: SelectionWeights) -> FrontRecord:
    """Front member with the lowest weighted score (ties: lower error, then indices)."""
    front = list(front)
    if not front:
        raise InputError("cannot select from an empty front")
    scores = scored_front(front, weights)
    best = min(range(len(front)), key=lambda i: (scores[i], front[i].recon_error, front[i].selection))
    return front[best]


def selection_report(basis: PrincipalBasis, front: Sequence[FrontRecord], weights: SelectionWeights) -> dict:
    chosen = select_solution(front, weights)
    rows = front_rows(basis, front)
    for row, score in zip(rows, scored_front(front, weights)):
        row["weighted_score"] = score
    chosen_row = front_rows(basis, [chosen])[0]
    chosen_row["weighted_score"] = weights.score(chosen.recon_error, chosen.fairness)
    return {
        "lambda": weights.lam,
        "m_re": weights.m_re,
        "m_fm": weights.m_fm,
        "selected": chosen_row,
        "front": rows,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=1) + "\n"
