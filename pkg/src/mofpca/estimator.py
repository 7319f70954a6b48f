"""scikit-learn compatible wrapper around the component-subset search."""

from math import comb

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dataset import from_arrays
from .dominance import DEFAULT_ENUMERATION_CAP, brute_force_front
from .exceptions import ConfigError
from .pca import compute_basis, evaluate_batch
from .selection import compute_lambda, select_solution
from .spea2 import default_config, run


class MOFPCA(TransformerMixin, BaseEstimator):
    """Projection onto a fairness-aware subset of the principal components.

    The classical principal basis is computed first; then ``n_components``
    of its columns are chosen by trading total reconstruction error against
    the squared gap between the two groups' per-sample reconstruction
    errors. The Pareto front of that trade-off is kept in ``front_`` and one
    member is picked with a weighted sum whose weight compensates for the
    different scales of the two objectives.

    Parameters
    ----------
    n_components : int
        Number of basis columns to keep.
    scaling : {"zscore", "pixel", "none"}
        How ``X`` is scaled before the basis is computed.
    group_a : object, optional
        Value of ``groups`` that marks group A. Defaults to the smallest label.
    method : {"spea2", "exhaustive", "auto"}
        ``auto`` enumerates every subset when that is below ``enumeration_cap``.
    population_size, archive_size, generations : int, optional
        SPEA2 overrides; defaults derive from ``C(d, n_components)``.
    random_state : int, numpy Generator or None

    Attributes
    ----------
    basis_ : PrincipalBasis
    front_ : list of FrontRecord
    weights_ : SelectionWeights
    selected_indices_ : ndarray of shape (n_components,)
        0-based indices into the principal basis.
    components_ : ndarray of shape (n_components, n_features)
    """

    def __init__(self, n_components=2, *, scaling="zscore", group_a=None, method="spea2",
                 population_size=None, archive_size=None, generations=None, crossover_rate=50.0,
                 mutation_swaps=1, dataset_kind="tabular", enumeration_cap=DEFAULT_ENUMERATION_CAP,
                 random_state=None):
        self.n_components = n_components
        self.scaling = scaling
        self.group_a = group_a
        self.method = method
        self.population_size = population_size
        self.archive_size = archive_size
        self.generations = generations
        self.crossover_rate = crossover_rate
        self.mutation_swaps = mutation_swaps
        self.dataset_kind = dataset_kind
        self.enumeration_cap = enumeration_cap
        self.random_state = random_state

    def fit(self, X, y=None, *, groups=None):
        if groups is None:
            raise ValueError("MOFPCA.fit needs the sensitive group labels via groups=")
        X = check_array(X, dtype=float)
        groups = np.asarray(groups)
        if len(groups) != X.shape[0]:
            raise ValueError(f"groups has {len(groups)} entries for {X.shape[0]} samples")
        self.n_features_in_ = X.shape[1]
        r = self.n_components
        d = X.shape[1]
        if not isinstance(r, (int, np.integer)) or not 1 <= r <= d:
            raise ValueError(f"n_components must be an integer in 1..{d}, got {r!r}")
        if self.method not in ("spea2", "exhaustive", "auto"):
            raise ConfigError(f"unknown method {self.method!r}")

        ds = from_arrays(X, groups, self.group_a, self.scaling)
        self.basis_ = compute_basis(ds)
        self.mean_ = np.zeros(d) if ds.mean is None else ds.mean
        self.scale_ = np.ones(d) if ds.scale is None else ds.scale

        exhaustive = self.method == "exhaustive" or (
            self.method == "auto" and comb(d, r) <= self.enumeration_cap)
        if exhaustive:
            self.front_ = brute_force_front(self.basis_, r, cap=self.enumeration_cap)
            self.history_ = []
        else:
            seed = self.random_state if isinstance(self.random_state, (int, np.integer)) else 0
            cfg = default_config(d, r, self.dataset_kind, int(seed)).with_overrides({
                "population_size": self.population_size,
                "archive_size": self.archive_size,
                "generations": self.generations,
                "crossover_rate": self.crossover_rate,
                "mutation_swaps": self.mutation_swaps,
            })
            result = run(self.basis_, cfg, np.random.default_rng(self.random_state))
            self.front_ = result.records
            self.history_ = result.history

        self.weights_ = compute_lambda(self.basis_)
        self.selected_ = select_solution(self.front_, self.weights_)
        self.selected_indices_ = np.array(self.selected_.selection)
        self.components_ = self.basis_.u[:, self.selected_indices_].T
        out = evaluate_batch(self.basis_, [self.selected_indices_])
        self.group_errors_ = (float(out["group_a_error"][0]), float(out["group_b_error"][0]))
        return self

    def fit_transform(self, X, y=None, *, groups=None):
        return self.fit(X, y, groups=groups).transform(X)

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return ((X - self.mean_) / self.scale_) @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        Z = check_array(Z, dtype=float)
        return (Z @ self.components_) * self.scale_ + self.mean_
