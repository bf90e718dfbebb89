"""scikit-learn style front end.

Solvers are estimators fitted on one instance: ``fit`` runs the heuristic
and stores ``tour_`` and ``weight_``; ``predict`` returns the tour's vertex
array. ``FarthestPointClustering`` is a transformer from TSP to GTSP.
"""

from __future__ import annotations

import re

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .instance import GtspInstance, cluster_tsp, farthest_point_centers
from .lk import LKStats, SolverConfig, Variation, lk_run
from .local_search import AdaptationOption, nearest_neighbour, three_opt, two_opt
from .tour import Tour
from .validation import check_instance, check_run_number


class _TourEstimator(BaseEstimator):
    def _solve(self, instance: GtspInstance) -> Tour:
        raise NotImplementedError

    def fit(self, X, y=None):
        instance = check_instance(X)
        check_run_number(self.start, instance)
        tour = self._solve(instance)
        self.instance_ = instance
        self.tour_ = tour
        self.weight_ = tour.weight
        return self

    def predict(self, X=None):
        """Vertex sequence (0-based) of the fitted tour."""
        check_is_fitted(self, "tour_")
        if X is not None and check_instance(X) is not self.instance_:
            self.fit(X)
        return np.asarray(self.tour_.vertices, dtype=np.int64)

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()

    def score(self, X=None, y=None):
        """Negative tour weight, so that larger is better."""
        check_is_fitted(self, "tour_")
        return -self.weight_

    def as_callable(self):
        """``f(instance, r) -> Tour`` for the benchmark harness."""
        def run(instance, r):
            est = self.__class__(**self.get_params())
            est.set_params(start=r)
            return est.fit(instance).tour_
        return run


class NearestNeighbour(_TourEstimator):
    """Greedy construction starting at the first vertex of cluster ``start``."""

    def __init__(self, start=1):
        self.start = start

    @property
    def label(self) -> str:
        return "NN"

    def _solve(self, instance):
        return nearest_neighbour(instance, self.start)


class TwoOpt(_TourEstimator):
    """Nearest Neighbour followed by the adapted 2-opt descent.

    Parameters
    ----------
    option : int
        Adaptation option 1..5 (1: plain, 2: CO after each improvement,
        3: local re-selection, 4: local re-selection and CO, 5: CO on every
        candidate).
    start : int
        Run number; the construction starts in cluster ``start``.
    """

    _neighbourhood = staticmethod(two_opt)
    _prefix = "2opt"

    def __init__(self, option=2, start=1):
        self.option = option
        self.start = start

    @property
    def label(self) -> str:
        return f"{self._prefix}-{AdaptationOption(self.option).suffix}"

    def _solve(self, instance):
        option = AdaptationOption(self.option)
        return self._neighbourhood(instance, nearest_neighbour(instance, self.start), option)


class ThreeOpt(TwoOpt):
    """Nearest Neighbour followed by the adapted 3-opt descent."""

    _neighbourhood = staticmethod(three_opt)
    _prefix = "3opt"


class LinKernighan(_TourEstimator):
    """Nearest Neighbour followed by the GTSP Lin-Kernighan adaptation.

    Parameters
    ----------
    variation : {"basic", "closest", "shortest", "exact"}
    gain_option : int
        Gain acceptance rule 1..5.
    alpha : int
        Backtracking depth.
    co : bool
        Apply Cluster Optimization after each improvement (ignored by exact).
    start : int
        Run number.
    idle_limit : int or None
        Idle edge trials before stopping; defaults to the cluster count.
    """

    def __init__(self, variation="shortest", gain_option=5, alpha=2, co=True, start=1,
                 idle_limit=None):
        self.variation = variation
        self.gain_option = gain_option
        self.alpha = alpha
        self.co = co
        self.start = start
        self.idle_limit = idle_limit

    @property
    def config(self) -> SolverConfig:
        return SolverConfig(Variation.parse(self.variation), self.gain_option, self.alpha,
                            bool(self.co), self.idle_limit)

    @property
    def label(self) -> str:
        return self.config.label

    def _solve(self, instance):
        self.stats_ = LKStats()
        return lk_run(instance, nearest_neighbour(instance, self.start), self.config,
                      self.stats_)


class FarthestPointClustering(TransformerMixin, BaseEstimator):
    """Cluster a TSP instance into ``n_clusters`` sets (default ``ceil(n/5)``).

    ``fit`` stores ``labels_`` (cluster index of every vertex) and
    ``centers_``; ``transform`` returns the clustered ``GtspInstance``.
    """

    def __init__(self, n_clusters=None):
        self.n_clusters = n_clusters

    def fit(self, X, y=None):
        tsp = check_instance(X)
        gtsp = cluster_tsp(tsp, self.n_clusters)
        labels = np.empty(tsp.n, dtype=np.int64)
        for k, members in enumerate(gtsp.clusters):
            labels[list(members)] = k
        self.labels_ = labels
        self.n_clusters_ = gtsp.m
        self.centers_ = np.asarray(farthest_point_centers(tsp.weights, gtsp.m), dtype=np.int64)
        self.gtsp_ = gtsp
        return self

    def transform(self, X):
        check_is_fitted(self, "labels_")
        tsp = check_instance(X)
        if tsp.n != len(self.labels_):
            raise ValueError(f"fitted on {len(self.labels_)} vertices, got {tsp.n}")
        return cluster_tsp(tsp, self.n_clusters_)


_LK_RE = re.compile(r"^LK-([BCSE])\((\d),(\d+)(,co)?\)$", re.IGNORECASE)
_LS_RE = re.compile(r"^([23])opt-(B|B-co|L|L-co|CO)$", re.IGNORECASE)
_SUFFIX_TO_OPTION = {"b": 1, "b-co": 2, "l": 3, "l-co": 4, "co": 5}


def make_heuristic(label: str) -> _TourEstimator:
    """Estimator for a label such as ``NN``, ``2opt-B-co`` or ``LK-S(5,2,co)``."""
    text = label.strip()
    if text.lower() == "nn":
        return NearestNeighbour()
    m = _LS_RE.match(text)
    if m:
        cls = TwoOpt if m.group(1) == "2" else ThreeOpt
        return cls(option=_SUFFIX_TO_OPTION[m.group(2).lower()])
    m = _LK_RE.match(text)
    if m:
        letter, gain, alpha, co = m.groups()
        variation = Variation.parse(letter)
        return LinKernighan(variation=variation.value, gain_option=int(gain),
                            alpha=int(alpha), co=bool(co) and variation is not Variation.EXACT)
    raise ValueError(f"unknown heuristic label {label!r}; expected NN, 2opt-<B|B-co|L|L-co|CO>, "
                     "3opt-..., or LK-<B|C|S|E>(x,alpha[,co])")
