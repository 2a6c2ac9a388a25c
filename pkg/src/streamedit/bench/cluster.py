"""Text embedding, k-means and per-cluster selection for picking diverse source videos."""
from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.feature_extraction.text import HashingVectorizer
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted


def embed_texts(texts, n_features=512):
    """Deterministic feature-hash embedding (word uni- and bigrams), rows L2-normalised."""
    vec = HashingVectorizer(n_features=n_features, ngram_range=(1, 2), alternate_sign=False, norm="l2")
    return vec.transform(list(texts)).toarray()


def source_text(source):
    """Object name followed by scene description, the text that is embedded per source."""
    return f"{source.source_object} {source.scene}".strip()


def _sq_dists(X, C):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


class DiversityKMeans(ClusterMixin, BaseEstimator):
    """Lloyd's k-means with k-means++ seeding, run until the assignment stops changing.

    An empty cluster is re-seeded with the point farthest from its current
    centroid (lowest index on ties). ``inertia_history_`` holds the objective
    after every assignment step.
    """

    def __init__(self, n_clusters=10, max_iter=300, random_state=0):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.random_state = random_state

    def _init_centers(self, X, rng):
        n = X.shape[0]
        centers = [X[rng.randint(n)]]
        d = _sq_dists(X, np.array(centers))[:, 0]
        for _ in range(1, self.n_clusters):
            total = d.sum()
            if total <= 0:
                # all remaining points coincide with a centre; pick the first unused one
                idx = int(np.argmax(d >= 0))
            else:
                idx = int(rng.choice(n, p=d / total))
            centers.append(X[idx])
            d = np.minimum(d, _sq_dists(X, X[idx][None])[:, 0])
        return np.array(centers)

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if not 1 <= self.n_clusters <= X.shape[0]:
            raise ValueError(f"n_clusters={self.n_clusters} must be between 1 and the number of points {X.shape[0]}")
        rng = check_random_state(self.random_state)
        C = self._init_centers(X, rng)
        labels = None
        history = []
        for it in range(self.max_iter):
            d = _sq_dists(X, C)
            new = d.argmin(1)
            history.append(float(d[np.arange(len(X)), new].sum()))
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            for j in range(self.n_clusters):
                members = labels == j
                if members.any():
                    C[j] = X[members].mean(0)
                else:
                    far = int(np.argmax(d[np.arange(len(X)), labels]))
                    C[j] = X[far]
                    labels[far] = j
        self.cluster_centers_ = C
        self.labels_ = labels
        self.inertia_history_ = history
        self.inertia_ = history[-1]
        self.n_iter_ = len(history)
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        return _sq_dists(check_array(X, dtype=np.float64), self.cluster_centers_).argmin(1)


def select_diverse(ids, X, labels, centers, per_cluster=10):
    """Per cluster, the ``per_cluster`` members nearest its centroid (ties broken by id)."""
    ids = list(ids)
    X = np.asarray(X, dtype=np.float64)
    chosen = []
    for j in range(len(centers)):
        members = [i for i in range(len(ids)) if labels[i] == j]
        if len(members) < per_cluster:
            warnings.warn(f"cluster {j} has {len(members)} members, fewer than {per_cluster}; taking all")
        dist = _sq_dists(X[members], np.asarray(centers[j])[None])[:, 0] if members else []
        order = sorted(range(len(members)), key=lambda m: (round(float(dist[m]), 12), ids[members[m]]))
        chosen.extend(ids[members[m]] for m in order[:per_cluster])
    return chosen


def diverse_sources(sources, n_clusters=10, per_cluster=10, seed=0, n_features=512):
    """Embed, cluster and select: the full source-selection step over :class:`BenchSource` items."""
    sources = sorted(sources, key=lambda s: s.source_id)
    X = embed_texts([source_text(s) for s in sources], n_features)
    km = DiversityKMeans(n_clusters, random_state=seed).fit(X)
    ids = select_diverse([s.source_id for s in sources], X, km.labels_, km.cluster_centers_, per_cluster)
    by_id = {s.source_id: s for s in sources}
    return [by_id[i] for i in ids], km
