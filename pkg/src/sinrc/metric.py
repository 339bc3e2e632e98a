"""Metric spaces, links and link instances.

A :class:`LinkInstance` is immutable.  Pairwise distance tables between the
endpoints of its links are computed lazily with numpy and cached; every
scalar accessor reads from the same arithmetic path so that scalar and
vectorized predicates agree bit for bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np

TRIANGLE_RTOL = 1e-9


class InstanceError(ValueError):
    """Malformed metric, link or instance data."""


class NonFadingError(InstanceError):
    """The operation needs alpha above the doubling dimension."""


@dataclass(frozen=True)
class SinrParams:
    alpha: float = 3.0
    beta: float = 1.0
    noise: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "noise"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not 2 < self.alpha < 6:
            raise InstanceError(f"alpha must lie in (2, 6), got {self.alpha}")
        if not self.beta > 0:
            raise InstanceError("beta must be positive")
        if not self.noise >= 0:
            raise InstanceError("noise must be nonnegative")


@dataclass(frozen=True, eq=False)
class Metric:
    """Euclidean R^dim, or an explicit distance matrix over nodes 0..n-1."""

    kind: str
    dim: int = 2
    doubling_dim: float | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)
    validate: bool = True

    def __post_init__(self):
        if self.kind == "euclidean":
            if not (isinstance(self.dim, int) and self.dim >= 1):
                raise InstanceError("euclidean dim must be a positive integer")
            if self.doubling_dim is None:
                object.__setattr__(self, "doubling_dim", float(self.dim))
        elif self.kind == "matrix":
            if self.doubling_dim is None:
                raise InstanceError("matrix metrics need a declared doubling_dim")
            d = np.asarray(self.matrix, dtype=float)
            object.__setattr__(self, "matrix", d)
            _check_matrix(d, triangle=self.validate)
        else:
            raise InstanceError(f"unknown metric kind {self.kind!r}")
        if not self.doubling_dim > 0:
            raise InstanceError("doubling_dim must be positive")
        object.__setattr__(self, "doubling_dim", float(self.doubling_dim))

    @classmethod
    def euclidean(cls, dim: int = 2, doubling_dim: float | None = None) -> "Metric":
        return cls("euclidean", dim=dim, doubling_dim=doubling_dim)

    @classmethod
    def from_matrix(cls, d, doubling_dim: float, validate: bool = True) -> "Metric":
        return cls("matrix", matrix=np.asarray(d, dtype=float), doubling_dim=doubling_dim, validate=validate)

    @property
    def n_nodes(self) -> int | None:
        return None if self.kind == "euclidean" else self.matrix.shape[0]

    def check_node(self, node) -> None:
        if self.kind == "euclidean":
            if len(node) != self.dim:
                raise InstanceError(f"point {node!r} does not have dimension {self.dim}")
            if not all(math.isfinite(c) for c in node):
                raise InstanceError(f"point {node!r} has non-finite coordinates")
        else:
            if not (isinstance(node, (int, np.integer)) and 0 <= node < self.matrix.shape[0]):
                raise IndexError(f"node {node!r} out of range for a {self.matrix.shape[0]}-node metric")

    def dist(self, a, b) -> float:
        self.check_node(a)
        self.check_node(b)
        if self.kind == "euclidean":
            return float(_euclid(np.asarray([a], float), np.asarray([b], float))[0, 0])
        return float(self.matrix[a, b])

    def table(self, A, B) -> np.ndarray:
        """Distance table between node collections ``A`` and ``B``."""
        if self.kind == "euclidean":
            return _euclid(np.asarray(A, float), np.asarray(B, float))
        return self.matrix[np.ix_(np.asarray(A, int), np.asarray(B, int))]

    def paired(self, A, B) -> np.ndarray:
        """Elementwise distances ``d(A[k], B[k])``."""
        if self.kind == "euclidean":
            A = np.asarray(A, float)
            B = np.asarray(B, float)
            if A.shape[-1] == 1:
                return np.abs(A[..., 0] - B[..., 0])
            return np.sqrt(((A - B) ** 2).sum(-1))
        return self.matrix[np.asarray(A, int), np.asarray(B, int)]

    def to_json(self) -> dict:
        if self.kind == "euclidean":
            return {"type": "euclidean", "dim": self.dim, "doubling_dim": self.doubling_dim}
        return {"type": "matrix", "doubling_dim": self.doubling_dim, "d": self.matrix.tolist()}


def _euclid(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    diff = A[:, None, :] - B[None, :, :]
    if diff.shape[-1] == 1:
        # exact on the line, and no overflow from squaring very long links
        return np.abs(diff[..., 0])
    return np.sqrt((diff**2).sum(-1))


def _check_matrix(d: np.ndarray, triangle: bool = True) -> None:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InstanceError("distance matrix must be square")
    if np.isnan(d).any():
        raise InstanceError("distance matrix contains NaN")
    if (d < 0).any():
        raise InstanceError("distance matrix contains negative entries")
    if not np.isfinite(d).all():
        raise InstanceError("distance matrix contains infinite entries")
    if (np.diag(d) != 0).any():
        raise InstanceError("distance matrix must have a zero diagonal")
    if not np.array_equal(d, d.T):
        raise InstanceError("distance matrix must be symmetric")
    if triangle:
        i, j, k = find_triangle_violation(d)
        if i is not None:
            raise InstanceError(
                f"triangle inequality fails: d[{i},{j}]={d[i, j]!r} > d[{i},{k}]+d[{k},{j}]={d[i, k] + d[k, j]!r}"
            )


def find_triangle_violation(d: np.ndarray, rtol: float = TRIANGLE_RTOL):
    """Return ``(i, j, k)`` with ``d[i,j] > d[i,k] + d[k,j]`` beyond ``rtol``, else Nones."""
    for k in range(d.shape[0]):
        via = d[:, k][:, None] + d[k, :][None, :]
        bad = d > via * (1 + rtol)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            return int(i), int(j), k
    return None, None, None


@dataclass(frozen=True)
class Link:
    id: int
    sender: Any
    receiver: Any
    weight: float | None = None


@dataclass(frozen=True, eq=False)
class LinkInstance:
    """Links embedded in a metric space together with SINR parameters.

    Links are addressed internally by position ``0..n-1`` in ``links``;
    ``Link.id`` is the user-facing identifier.
    """

    metric: Metric
    links: tuple
    sinr: SinrParams = SinrParams()

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        ids = [lk.id for lk in self.links]
        if len(set(ids)) != len(ids):
            raise InstanceError("link ids must be unique")
        for lk in self.links:
            self.metric.check_node(lk.sender)
            self.metric.check_node(lk.receiver)
            if lk.weight is not None and not (lk.weight > 0 and math.isfinite(lk.weight)):
                raise InstanceError(f"link {lk.id}: weight must be positive")
        if self.n and not (self.lengths > 0).all():
            bad = int(np.argmin(self.lengths))
            raise InstanceError(f"link {self.links[bad].id} has zero length")

    def __repr__(self) -> str:
        return f"LinkInstance(n={self.n}, metric={self.metric.kind}, alpha={self.alpha}, beta={self.beta})"

    # -- basic accessors --------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.links)

    @property
    def alpha(self) -> float:
        return self.sinr.alpha

    @property
    def beta(self) -> float:
        return self.sinr.beta

    @property
    def m(self) -> float:
        return self.metric.doubling_dim

    @property
    def is_fading(self) -> bool:
        return self.alpha > self.m

    @cached_property
    def ids(self) -> np.ndarray:
        return np.array([lk.id for lk in self.links], dtype=np.int64)

    @cached_property
    def index_of(self) -> dict:
        return {lk.id: k for k, lk in enumerate(self.links)}

    @cached_property
    def _senders(self):
        return [lk.sender for lk in self.links]

    @cached_property
    def _receivers(self):
        return [lk.receiver for lk in self.links]

    @cached_property
    def lengths(self) -> np.ndarray:
        if self.n == 0:
            return np.zeros(0)
        return self.metric.paired(self._senders, self._receivers)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([1.0 if lk.weight is None else lk.weight for lk in self.links])

    @cached_property
    def order(self) -> np.ndarray:
        """Link positions sorted by increasing length, ties broken by id."""
        return np.lexsort((self.ids, self.lengths))

    @cached_property
    def rank(self) -> np.ndarray:
        r = np.empty(self.n, dtype=np.int64)
        r[self.order] = np.arange(self.n)
        return r

    # -- distance tables --------------------------------------------------

    @cached_property
    def d_sr(self) -> np.ndarray:
        """``d_sr[i, j] = d(s_i, r_j)`` (the directed distance ``d_ij``)."""
        return self.metric.table(self._senders, self._receivers)

    @cached_property
    def link_dist_matrix(self) -> np.ndarray:
        """``d(i, j) = min(d_ij, d_ji, d(s_i, s_j), d(r_i, r_j))``; zero diagonal."""
        d = np.minimum(self.d_sr, self.d_sr.T)
        np.minimum(d, self.metric.table(self._senders, self._senders), out=d)
        np.minimum(d, self.metric.table(self._receivers, self._receivers), out=d)
        np.fill_diagonal(d, 0.0)
        return d

    def dist(self, a, b) -> float:
        return self.metric.dist(a, b)

    def link_dist(self, i: int, j: int) -> float:
        return float(self.link_dist_matrix[i, j])

    def directed_dist(self, i: int, j: int) -> float:
        return float(self.d_sr[i, j])

    def delta(self) -> float:
        if self.n == 0:
            raise InstanceError("delta of an empty instance")
        return float(self.lengths.max() / self.lengths.min())

    def longer_set(self, i: int, within=None) -> list[int]:
        pool = range(self.n) if within is None else within
        return [j for j in pool if self.rank[j] > self.rank[i]]

    def shorter_set(self, i: int, within=None) -> list[int]:
        pool = range(self.n) if within is None else within
        return [j for j in pool if self.rank[j] < self.rank[i]]

    # -- derived instances ------------------------------------------------

    def subset(self, idx: Sequence[int]) -> "LinkInstance":
        return LinkInstance(self.metric, tuple(self.links[i] for i in idx), self.sinr)

    def with_sinr(self, **kw) -> "LinkInstance":
        params = {"alpha": self.alpha, "beta": self.beta, "noise": self.sinr.noise}
        params.update(kw)
        return LinkInstance(self.metric, self.links, SinrParams(**params))

    def scaled(self, s: float) -> "LinkInstance":
        """Copy with every distance multiplied by ``s``."""
        if self.metric.kind == "euclidean":
            links = tuple(
                Link(lk.id, tuple(c * s for c in lk.sender), tuple(c * s for c in lk.receiver), lk.weight)
                for lk in self.links
            )
            return LinkInstance(self.metric, links, self.sinr)
        metric = Metric.from_matrix(self.metric.matrix * s, self.metric.doubling_dim, validate=False)
        return LinkInstance(metric, self.links, self.sinr)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        def node(p):
            return list(p) if self.metric.kind == "euclidean" else int(p)

        links = []
        for lk in self.links:
            d = {"id": lk.id, "s": node(lk.sender), "r": node(lk.receiver)}
            if lk.weight is not None:
                d["weight"] = lk.weight
            links.append(d)
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "noise": self.sinr.noise,
            "metric": self.metric.to_json(),
            "links": links,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def instance_from_json(data: dict, validate_metric: bool = True) -> LinkInstance:
    """Build an instance from the JSON schema, with field-level diagnostics."""
    try:
        sinr = SinrParams(float(data["alpha"]), float(data.get("beta", 1.0)), float(data.get("noise", 0.0)))
        md = data["metric"]
        if md["type"] == "euclidean":
            metric = Metric.euclidean(int(md.get("dim", 2)), md.get("doubling_dim"))
        elif md["type"] == "matrix":
            metric = Metric.from_matrix(md["d"], float(md["doubling_dim"]), validate=validate_metric)
        else:
            raise InstanceError(f"metric.type: unknown kind {md['type']!r}")
        links = []
        for k, raw in enumerate(data["links"]):
            try:
                if metric.kind == "euclidean":
                    s, r = tuple(float(c) for c in raw["s"]), tuple(float(c) for c in raw["r"])
                else:
                    s, r = int(raw["s"]), int(raw["r"])
                w = raw.get("weight")
                links.append(Link(int(raw["id"]), s, r, None if w is None else float(w)))
            except (KeyError, TypeError, ValueError) as e:
                raise InstanceError(f"links[{k}]: {e}") from e
    except KeyError as e:
        raise InstanceError(f"missing field {e}") from e
    except IndexError as e:
        raise InstanceError(str(e)) from e
    try:
        return LinkInstance(metric, tuple(links), sinr)
    except IndexError as e:
        raise InstanceError(str(e)) from e


def load_instance(path, validate_metric: bool = True) -> LinkInstance:
    with open(path) as fh:
        data = json.load(fh)
    return instance_from_json(data, validate_metric)


def euclidean_instance(pairs, alpha=3.0, beta=1.0, noise=0.0, dim=None, ids=None, weights=None) -> LinkInstance:
    """Convenience builder from ``[(sender_point, receiver_point), ...]``."""
    pairs = [(tuple(map(float, s)), tuple(map(float, r))) for s, r in pairs]
    if dim is None:
        dim = len(pairs[0][0]) if pairs else 2
    ids = list(range(len(pairs))) if ids is None else list(ids)
    weights = [None] * len(pairs) if weights is None else list(weights)
    links = tuple(Link(i, s, r, None if w is None else float(w)) for i, (s, r), w in zip(ids, pairs, weights))
    return LinkInstance(Metric.euclidean(dim), links, SinrParams(alpha, beta, noise))
