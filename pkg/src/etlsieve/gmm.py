"""Diagonal-covariance Gaussian mixture fitted by expectation maximization."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
EMPTY_COMPONENT = 1e-12
TINY = np.finfo(float).tiny


class ClusteringError(RuntimeError):
    pass


@dataclass(frozen=True)
class EMConfig:
    max_iter: int = 200
    rel_tol: float = 1e-6
    variance_floor: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if not self.variance_floor > 0:
            raise ValueError("variance_floor must be > 0")


@dataclass(frozen=True, eq=False)
class ClusterModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood_trace: tuple[float, ...] = ()
    converged: bool = False
    seed: int = 0
    config: EMConfig = field(default_factory=EMConfig)
    rescues: tuple[int, ...] = ()

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def n_iter(self) -> int:
        return len(self.log_likelihood_trace)

    @property
    def log_likelihood(self) -> float:
        return self.log_likelihood_trace[-1] if self.log_likelihood_trace else float("nan")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.variances.tolist(),
            "log_likelihood_trace": list(self.log_likelihood_trace),
            "converged": self.converged,
            "seed": self.seed,
            "config": asdict(self.config),
            "rescues": list(self.rescues),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterModel":
        return cls(
            weights=np.array(d["weights"], dtype=float),
            means=np.array(d["means"], dtype=float),
            variances=np.array(d["covariances"], dtype=float),
            log_likelihood_trace=tuple(d["log_likelihood_trace"]),
            converged=d["converged"],
            seed=d["seed"],
            config=EMConfig(**d["config"]),
            rescues=tuple(d.get("rescues", ())),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True, eq=False)
class Assignment:
    labels: np.ndarray
    responsibilities: np.ndarray

    @property
    def k(self) -> int:
        return self.responsibilities.shape[1]

    def populations(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.k).astype(int).tolist()


def _check_data(data, k):
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if k < 1:
        raise ClusteringError("k must be >= 1")
    if data.shape[0] < k:
        raise ClusteringError(f"k exceeds population ({k} > {data.shape[0]})")
    if not np.all(np.isfinite(data)):
        raise ClusteringError("data contains non-finite values")
    return data


def _sq_dist(data, centers):
    return ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def kmeans_init(data, k: int, seed: int, refine_iter: int = 10) -> np.ndarray:
    """k-means++ seeding followed by ``refine_iter`` Lloyd iterations.

    Returns a (k, d) array of centers. Deterministic for a given seed.
    """
    data = _check_data(data, k)
    n = data.shape[0]
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    d2 = _sq_dist(data, data[chosen]).min(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # fewer distinct points than k
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dist(data, data[[idx]])[:, 0])
    centers = data[chosen].copy()

    for _ in range(refine_iter):
        labels = _sq_dist(data, centers).argmin(axis=1)
        for j in range(k):
            members = data[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    return centers


def component_log_density(data, means, variances) -> np.ndarray:
    """(n, k) log densities of each record under each diagonal Gaussian."""
    diff2 = (data[:, None, :] - means[None, :, :]) ** 2
    return -0.5 * (np.log(variances).sum(axis=1)[None, :] + data.shape[1] * LOG_2PI
                   + (diff2 / variances[None, :, :]).sum(axis=2))


def _log_joint(data, weights, means, variances):
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    return component_log_density(data, means, variances) + log_w[None, :]


def _logsumexp_rows(a):
    top = a.max(axis=1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    return (top + np.log(np.exp(a - top).sum(axis=1, keepdims=True)))[:, 0]


def log_likelihood(data, weights, means, variances) -> float:
    return float(_logsumexp_rows(_log_joint(data, weights, means, variances)).sum())


def e_step(model: ClusterModel, data) -> tuple[np.ndarray, float]:
    """Posterior responsibilities and total log-likelihood, in log space."""
    data = np.asarray(data, dtype=float).reshape(len(data), -1)
    joint = _log_joint(data, model.weights, model.means, model.variances)
    norm = _logsumexp_rows(joint)
    resp = np.exp(joint - norm[:, None])
    return resp, float(norm.sum())


def m_step(data, responsibilities, variance_floor: float = 1e-6, rescued: list | None = None):
    """Weights, means and floored diagonal variances from responsibilities.

    A component whose total responsibility is below 1e-12 is reseeded at the
    record with the lowest maximum responsibility. Its weight is chosen by
    halving until the log-likelihood is no worse than leaving the component
    empty, so a rescue never lowers the likelihood.
    """
    data = np.asarray(data, dtype=float).reshape(len(data), -1)
    resp = np.asarray(responsibilities, dtype=float)
    n, d = data.shape
    nk = resp.sum(axis=0)
    k = len(nk)
    weights = nk / n
    safe = np.where(nk > 0, nk, 1.0)
    means = (resp.T @ data) / safe[:, None]
    variances = np.empty_like(means)
    for j in range(k):
        variances[j] = resp[:, j] @ (data - means[j]) ** 2 / safe[j]
    variances = np.maximum(variances, variance_floor)

    empty = [j for j in range(k) if nk[j] < EMPTY_COMPONENT]
    if empty:
        weights = weights.copy()
        weights[empty] = 0.0
        weights /= weights.sum()
        worst_order = np.argsort(resp.max(axis=1), kind="stable")
        spread = np.maximum(data.var(axis=0), variance_floor)
        for slot, j in enumerate(empty):
            target = data[worst_order[slot % n]]
            weights, means, variances = _rescue(data, weights, means, variances, j, target, spread, variance_floor)
            log.info("gmm: component %d empty, reseeded at record %d", j, int(worst_order[slot % n]))
            if rescued is not None:
                rescued.append(j)
    return weights, means, variances


def _rescue(data, weights, means, variances, j, target, spread, floor):
    base = log_likelihood(data, weights, means, variances)
    n = data.shape[0]
    means = means.copy()
    means[j] = target
    for var in (spread * 1e-2, np.full_like(spread, floor)):
        var = np.maximum(var, floor)
        trial_var = variances.copy()
        trial_var[j] = var
        eps = 1.0 / n
        while eps > 1e-300:
            w = weights * (1.0 - eps)
            w[j] = eps
            if log_likelihood(data, w, means, trial_var) >= base:
                return w, means, trial_var
            eps *= 0.5
    # no improving weight exists; the component stays empty at the new seat
    variances = variances.copy()
    variances[j] = np.maximum(spread, floor)
    return weights, means, variances


def fit_gmm(data, k: int = 10, config: EMConfig | None = None) -> ClusterModel:
    """Fit a k-component diagonal GMM by EM from a k-means++ start.

    Stops when the relative log-likelihood improvement drops below
    ``config.rel_tol`` or after ``config.max_iter`` E-steps. The returned
    parameters are the ones whose log-likelihood ends the trace.
    """
    config = config or EMConfig()
    data = _check_data(data, k)
    centers = kmeans_init(data, k, config.seed)
    labels = _sq_dist(data, centers).argmin(axis=1)
    resp = np.zeros((data.shape[0], k))
    resp[np.arange(data.shape[0]), labels] = 1.0
    rescued: list[int] = []
    rescue_iters: list[int] = []
    weights, means, variances = m_step(data, resp, config.variance_floor, rescued)
    if rescued:
        rescue_iters.append(0)

    trace: list[float] = []
    converged = False
    for it in range(config.max_iter):
        model = ClusterModel(weights, means, variances, seed=config.seed, config=config)
        resp, ll = e_step(model, data)
        if not math.isfinite(ll):
            raise ClusteringError(f"non-finite log-likelihood at iteration {it}")
        trace.append(ll)
        if it > 0 and ll - trace[-2] < config.rel_tol * abs(trace[-2]):
            converged = True
            break
        if it == config.max_iter - 1:
            break
        before = len(rescued)
        weights, means, variances = m_step(data, resp, config.variance_floor, rescued)
        if len(rescued) > before:
            rescue_iters.append(it + 1)

    return ClusterModel(
        weights=weights,
        means=means,
        variances=variances,
        log_likelihood_trace=tuple(trace),
        converged=converged,
        seed=config.seed,
        config=config,
        rescues=tuple(rescue_iters),
    )


def assign(model: ClusterModel, data) -> Assignment:
    resp, _ = e_step(model, data)
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return Assignment(labels=resp.argmax(axis=1), responsibilities=resp)


def symmetric_kl(mean_a, var_a, mean_b, var_b) -> float:
    """KL(a||b) + KL(b||a) for diagonal Gaussians."""
    mean_a, var_a, mean_b, var_b = (np.asarray(x, dtype=float) for x in (mean_a, var_a, mean_b, var_b))
    diff2 = (mean_a - mean_b) ** 2
    # log-determinant terms cancel in the symmetrized sum
    return float(0.5 * np.sum(var_a / var_b + var_b / var_a - 2.0 + diff2 * (1.0 / var_a + 1.0 / var_b)))


def cluster_similarity(model: ClusterModel) -> np.ndarray:
    """k x k matrix of exp(-symmetric KL) between components."""
    k = model.k
    sim = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            s = math.exp(-symmetric_kl(model.means[i], model.variances[i], model.means[j], model.variances[j]))
            s = max(s, TINY)
            sim[i, j] = sim[j, i] = s
    return sim
