"""Finite Gaussian mixture over joint space: density, K-means init, EM and sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

COV_EPS = 1e-6  # rad^2, covariance eigenvalue floor


def _cholesky(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"covariance must be square, got shape {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-14):
        raise ValueError("covariance must be symmetric")
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance is not positive definite") from exc


def _logpdf_chol(X: np.ndarray, mu: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Log-density of the rows of X under N(mu, L L^T)."""
    n = mu.shape[0]
    z = solve_triangular(L, (X - mu).T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", z, z)
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * (maha + log_det + n * math.log(2.0 * math.pi))


def gaussian_pdf(q, mu, sigma) -> float:
    q = np.atleast_1d(np.asarray(q, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if q.shape != mu.shape:
        raise ValueError(f"q has shape {q.shape} but mu has shape {mu.shape}")
    L = _cholesky(np.atleast_2d(sigma))
    if L.shape[0] != mu.shape[0]:
        raise ValueError("covariance size does not match mean")
    return float(np.exp(_logpdf_chol(q[None], mu, L)[0]))


@dataclass
class Fgmm:
    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, n)
    covariances: np.ndarray  # (K, n, n)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        K = len(self.weights)
        self.means = np.asarray(self.means, dtype=float).reshape(K, -1)
        n = self.means.shape[1]
        self.covariances = np.asarray(self.covariances, dtype=float).reshape(K, n, n)
        if K < 1:
            raise ValueError("mixture needs at least one component")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must be non-negative and sum to 1, got {self.weights}")
        if not np.all(np.isfinite(self.means)):
            raise ValueError("means must be finite")
        self._chol = np.array([_cholesky(c) for c in self.covariances])

    @property
    def K(self) -> int:
        return len(self.weights)

    @property
    def n(self) -> int:
        return self.means.shape[1]

    def component_logpdf(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n:
            raise ValueError(f"expected points of dimension {self.n}, got {X.shape[1]}")
        return np.stack([_logpdf_chol(X, m, L) for m, L in zip(self.means, self._chol)], axis=1)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Fgmm":
        return cls(np.array(d["weights"]), np.array(d["means"]), np.array(d["covariances"]))


def mixture_density(q, model: Fgmm) -> float:
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if q.shape != (model.n,):
        raise ValueError(f"expected a point of dimension {model.n}, got shape {q.shape}")
    dens = np.exp(model.component_logpdf(q[None])[0])
    return float(np.sum(model.weights * dens))


def as_dataset(data) -> np.ndarray:
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("dataset must be a non-empty (M, n) array")
    if not np.all(np.isfinite(X)):
        raise ValueError("dataset contains non-finite values")
    return X


def _scatter(X: np.ndarray, w: np.ndarray, mu: np.ndarray) -> np.ndarray:
    d = X - mu
    total = w.sum()
    cov = (w[:, None] * d).T @ d / total if total > 0 else np.zeros((X.shape[1],) * 2)
    return 0.5 * (cov + cov.T)


def floor_eigenvalues(cov: np.ndarray, eps: float) -> np.ndarray:
    """Closest-in-likelihood covariance with every eigenvalue >= eps.

    Clipping the spectrum is the maximiser of the Gaussian likelihood over
    {Sigma >= eps I}, so EM on that set keeps its monotone log-likelihood.
    """
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] >= eps:
        return cov
    out = (vecs * np.maximum(vals, eps)) @ vecs.T
    return 0.5 * (out + out.T)


def _kmeans_pp(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    M = len(X)
    chosen = [int(rng.integers(M))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(M, p=d2 / total))
        else:
            # duplicate-only data: pick any point not used yet
            free = np.setdiff1d(np.arange(M), chosen)
            idx = int(rng.choice(free))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return X[chosen].copy()


def kmeans_init(data, K: int, rng: np.random.Generator, max_iter: int = 100, eps: float = COV_EPS):
    """Lloyd's K-means from k-means++ seeds; returns (assignments, initial Fgmm).

    An empty cluster takes over the point farthest from its current centroid.
    """
    X = as_dataset(data)
    M = len(X)
    if K < 1:
        raise ValueError("K must be at least 1")
    if M < K:
        raise ValueError(f"need at least K={K} points, got {M}")
    centroids = _kmeans_pp(X, K, rng)
    assign = None
    for _ in range(max_iter):
        d2 = np.sum((X[:, None, :] - centroids[None]) ** 2, axis=2)
        new = np.argmin(d2, axis=1)
        for k in range(K):
            if not np.any(new == k):
                own = d2[np.arange(M), new]
                # only steal from clusters that keep at least one point
                counts = np.bincount(new, minlength=K)
                own = np.where(counts[new] > 1, own, -1.0)
                j = int(np.argmax(own))
                new[j] = k
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        centroids = np.array([X[assign == k].mean(axis=0) for k in range(K)])

    counts = np.bincount(assign, minlength=K).astype(float)
    eye = np.eye(X.shape[1])
    covs = np.array([_scatter(X[assign == k], np.ones(int(counts[k])), centroids[k]) + eps * eye for k in range(K)])
    return assign, Fgmm(counts / counts.sum(), centroids, covs)


def responsibilities(data, model: Fgmm):
    """E-step: posterior component probabilities and the total log-likelihood."""
    X = as_dataset(data)
    with np.errstate(divide="ignore"):
        log_joint = np.log(model.weights)[None] + model.component_logpdf(X)
    log_norm = logsumexp(log_joint, axis=1)
    return np.exp(log_joint - log_norm[:, None]), float(np.sum(log_norm))


def log_likelihood(data, model: Fgmm) -> float:
    return responsibilities(data, model)[1]


def m_step(X: np.ndarray, resp: np.ndarray, previous: Fgmm, eps: float = COV_EPS) -> Fgmm:
    Mk = resp.sum(axis=0)
    weights = Mk / Mk.sum()
    means = previous.means.copy()
    covs = np.empty_like(previous.covariances)
    for k in range(len(Mk)):
        if Mk[k] > 0:
            means[k] = resp[:, k] @ X / Mk[k]
            covs[k] = floor_eigenvalues(_scatter(X, resp[:, k], means[k]), eps)
        else:
            covs[k] = eps * np.eye(X.shape[1])
    return Fgmm(weights, means, covs)


def em_fit(data, K: int, tol: float = 1e-6, max_iter: int = 200, rng=None, eps: float = COV_EPS,
           on_step=None):
    """Fit a K-component mixture by EM from a K-means start.

    Returns ``(model, trace)`` where ``trace[t]`` is the log-likelihood after
    ``t`` M-steps; the model matches ``trace[-1]``. ``on_step(model, resp)`` is
    called after every M-step.
    """
    X = as_dataset(data)
    if len(X) < K:
        raise ValueError(f"need at least K={K} points, got {len(X)}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng() if rng is None else rng
    _, model = kmeans_init(X, K, rng, eps=eps)
    resp, H = responsibilities(X, model)
    trace = [H]
    for _ in range(max_iter):
        model = m_step(X, resp, model, eps)
        if on_step is not None:
            on_step(model, resp)
        resp, H = responsibilities(X, model)
        trace.append(H)
        if abs(trace[-1] - trace[-2]) < tol:
            break
    return model, trace


def sample(model: Fgmm, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw a component by weight, then a point from it."""
    count = 1 if size is None else size
    ks = rng.choice(model.K, size=count, p=model.weights)
    z = rng.standard_normal((count, model.n))
    out = model.means[ks] + np.einsum("nij,nj->ni", model._chol[ks], z)
    return out[0] if size is None else out
