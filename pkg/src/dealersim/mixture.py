"""Multivariate Gaussian mixtures with EM fitting and exact conditionals.

The ECN evolution model needs three fitted mixtures (initial book volumes,
volume deltas given current volumes, order-size decomposition).  The deltas
mixture is used through its conditional distribution: given the observed
half of the joint vector, pick a component by posterior responsibility and
sample the unobserved half from the component's Schur-complement Gaussian.
"""

from __future__ import annotations

import numpy as np


class MixtureError(Exception):
    pass


class InsufficientData(MixtureError):
    """Fewer samples than mixture components."""


class DegenerateModel(MixtureError):
    """EM collapsed (non-finite parameters or an empty component)."""


def _log_gauss(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Log density of N(mean, cov) at rows of x."""
    d = mean.shape[0]
    chol = np.linalg.cholesky(cov)
    diff = x - mean
    z = np.linalg.solve(chol, diff.T)
    quad = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (d * np.log(2.0 * np.pi) + logdet + quad)


class GaussianMixture:
    """Weights, means and full covariances for k components in d dimensions."""

    JITTER = 1e-6

    def __init__(self, weights: np.ndarray, means: np.ndarray, covs: np.ndarray):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.covs = np.asarray(covs, dtype=float)
        if not (
            np.all(np.isfinite(self.weights))
            and np.all(np.isfinite(self.means))
            and np.all(np.isfinite(self.covs))
        ):
            raise DegenerateModel("non-finite mixture parameters")

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    # -- density / responsibilities -----------------------------------------

    def component_log_densities(self, x: np.ndarray) -> np.ndarray:
        """(n, k) matrix of log w_k + log N(x | mu_k, S_k)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty((x.shape[0], self.n_components))
        for k in range(self.n_components):
            out[:, k] = np.log(self.weights[k]) + _log_gauss(x, self.means[k], self.covs[k])
        return out

    def log_likelihood(self, x: np.ndarray) -> float:
        """Mean per-sample log likelihood."""
        comp = self.component_log_densities(x)
        m = comp.max(axis=1, keepdims=True)
        ll = m[:, 0] + np.log(np.exp(comp - m).sum(axis=1))
        return float(ll.mean())

    def responsibilities(self, x: np.ndarray) -> np.ndarray:
        comp = self.component_log_densities(x)
        m = comp.max(axis=1, keepdims=True)
        p = np.exp(comp - m)
        return p / p.sum(axis=1, keepdims=True)

    # -- sampling --------------------------------------------------------------

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        ks = rng.choice(self.n_components, size=n, p=self.weights / self.weights.sum())
        out = np.empty((n, self.dim))
        for i, k in enumerate(ks):
            out[i] = rng.multivariate_normal(self.means[k], self.covs[k], method="cholesky")
        return out

    # -- conditionals -----------------------------------------------------------

    def condition(self, observed_idx, observed_values) -> "GaussianMixture":
        """Mixture over the free coordinates given pinned coordinates.

        Component k keeps mean mu_f + S_fo S_oo^{-1} (x_o - mu_o) and
        covariance S_ff - S_fo S_oo^{-1} S_of; weights are reweighted by the
        marginal density of the observed block under each component.
        """
        observed_idx = np.asarray(observed_idx, dtype=int)
        observed_values = np.asarray(observed_values, dtype=float)
        free_idx = np.array([i for i in range(self.dim) if i not in set(observed_idx.tolist())])
        if free_idx.size == 0:
            raise ValueError("conditioning on every coordinate leaves nothing to sample")
        log_w = np.empty(self.n_components)
        means = np.empty((self.n_components, free_idx.size))
        covs = np.empty((self.n_components, free_idx.size, free_idx.size))
        for k in range(self.n_components):
            mu_o = self.means[k][observed_idx]
            mu_f = self.means[k][free_idx]
            s_oo = self.covs[k][np.ix_(observed_idx, observed_idx)]
            s_fo = self.covs[k][np.ix_(free_idx, observed_idx)]
            s_ff = self.covs[k][np.ix_(free_idx, free_idx)]
            s_oo = s_oo + self.JITTER * np.eye(s_oo.shape[0])
            gain = s_fo @ np.linalg.inv(s_oo)
            means[k] = mu_f + gain @ (observed_values - mu_o)
            cov = s_ff - gain @ s_fo.T
            cov = 0.5 * (cov + cov.T) + self.JITTER * np.eye(free_idx.size)
            covs[k] = cov
            log_w[k] = np.log(self.weights[k]) + _log_gauss(
                observed_values[None, :], mu_o, s_oo
            )[0]
        m = log_w.max()
        w = np.exp(log_w - m)
        return GaussianMixture(w / w.sum(), means, covs)

    def sample_conditional(
        self, observed_idx, observed_values, rng: np.random.Generator
    ) -> np.ndarray:
        return self.condition(observed_idx, observed_values).sample(rng, 1)[0]

    # -- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "k": int(self.n_components),
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covs": self.covs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixture":
        return cls(np.array(d["weights"]), np.array(d["means"]), np.array(d["covs"]))


def _kmeans_pp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ center choice: spread initial means over the data."""
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    for _ in range(k - 1):
        d2 = np.min(
            [np.sum((x - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(x[rng.integers(n)])
            continue
        centers.append(x[rng.choice(n, p=d2 / total)])
    return np.stack(centers)


def fit_em(
    x: np.ndarray,
    n_components: int,
    rng: np.random.Generator,
    tol: float = 1e-6,
    max_iter: int = 200,
):
    """Fit a GaussianMixture by EM. Returns (mixture, ll_trace).

    Stops when the mean log-likelihood improves by less than ``tol`` or at
    ``max_iter`` iterations.  Covariances get a 1e-6 diagonal jitter so that
    nearly-degenerate clusters stay invertible.  The trace is monotone
    non-decreasing up to that jitter.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if n < n_components:
        raise InsufficientData(f"{n} samples for {n_components} components")

    means = _kmeans_pp_centers(x, n_components, rng)
    base_cov = np.cov(x.T) if n > 1 else np.eye(d)
    base_cov = np.atleast_2d(base_cov) + GaussianMixture.JITTER * np.eye(d)
    covs = np.stack([base_cov.copy() for _ in range(n_components)])
    weights = np.full(n_components, 1.0 / n_components)
    model = GaussianMixture(weights, means, covs)

    trace: list[float] = []
    prev_ll = -np.inf
    for _ in range(max_iter):
        comp = model.component_log_densities(x)
        m = comp.max(axis=1, keepdims=True)
        log_norm = m[:, 0] + np.log(np.exp(comp - m).sum(axis=1))
        trace.append(float(log_norm.mean()))
        resp = np.exp(comp - log_norm[:, None])

        nk = resp.sum(axis=0)
        if np.any(nk < 1e-12):
            raise DegenerateModel("EM produced an empty component")
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        covs = np.empty((n_components, d, d))
        for k in range(n_components):
            diff = x - means[k]
            covs[k] = (resp[:, k, None] * diff).T @ diff / nk[k]
            covs[k] += GaussianMixture.JITTER * np.eye(d)
        model = GaussianMixture(weights, means, covs)

        if trace[-1] - prev_ll < tol and np.isfinite(prev_ll):
            break
        prev_ll = trace[-1]
    return model, trace
