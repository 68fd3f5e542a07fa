"""Variational GP over latent utility at observed configs.

RBF-ARD kernel with a fixed output scale, constant mean, a learnable
indifference threshold (gamma), and a full-rank Gaussian variational
distribution over the latent utilities at the training configs (all training
points act as inducing inputs). Training maximizes a Monte Carlo ELBO with
full-batch Adam; prediction and sampling are plain numpy.

The effective kernel carries the stabilizing jitter as a white-noise term on
coinciding points: k~(x, x') = k(x, x') + jitter * 1[x == x']. This keeps the
posterior an exact fixed point of the variational distribution at training
configs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg as sla
import torch

from .preference import LOG_STABILIZER, PreferenceDataset

Array = np.ndarray

OUTPUT_SCALE = 10.0
DEFAULT_SIGMA = 0.04
DEFAULT_JITTER = 1e-4
MAX_JITTER = 1e-1
GAMMA_INIT = 0.01
LENGTHSCALE_INIT = math.log(2.0)  # softplus(0)


@dataclass(frozen=True)
class KernelParams:
    """ARD lengthscales (one per input dimension) and the fixed output scale."""

    lengthscales: Array
    output_scale: float = OUTPUT_SCALE

    def __post_init__(self) -> None:
        ls = np.asarray(self.lengthscales, dtype=float).reshape(-1)
        object.__setattr__(self, "lengthscales", ls)
        if np.any(ls <= 0):
            raise ValueError("lengthscales must be positive")


def kernel_matrix(X: Array, X2: Array, params: KernelParams) -> Array:
    """RBF-ARD kernel: output_scale * exp(-0.5 * sum_d (x_d - x'_d)^2 / l_d^2)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    d = params.lengthscales.shape[0]
    if X.shape[1] != d or X2.shape[1] != d:
        raise ValueError("input dimension does not match lengthscale count")
    a = X / params.lengthscales
    b = X2 / params.lengthscales
    sq = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T
    return params.output_scale * np.exp(-0.5 * np.maximum(sq, 0.0))


def _equality_mask(X: Array, X2: Array) -> Array:
    """Boolean (n, m) mask of bitwise-identical rows, via byte keys."""
    mask = np.zeros((X.shape[0], X2.shape[0]), dtype=bool)
    index: dict[bytes, list[int]] = {}
    for j in range(X2.shape[0]):
        index.setdefault(X2[j].tobytes(), []).append(j)
    for i in range(X.shape[0]):
        for j in index.get(X[i].tobytes(), ()):
            mask[i, j] = True
    return mask


def _chol_with_escalation(mat: Array, jitter: float) -> Array:
    """Lower Cholesky factor, escalating added jitter x10 up to the cap."""
    extra = 0.0
    step = jitter
    while True:
        try:
            return np.linalg.cholesky(mat + extra * np.eye(mat.shape[0]))
        except np.linalg.LinAlgError:
            step = step * 10.0 if extra else jitter * 10.0
            extra = step
            if extra > MAX_JITTER:
                raise np.linalg.LinAlgError(
                    f"covariance not factorizable even with jitter {MAX_JITTER}"
                )


@dataclass(frozen=True)
class SurrogateModel:
    """Immutable trained (or prior) surrogate state.

    ``m_u`` and ``chol_factor`` parameterize the variational Gaussian over the
    latent utilities at ``train_configs``; ``gamma`` is the fitted threshold
    (0 when frozen) and ``sigma`` the fixed perceptual noise.
    """

    train_configs: Array
    lengthscales: Array
    mean_const: float
    m_u: Array
    chol_factor: Array
    gamma: float
    sigma: float = DEFAULT_SIGMA
    output_scale: float = OUTPUT_SCALE
    jitter: float = DEFAULT_JITTER
    lengthscale_prior: Optional[tuple[float, float]] = None
    gamma_mode: str = "learnable"
    seed: int = 0
    best_loss: float = math.nan
    best_iteration: int = -1

    def __post_init__(self) -> None:
        tc = np.atleast_2d(np.asarray(self.train_configs, dtype=float))
        if tc.size == 0:
            tc = tc.reshape(0, max(1, tc.shape[-1] if tc.ndim > 1 else 1))
        object.__setattr__(self, "train_configs", tc)
        object.__setattr__(self, "lengthscales", np.asarray(self.lengthscales, dtype=float).reshape(-1))
        object.__setattr__(self, "m_u", np.asarray(self.m_u, dtype=float).reshape(-1))
        L = np.asarray(self.chol_factor, dtype=float)
        object.__setattr__(self, "chol_factor", L.reshape(tc.shape[0], tc.shape[0]))
        t = tc.shape[0]
        if self.m_u.shape[0] != t:
            raise ValueError("variational mean length must match training-config count")
        if t and (np.any(np.triu(self.chol_factor, 1) != 0) or np.any(np.diag(self.chol_factor) <= 0)):
            raise ValueError("chol_factor must be lower-triangular with positive diagonal")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative after transform")

    @classmethod
    def prior(cls, dim: int, *, mean_const: float = 0.0, lengthscales: Array | None = None,
              gamma: float = 0.0, sigma: float = DEFAULT_SIGMA) -> "SurrogateModel":
        """Data-free model: posterior equals the GP prior."""
        ls = np.full(dim, LENGTHSCALE_INIT) if lengthscales is None else np.asarray(lengthscales, dtype=float)
        return cls(
            train_configs=np.zeros((0, dim)),
            lengthscales=ls,
            mean_const=mean_const,
            m_u=np.zeros(0),
            chol_factor=np.zeros((0, 0)),
            gamma=gamma,
            sigma=sigma,
        )

    @property
    def dim(self) -> int:
        return self.train_configs.shape[1]

    @property
    def n_train(self) -> int:
        return self.train_configs.shape[0]

    @property
    def kernel(self) -> KernelParams:
        return KernelParams(self.lengthscales, self.output_scale)

    def _solver(self):
        cache = self.__dict__.get("_cache")
        if cache is None:
            Ktt = kernel_matrix(self.train_configs, self.train_configs, self.kernel)
            Ktt[np.diag_indices_from(Ktt)] += self.jitter
            cho = _chol_with_escalation(Ktt, self.jitter)
            resid = self.m_u - self.mean_const
            alpha = sla.cho_solve((cho, True), resid) if self.n_train else resid
            cache = {"cho": cho, "alpha": alpha}
            self.__dict__["_cache"] = cache
        return cache

    def cross_cov(self, X: Array, X2: Array) -> Array:
        """Kernel block with the jitter white-noise term on identical points."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        K = kernel_matrix(X, X2, self.kernel)
        K += self.jitter * _equality_mask(X, X2)
        return K

    def posterior_mean(self, Xq: Array) -> Array:
        """Posterior mean at query points (cheaper than the full joint)."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        if self.n_train == 0:
            return np.full(Xq.shape[0], self.mean_const)
        cache = self._solver()
        Kqt = self.cross_cov(Xq, self.train_configs)
        return self.mean_const + Kqt @ cache["alpha"]

    def posterior_joint(self, Xq: Array) -> tuple[Array, Array]:
        """Mean vector and covariance matrix of the latent utility at Xq."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        Kqq = self.cross_cov(Xq, Xq)
        if self.n_train == 0:
            return np.full(Xq.shape[0], self.mean_const), Kqq
        cache = self._solver()
        Kqt = self.cross_cov(Xq, self.train_configs)
        mean = self.mean_const + Kqt @ cache["alpha"]
        A = sla.cho_solve((cache["cho"], True), Kqt.T)  # (t, q)
        LtA = self.chol_factor.T @ A
        cov = Kqq - Kqt @ A + LtA.T @ LtA
        cov = 0.5 * (cov + cov.T)
        return mean, cov

    def pair_stats(self, X: Array, x_ref: Array) -> dict[str, Array]:
        """Bivariate posterior stats of (f(x_i), f(x_ref)) for a batch of x_i."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x_ref = np.asarray(x_ref, dtype=float).reshape(1, -1)
        prior_var = self.output_scale + self.jitter
        if self.n_train == 0:
            k_xr = self.cross_cov(X, x_ref)[:, 0]
            n = X.shape[0]
            return {
                "mu_x": np.full(n, self.mean_const),
                "mu_r": float(self.mean_const),
                "var_x": np.full(n, prior_var),
                "var_r": prior_var,
                "cov_xr": k_xr,
            }
        cache = self._solver()
        Kxt = self.cross_cov(X, self.train_configs)  # (n, t)
        krt = self.cross_cov(x_ref, self.train_configs)[0]  # (t,)
        A_x = sla.cho_solve((cache["cho"], True), Kxt.T)  # (t, n)
        a_r = sla.cho_solve((cache["cho"], True), krt)  # (t,)
        LtAx = self.chol_factor.T @ A_x
        Ltar = self.chol_factor.T @ a_r
        mu_x = self.mean_const + Kxt @ cache["alpha"]
        mu_r = float(self.mean_const + krt @ cache["alpha"])
        var_x = prior_var - np.einsum("nt,tn->n", Kxt, A_x) + np.einsum("tn,tn->n", LtAx, LtAx)
        var_r = float(prior_var - krt @ a_r + Ltar @ Ltar)
        cov_xr = self.cross_cov(X, x_ref)[:, 0] - Kxt @ a_r + LtAx.T @ Ltar
        return {"mu_x": mu_x, "mu_r": mu_r, "var_x": var_x, "var_r": var_r, "cov_xr": cov_xr}


def posterior_joint(model: SurrogateModel, Xq: Array) -> tuple[Array, Array]:
    return model.posterior_joint(Xq)


def sample_posterior(model: SurrogateModel, Xq: Array, n: int, rng: np.random.Generator) -> Array:
    """n joint draws of the latent utility at Xq, shape (n, len(Xq))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    mean, cov = model.posterior_joint(Xq)
    chol = _chol_with_escalation(cov, model.jitter)
    z = rng.standard_normal((n, mean.shape[0]))
    return mean[None, :] + z @ chol.T


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-2
    iterations: int = 2000
    mc_samples: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.iterations <= 0 or self.mc_samples <= 0:
            raise ValueError("training config values must be positive")


def _inv_softplus(y: float) -> float:
    return math.log(math.expm1(y))


def _torch_ndtr(x: torch.Tensor) -> torch.Tensor:
    return torch.special.ndtr(x)


class ElboTrainer:
    """Differentiable ELBO for one dataset; owns the raw (unconstrained) parameters.

    The variational distribution is parameterized in prior-whitened
    coordinates, with u = m + L_K (m_v + S z) and L_K the prior Cholesky, so
    lengthscale gradients also flow through the likelihood and the initial
    state (m_v = 0, S = I) is exactly the GP prior. Positive quantities live
    through a softplus; Monte Carlo expectations use the reparameterization
    trick so gradients flow through the samples.
    """

    def __init__(
        self,
        dataset: PreferenceDataset,
        *,
        sigma: float = DEFAULT_SIGMA,
        gamma_mode: str = "learnable",
        lengthscale_prior: Optional[tuple[float, float]] = None,
        jitter: float = DEFAULT_JITTER,
        output_scale: float = OUTPUT_SCALE,
    ):
        if gamma_mode not in ("learnable", "frozen-zero"):
            raise ValueError("gamma_mode must be 'learnable' or 'frozen-zero'")
        configs = dataset.configs
        self.t = configs.shape[0]
        self.dim = configs.shape[1]
        self.sigma = sigma
        self.gamma_mode = gamma_mode
        self.lengthscale_prior = lengthscale_prior
        self.jitter = jitter
        self.output_scale = output_scale
        self.X = torch.tensor(configs, dtype=torch.float64)
        prev, curr, labels = dataset.label_arrays()
        self.prev = torch.tensor(prev, dtype=torch.long)
        self.curr = torch.tensor(curr, dtype=torch.long)
        lab = torch.tensor(labels, dtype=torch.long)
        self.mask_plus = (lab == 1).to(torch.float64)
        self.mask_zero = (lab == 0).to(torch.float64)
        self.mask_minus = (lab == -1).to(torch.float64)
        self.n_comp = len(dataset)

        dt = torch.float64
        self.raw_lengthscales = torch.zeros(self.dim, dtype=dt, requires_grad=True)
        self.mean_const = torch.zeros((), dtype=dt, requires_grad=True)
        self.m_v = torch.zeros(self.t, dtype=dt, requires_grad=True)
        raw_S = torch.eye(self.t, dtype=dt) * _inv_softplus(1.0)
        self.raw_S = raw_S.clone().requires_grad_(True)
        if gamma_mode == "learnable":
            self.raw_gamma = torch.tensor(_inv_softplus(GAMMA_INIT), dtype=dt, requires_grad=True)
        else:
            self.raw_gamma = torch.zeros((), dtype=dt)  # unused; gamma pinned to 0

    def parameters(self) -> list[torch.Tensor]:
        params = [self.raw_lengthscales, self.mean_const, self.m_v, self.raw_S]
        if self.gamma_mode == "learnable":
            params.append(self.raw_gamma)
        return params

    def _constrained(self) -> dict[str, torch.Tensor]:
        S = torch.tril(self.raw_S, -1) + torch.diag(
            torch.nn.functional.softplus(torch.diagonal(self.raw_S))
        )
        gamma = (
            torch.nn.functional.softplus(self.raw_gamma)
            if self.gamma_mode == "learnable"
            else torch.zeros((), dtype=torch.float64)
        )
        return {
            "lengthscales": torch.nn.functional.softplus(self.raw_lengthscales),
            "mean_const": self.mean_const,
            "m_v": self.m_v,
            "S": S,
            "gamma": gamma,
        }

    def transformed(self) -> dict[str, torch.Tensor]:
        """Constrained values in latent-utility coordinates (m_u, L)."""
        p = self._constrained()
        cholK = self._prior_chol(p["lengthscales"])
        return {
            "lengthscales": p["lengthscales"],
            "mean_const": p["mean_const"],
            "m_u": p["mean_const"] + cholK @ p["m_v"],
            "L": cholK @ p["S"],
            "gamma": p["gamma"],
        }

    def set_values(self, lengthscales, mean_const, m_u, L, gamma) -> None:
        """Load latent-coordinate values into the raw (whitened) parameters."""

        def inv_sp(v: torch.Tensor) -> torch.Tensor:
            return torch.log(torch.expm1(v))

        with torch.no_grad():
            ls = torch.as_tensor(lengthscales, dtype=torch.float64)
            self.raw_lengthscales.copy_(inv_sp(ls))
            self.mean_const.copy_(torch.as_tensor(mean_const, dtype=torch.float64))
            cholK = self._prior_chol(ls)
            m_u_t = torch.as_tensor(m_u, dtype=torch.float64)
            m_v = torch.linalg.solve_triangular(
                cholK, (m_u_t - self.mean_const)[:, None], upper=False
            )[:, 0]
            self.m_v.copy_(m_v)
            Lt = torch.as_tensor(L, dtype=torch.float64)
            S = torch.linalg.solve_triangular(cholK, Lt, upper=False)
            raw = torch.tril(S, -1) + torch.diag(inv_sp(torch.diagonal(S)))
            self.raw_S.copy_(raw)
            if self.gamma_mode == "learnable":
                self.raw_gamma.copy_(inv_sp(torch.as_tensor(gamma, dtype=torch.float64)))

    def _prior_chol(self, lengthscales: torch.Tensor) -> torch.Tensor:
        a = self.X / lengthscales
        sq = (a * a).sum(1)[:, None] + (a * a).sum(1)[None, :] - 2.0 * a @ a.T
        K = self.output_scale * torch.exp(-0.5 * torch.clamp(sq, min=0.0))
        eye = torch.eye(self.t, dtype=torch.float64)
        extra = 0.0
        while True:
            try:
                return torch.linalg.cholesky(K + (self.jitter + extra) * eye)
            except torch.linalg.LinAlgError:
                extra = self.jitter * 10.0 if extra == 0.0 else extra * 10.0
                if self.jitter + extra > MAX_JITTER:
                    raise

    def elbo(self, Z: torch.Tensor) -> torch.Tensor:
        """MC ELBO for a fixed noise matrix Z of shape (S, t)."""
        p = self._constrained()
        # expected log-likelihood
        if self.n_comp:
            cholK = self._prior_chol(p["lengthscales"])
            w = p["m_v"][None, :] + Z @ p["S"].T
            u = p["mean_const"] + w @ cholK.T
            delta = u[:, self.curr] - u[:, self.prev]
            scale = math.sqrt(2.0) * self.sigma
            g = p["gamma"]
            p_plus = _torch_ndtr((delta - g) / scale)
            p_minus = _torch_ndtr((-delta - g) / scale)
            p_zero = _torch_ndtr((g - delta) / scale) - _torch_ndtr((-g - delta) / scale)
            probs = (
                p_plus * self.mask_plus[None, :]
                + p_zero * self.mask_zero[None, :]
                + p_minus * self.mask_minus[None, :]
            )
            loglik = torch.log(probs + LOG_STABILIZER).sum(dim=1).mean()
        else:
            loglik = torch.zeros((), dtype=torch.float64)
        # KL(q || p): exact in whitened coordinates, independent of the kernel
        S = p["S"]
        kl = 0.5 * (
            (p["m_v"] * p["m_v"]).sum()
            + (S * S).sum()
            - self.t
            - 2.0 * torch.log(torch.diagonal(S)).sum()
        )
        value = loglik - kl
        if self.lengthscale_prior is not None:
            shape, rate = self.lengthscale_prior
            ls = p["lengthscales"]
            log_pdf = (
                shape * math.log(rate)
                - math.lgamma(shape)
                + (shape - 1.0) * torch.log(ls)
                - rate * ls
            ).sum()
            value = value + log_pdf
        return value

    def noise(self, mc_samples: int, generator: torch.Generator) -> torch.Tensor:
        return torch.randn(mc_samples, self.t, dtype=torch.float64, generator=generator)


def fit(
    dataset: PreferenceDataset,
    train_cfg: TrainingConfig = TrainingConfig(),
    *,
    sigma: float = DEFAULT_SIGMA,
    gamma_mode: str = "learnable",
    lengthscale_prior: Optional[tuple[float, float]] = None,
) -> SurrogateModel:
    """Optimize the ELBO for a fixed number of Adam steps; return the best snapshot.

    Deterministic given the seed; the returned model carries the lowest loss
    recorded across all iterations (evaluated before each update).
    """
    if len(dataset) == 0:
        raise ValueError("dataset must contain at least one comparison")
    if dataset.configs.shape[0] < 2:
        raise ValueError("need at least 2 distinct configs")
    trainer = ElboTrainer(
        dataset,
        sigma=sigma,
        gamma_mode=gamma_mode,
        lengthscale_prior=lengthscale_prior,
    )
    opt = torch.optim.Adam(trainer.parameters(), lr=train_cfg.learning_rate)
    gen = torch.Generator().manual_seed(int(train_cfg.seed) & 0x7FFFFFFFFFFFFFFF)
    best_loss = math.inf
    best_iter = -1
    best_state: dict[str, Array] | None = None
    for it in range(train_cfg.iterations):
        Z = trainer.noise(train_cfg.mc_samples, gen)
        loss = -trainer.elbo(Z)
        if not torch.isfinite(loss):
            raise RuntimeError(f"non-finite training loss at iteration {it}")
        value = float(loss.detach())
        if value < best_loss:
            best_loss = value
            best_iter = it
            with torch.no_grad():
                tr = trainer.transformed()
                best_state = {k: v.detach().clone().numpy().copy() for k, v in tr.items()}
        opt.zero_grad()
        loss.backward()
        opt.step()
    assert best_state is not None
    return SurrogateModel(
        train_configs=dataset.configs,
        lengthscales=best_state["lengthscales"],
        mean_const=float(best_state["mean_const"]),
        m_u=best_state["m_u"],
        chol_factor=best_state["L"],
        gamma=float(best_state["gamma"]),
        sigma=sigma,
        lengthscale_prior=lengthscale_prior,
        gamma_mode=gamma_mode,
        seed=train_cfg.seed,
        best_loss=best_loss,
        best_iteration=best_iter,
    )


def elbo(
    model: SurrogateModel,
    dataset: PreferenceDataset,
    mc_samples: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo ELBO of a model state on its training dataset (numpy path)."""
    if dataset.configs.shape[0] != model.n_train or (
        model.n_train and not np.array_equal(dataset.configs, model.train_configs)
    ):
        raise ValueError("dataset configs must equal model train_configs")
    t = model.n_train
    Ktt = kernel_matrix(model.train_configs, model.train_configs, model.kernel)
    Ktt[np.diag_indices_from(Ktt)] += model.jitter
    cho = _chol_with_escalation(Ktt, model.jitter) if t else np.zeros((0, 0))
    # expected log-likelihood
    if len(dataset):
        from .preference import log_likelihood, LikelihoodParams

        params = LikelihoodParams(sigma=model.sigma, gamma=model.gamma)
        total = 0.0
        Z = rng.standard_normal((mc_samples, t))
        U = model.m_u[None, :] + Z @ model.chol_factor.T
        for s in range(mc_samples):
            total += log_likelihood(dataset, U[s], params)
        loglik = total / mc_samples
    else:
        loglik = 0.0
    if t:
        V = sla.solve_triangular(cho, model.chol_factor, lower=True)
        diff = model.mean_const - model.m_u
        alpha = sla.solve_triangular(cho, diff, lower=True)
        kl = 0.5 * (
            np.sum(V * V)
            + np.sum(alpha * alpha)
            - t
            + 2.0 * np.sum(np.log(np.diag(cho)))
            - 2.0 * np.sum(np.log(np.diag(model.chol_factor)))
        )
    else:
        kl = 0.0
    value = loglik - kl
    if model.lengthscale_prior is not None:
        shape, rate = model.lengthscale_prior
        ls = model.lengthscales
        value += float(
            np.sum(shape * np.log(rate) - math.lgamma(shape) + (shape - 1) * np.log(ls) - rate * ls)
        )
    return float(value)


def model_to_document(model: SurrogateModel) -> dict:
    """Self-describing JSON checkpoint of a surrogate state."""
    return {
        "format": "prefbo-surrogate-v1",
        "dim": model.dim,
        "train_configs": model.train_configs.tolist(),
        "lengthscales": model.lengthscales.tolist(),
        "output_scale": model.output_scale,
        "mean_const": model.mean_const,
        "m_u": model.m_u.tolist(),
        "chol_factor": model.chol_factor.tolist(),
        "gamma": model.gamma,
        "sigma": model.sigma,
        "jitter": model.jitter,
        "lengthscale_prior": list(model.lengthscale_prior) if model.lengthscale_prior else None,
        "gamma_mode": model.gamma_mode,
        "seed": model.seed,
        "best_loss": model.best_loss,
        "best_iteration": model.best_iteration,
    }


def model_from_document(doc: dict) -> SurrogateModel:
    if doc.get("format") != "prefbo-surrogate-v1":
        raise ValueError("unrecognized checkpoint format")
    t = len(doc["train_configs"])
    return SurrogateModel(
        train_configs=np.asarray(doc["train_configs"], dtype=float).reshape(t, doc["dim"]),
        lengthscales=np.asarray(doc["lengthscales"], dtype=float),
        mean_const=float(doc["mean_const"]),
        m_u=np.asarray(doc["m_u"], dtype=float),
        chol_factor=np.asarray(doc["chol_factor"], dtype=float).reshape(t, t),
        gamma=float(doc["gamma"]),
        sigma=float(doc["sigma"]),
        output_scale=float(doc["output_scale"]),
        jitter=float(doc["jitter"]),
        lengthscale_prior=tuple(doc["lengthscale_prior"]) if doc.get("lengthscale_prior") else None,
        gamma_mode=doc.get("gamma_mode", "learnable"),
        seed=int(doc.get("seed", 0)),
        best_loss=float(doc.get("best_loss", math.nan)),
        best_iteration=int(doc.get("best_iteration", -1)),
    )
