"""Shared-latent multi-view VAE with a Gaussian-mixture prior.

Each view v has its own encoder producing a Gaussian posterior
(mu_v, sigma_v^2) over the shared latent z; the per-view posteriors are
fused by simplex weights w (softmax of free logits) into

    mu    = sum_v w_v * mu_v
    sigma2 = sum_v w_v * sigma_v^2

The latent prior is a K-component diagonal-Gaussian mixture, and each view
has its own decoder (Bernoulli or Gaussian likelihood). Training maximizes
a closed-form evidence lower bound built from four terms: per-view
reconstruction, a responsibility-weighted Gaussian cross term, a
categorical term sum_c gamma_c * log(pi_c / gamma_c), and the posterior
entropy term 0.5 * sum_j (1 + log sigma2_j).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numgrad import Graph, ParamStore, as_tensor, forward
from .seeding import rng_for

LOG_2PI = math.log(2.0 * math.pi)
LOGVAR_MIN = -15.0
LOGVAR_MAX = 15.0
BERNOULLI_EPS = 1e-10
GAMMA_FLOOR = 1e-10
LIKELIHOODS = ("bernoulli", "gaussian")

PARAMS_FILE = "params.bin"
DESCRIPTOR_FILE = "descriptor.json"

# batch size used when pushing whole datasets through the encoders
_INFER_CHUNK = 4096


@dataclass(frozen=True)
class ModelConfig:
    """Architecture descriptor: view dims, latent size, mixture size, widths."""

    view_dims: tuple[int, ...]
    latent_dim: int
    n_clusters: int
    likelihood: str
    encoder_hidden: tuple[int, ...] = (500, 500, 200)
    decoder_hidden: tuple[int, ...] = (2000, 500, 500)

    def __post_init__(self):
        object.__setattr__(self, "view_dims", tuple(int(d) for d in self.view_dims))
        object.__setattr__(self, "encoder_hidden", tuple(int(d) for d in self.encoder_hidden))
        object.__setattr__(self, "decoder_hidden", tuple(int(d) for d in self.decoder_hidden))
        if not self.view_dims or any(d < 1 for d in self.view_dims):
            raise ValueError(f"view_dims must be positive, got {self.view_dims}")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.likelihood not in LIKELIHOODS:
            raise ValueError(f"likelihood must be one of {LIKELIHOODS}, got {self.likelihood!r}")
        if any(w < 1 for w in self.encoder_hidden) or any(w < 1 for w in self.decoder_hidden):
            raise ValueError("hidden widths must be >= 1")

    @property
    def n_views(self) -> int:
        return len(self.view_dims)

    def to_dict(self) -> dict:
        return {
            "view_dims": list(self.view_dims),
            "latent_dim": self.latent_dim,
            "n_clusters": self.n_clusters,
            "likelihood": self.likelihood,
            "encoder_hidden": list(self.encoder_hidden),
            "decoder_hidden": list(self.decoder_hidden),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            view_dims=tuple(d["view_dims"]),
            latent_dim=int(d["latent_dim"]),
            n_clusters=int(d["n_clusters"]),
            likelihood=str(d["likelihood"]),
            encoder_hidden=tuple(d["encoder_hidden"]),
            decoder_hidden=tuple(d["decoder_hidden"]),
        )


@dataclass
class FusionWeights:
    """Free logits whose softmax is the view-weight vector on the simplex."""

    logits: np.ndarray

    def __post_init__(self):
        self.logits = as_tensor(self.logits).reshape(-1)

    @property
    def weights(self) -> np.ndarray:
        return softmax(self.logits)


@dataclass
class GmmPrior:
    """Mixture weights plus per-component diagonal Gaussian moments."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        self.weights = as_tensor(self.weights).reshape(-1)
        self.means = as_tensor(self.means)
        self.variances = as_tensor(self.variances)
        if self.means.shape != self.variances.shape or self.means.ndim != 2:
            raise ValueError("means and variances must both be (K, J)")
        if self.weights.shape[0] != self.means.shape[0]:
            raise ValueError("weights length must match component count")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-8:
            raise ValueError("mixture weights must be positive and sum to 1")
        if np.any(self.variances <= 0):
            raise ValueError("component variances must be positive")

    @property
    def n_clusters(self) -> int:
        return self.means.shape[0]


@dataclass
class LatentPosterior:
    """Fused posterior mean and variance of the shared latent, per sample."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        self.mean = as_tensor(self.mean)
        self.var = as_tensor(self.var)
        if self.mean.shape != self.var.shape:
            raise ValueError("mean and var must share a shape")


def softmax(x: np.ndarray) -> np.ndarray:
    x = as_tensor(x)
    e = np.exp(x - np.max(x))
    return e / e.sum()


# -- parameter naming ---------------------------------------------------------


def _enc(v, i, kind):
    return f"enc{v}_{kind}{i}"


def _dec(v, i, kind):
    return f"dec{v}_{kind}{i}"


def _layer_widths(config: ModelConfig, view: int):
    enc = [config.view_dims[view], *config.encoder_hidden, 2 * config.latent_dim]
    head = config.view_dims[view] if config.likelihood == "bernoulli" else 2 * config.view_dims[view]
    dec = [config.latent_dim, *config.decoder_hidden, head]
    return enc, dec


def init_params(config: ModelConfig, seed: int) -> ParamStore:
    """He-initialized hidden layers, small linear heads, zeroed log-variance
    head columns (so every variance starts at 1)."""
    params = ParamStore()
    J = config.latent_dim
    for v in range(config.n_views):
        enc_w, dec_w = _layer_widths(config, v)
        for i in range(len(enc_w) - 1):
            fan_in, fan_out = enc_w[i], enc_w[i + 1]
            rng = rng_for(seed, "init-enc", v, i)
            last = i == len(enc_w) - 2
            scale = math.sqrt(1.0 / fan_in) if last else math.sqrt(2.0 / fan_in)
            w = rng.normal(0.0, scale, size=(fan_in, fan_out))
            if last:
                w[:, J:] = 0.0
            params.add(_enc(v, i, "w"), w)
            params.add(_enc(v, i, "b"), np.zeros(fan_out))
        for i in range(len(dec_w) - 1):
            fan_in, fan_out = dec_w[i], dec_w[i + 1]
            rng = rng_for(seed, "init-dec", v, i)
            last = i == len(dec_w) - 2
            scale = math.sqrt(1.0 / fan_in) if last else math.sqrt(2.0 / fan_in)
            w = rng.normal(0.0, scale, size=(fan_in, fan_out))
            if last and config.likelihood == "gaussian":
                w[:, config.view_dims[v] :] = 0.0
            params.add(_dec(v, i, "w"), w)
            params.add(_dec(v, i, "b"), np.zeros(fan_out))
    params.add("fusion_logits", np.zeros(config.n_views))
    params.add("mix_logits", np.zeros(config.n_clusters))
    rng = rng_for(seed, "init-gmm")
    params.add("gmm_means", 0.01 * rng.normal(size=(config.n_clusters, J)))
    params.add("gmm_logvars", np.zeros((config.n_clusters, J)))
    return params


# -- graph builders -----------------------------------------------------------


def encoder_nodes(g: Graph, config: ModelConfig, view: int, x: str) -> tuple[str, str]:
    """Append the view encoder to ``g``; returns (mean, clamped log-variance)."""
    widths, _ = _layer_widths(config, view)
    h = x
    for i in range(len(widths) - 1):
        w = g.param(_enc(view, i, "w"))
        b = g.param(_enc(view, i, "b"))
        h = g.add(g.matmul(h, w), b)
        if i < len(widths) - 2:
            h = g.relu(h)
    J = config.latent_dim
    mu = g.slice(h, axis=1, start=0, stop=J)
    logvar = g.clip(g.slice(h, axis=1, start=J, stop=2 * J), LOGVAR_MIN, LOGVAR_MAX)
    return mu, logvar


def decoder_nodes(g: Graph, config: ModelConfig, view: int, z: str):
    """Append the view decoder; returns the Bernoulli mean, or (mean, logvar)."""
    _, widths = _layer_widths(config, view)
    h = z
    for i in range(len(widths) - 1):
        w = g.param(_dec(view, i, "w"))
        b = g.param(_dec(view, i, "b"))
        h = g.add(g.matmul(h, w), b)
        if i < len(widths) - 2:
            h = g.relu(h)
    d = config.view_dims[view]
    if config.likelihood == "bernoulli":
        return g.clip(g.sigmoid(h), BERNOULLI_EPS, 1.0 - BERNOULLI_EPS)
    mu = g.slice(h, axis=1, start=0, stop=d)
    logvar = g.clip(g.slice(h, axis=1, start=d, stop=2 * d), LOGVAR_MIN, LOGVAR_MAX)
    return mu, logvar


def build_encoder_graph(config: ModelConfig, view: int) -> Graph:
    g = Graph()
    x = g.input("x")
    mu, logvar = encoder_nodes(g, config, view, x)
    g.affine(mu, name="mu")
    g.affine(logvar, name="logvar")
    return g


def build_decoder_graph(config: ModelConfig, view: int) -> Graph:
    g = Graph()
    z = g.input("z")
    out = decoder_nodes(g, config, view, z)
    if config.likelihood == "bernoulli":
        g.affine(out, name="mu")
    else:
        g.affine(out[0], name="mu")
        g.affine(out[1], name="logvar")
    return g


def _gamma_nodes(g: Graph, config: ModelConfig, z: str, log_pi: str, means: str, logvars: str) -> str:
    """Posterior cluster probabilities of z under the mixture, floored and
    renormalized; log-sum-exp normalization happens in log space."""
    J = config.latent_dim
    z_e = g.expand_dims(z, axis=1)  # (B, 1, J)
    diff2 = g.square(g.sub(z_e, means))  # (B, K, J)
    inv_var = g.exp(g.affine(logvars, scale=-1.0))  # (K, J)
    maha = g.sum(g.mul(diff2, inv_var), axis=2)  # (B, K)
    logdet = g.sum(logvars, axis=1)  # (K,)
    log_n = g.affine(g.add(maha, logdet), scale=-0.5, shift=-0.5 * J * LOG_2PI)
    unnorm = g.add(log_n, log_pi)  # (B, K)
    log_gamma = g.sub(unnorm, g.logsumexp(unnorm, axis=1, keepdims=True))
    gamma = g.clip(g.exp(log_gamma), GAMMA_FLOOR, 1.0)
    return g.div(gamma, g.sum(gamma, axis=1, keepdims=True))


def build_elbo_graph(config: ModelConfig, n_samples: int = 1) -> Graph:
    """The full training objective as one graph.

    Inputs: x0..x{m-1} (batch per view) and eps0..eps{L-1} (standard-normal
    draws, each (B, J)). Named outputs, all per-sample means over the L
    draws except the final scalars:

      recon, gauss_kl, cat_kl, entropy  -- (B,) objective terms
      elbo_samples                      -- (B,) their sum
      elbo                              -- scalar batch mean
      loss                              -- -elbo, the minimization target
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    m = config.n_views
    J = config.latent_dim
    g = Graph()
    xs = [g.input(f"x{v}") for v in range(m)]
    eps = [g.input(f"eps{l}") for l in range(n_samples)]

    per_view = [encoder_nodes(g, config, v, xs[v]) for v in range(m)]

    fusion = g.param("fusion_logits")
    w = g.exp(g.sub(fusion, g.logsumexp(fusion)))  # (m,)
    mu_t = None
    var_t = None
    for v, (mu_v, logvar_v) in enumerate(per_view):
        w_v = g.slice(w, axis=0, start=v, stop=v + 1)  # (1,)
        mu_term = g.mul(mu_v, w_v)
        var_term = g.mul(g.exp(logvar_v), w_v)
        mu_t = mu_term if mu_t is None else g.add(mu_t, mu_term)
        var_t = var_term if var_t is None else g.add(var_t, var_term)
    sigma_t = g.sqrt(var_t)

    mix = g.param("mix_logits")
    log_pi = g.sub(mix, g.logsumexp(mix))  # (K,)
    means = g.param("gmm_means")
    logvars = g.clip(g.param("gmm_logvars"), LOGVAR_MIN, LOGVAR_MAX)
    var_c = g.exp(logvars)

    # entropy term is draw-independent: 0.5 * sum_j (1 + log sigma2_j)
    entropy = g.affine(g.sum(g.log(var_t), axis=1), scale=0.5, shift=0.5 * J, name="entropy")

    recon_l, gauss_l, cat_l = [], [], []
    for l in range(n_samples):
        z = g.add(mu_t, g.mul(sigma_t, eps[l]))
        gamma = _gamma_nodes(g, config, z, log_pi, means, logvars)

        ratio = g.div(g.expand_dims(var_t, axis=1), var_c)  # (B, K, J)
        sq = g.div(g.square(g.sub(g.expand_dims(mu_t, axis=1), means)), var_c)
        inner = g.sum(g.add(g.add(ratio, sq), logvars), axis=2)  # (B, K)
        gauss_l.append(g.affine(g.sum(g.mul(gamma, inner), axis=1), scale=-0.5))

        cat_l.append(g.sum(g.mul(gamma, g.sub(log_pi, g.log(gamma))), axis=1))

        recon_v = None
        for v in range(m):
            if config.likelihood == "bernoulli":
                mu_x = decoder_nodes(g, config, v, z)
                ll = g.add(
                    g.mul(xs[v], g.log(mu_x)),
                    g.mul(g.affine(xs[v], scale=-1.0, shift=1.0), g.log(g.affine(mu_x, scale=-1.0, shift=1.0))),
                )
            else:
                mu_x, logvar_x = decoder_nodes(g, config, v, z)
                sq_x = g.mul(g.square(g.sub(xs[v], mu_x)), g.exp(g.affine(logvar_x, scale=-1.0)))
                ll = g.add(g.affine(logvar_x, scale=-0.5, shift=-0.5 * LOG_2PI), g.affine(sq_x, scale=-0.5))
            r = g.sum(ll, axis=1)  # (B,)
            recon_v = r if recon_v is None else g.add(recon_v, r)
        recon_l.append(recon_v)

    def averaged(parts, name):
        total = parts[0]
        for p in parts[1:]:
            total = g.add(total, p)
        return g.affine(total, scale=1.0 / n_samples, name=name)

    recon = averaged(recon_l, "recon")
    gauss_kl = averaged(gauss_l, "gauss_kl")
    cat_kl = averaged(cat_l, "cat_kl")
    elbo_samples = g.add(g.add(recon, gauss_kl), g.add(cat_kl, entropy), name="elbo_samples")
    elbo = g.mean(elbo_samples, name="elbo")
    g.affine(elbo, scale=-1.0, name="loss")
    return g


# -- the model object ---------------------------------------------------------


class Model:
    """A ModelConfig plus its ParamStore, with cached computation graphs."""

    def __init__(self, config: ModelConfig, params: ParamStore, normalization=None):
        self.config = config
        self.params = params
        self.normalization = normalization
        self._graphs: dict = {}

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int) -> "Model":
        return cls(config, init_params(config, seed))

    def encoder_graph(self, view: int) -> Graph:
        key = ("enc", view)
        if key not in self._graphs:
            self._graphs[key] = build_encoder_graph(self.config, view)
        return self._graphs[key]

    def decoder_graph(self, view: int) -> Graph:
        key = ("dec", view)
        if key not in self._graphs:
            self._graphs[key] = build_decoder_graph(self.config, view)
        return self._graphs[key]

    def elbo_graph(self, n_samples: int = 1) -> Graph:
        key = ("elbo", n_samples)
        if key not in self._graphs:
            self._graphs[key] = build_elbo_graph(self.config, n_samples)
        return self._graphs[key]

    def fusion_weights(self) -> FusionWeights:
        return FusionWeights(self.params["fusion_logits"].copy())

    def prior(self) -> GmmPrior:
        logvars = np.clip(self.params["gmm_logvars"], LOGVAR_MIN, LOGVAR_MAX)
        return GmmPrior(
            weights=softmax(self.params["mix_logits"]),
            means=self.params["gmm_means"].copy(),
            variances=np.exp(logvars),
        )

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        descriptor = {"format_version": 1, "model": self.config.to_dict()}
        if self.normalization is not None:
            descriptor["normalization"] = self.normalization.to_dict()
        (directory / DESCRIPTOR_FILE).write_text(json.dumps(descriptor, indent=2) + "\n")
        self.params.save(directory / PARAMS_FILE, include_moments=False)

    @classmethod
    def load(cls, directory) -> "Model":
        from .data import NormalizationRecord

        directory = Path(directory)
        descriptor = json.loads((directory / DESCRIPTOR_FILE).read_text())
        config = ModelConfig.from_dict(descriptor["model"])
        params = ParamStore.load(directory / PARAMS_FILE)
        expected = init_params(config, 0)
        same_names = set(params.names()) == set(expected.names())
        if not same_names or any(params[n].shape != expected[n].shape for n in expected.names()):
            raise ValueError(f"parameter archive does not match descriptor in {directory}")
        norm = descriptor.get("normalization")
        normalization = NormalizationRecord.from_dict(norm) if norm else None
        return cls(config, params, normalization)


# -- operations ----------------------------------------------------------------


def _check_batch(x, dim, what) -> np.ndarray:
    arr = as_tensor(x)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"{what} must be (n, {dim}), got shape {np.shape(x)}")
    return arr


def encode_view(model: Model, view: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Per-view posterior statistics: (mean, log variance), each (n, J)."""
    if not 0 <= view < model.config.n_views:
        raise ValueError(f"view index {view} out of range")
    arr = _check_batch(x, model.config.view_dims[view], f"view {view} input")
    values = forward(model.encoder_graph(view), {"x": arr}, model.params)
    return values["mu"], values["logvar"]


def fuse_posteriors(per_view, weights: FusionWeights) -> LatentPosterior:
    """Convex combination of per-view (mean, variance) pairs."""
    w = weights.weights
    if len(per_view) != w.shape[0]:
        raise ValueError(f"expected {w.shape[0]} views, got {len(per_view)} (all views are required)")
    mu = None
    var = None
    for v, (mu_v, var_v) in enumerate(per_view):
        mu_v = as_tensor(mu_v)
        var_v = as_tensor(var_v)
        if np.any(var_v <= 0):
            raise ValueError(f"view {v} variances must be positive")
        mu = w[v] * mu_v if mu is None else mu + w[v] * mu_v
        var = w[v] * var_v if var is None else var + w[v] * var_v
    return LatentPosterior(mu, var)


def sample_latent(posterior: LatentPosterior, noise) -> np.ndarray:
    """Reparameterized draw z = mean + sqrt(var) * noise."""
    return posterior.mean + np.sqrt(posterior.var) * as_tensor(noise)


def decode_bernoulli(model: Model, view: int, z) -> np.ndarray:
    if model.config.likelihood != "bernoulli":
        raise ValueError("model decoders are not Bernoulli")
    arr = _check_batch(z, model.config.latent_dim, "latent z")
    return forward(model.decoder_graph(view), {"z": arr}, model.params)["mu"]


def decode_gaussian(model: Model, view: int, z) -> tuple[np.ndarray, np.ndarray]:
    if model.config.likelihood != "gaussian":
        raise ValueError("model decoders are not Gaussian")
    arr = _check_batch(z, model.config.latent_dim, "latent z")
    values = forward(model.decoder_graph(view), {"z": arr}, model.params)
    return values["mu"], values["logvar"]


def responsibilities(z, prior: GmmPrior) -> np.ndarray:
    """Posterior cluster probabilities gamma_c for each z row.

    Computed in log space with log-sum-exp normalization, then floored at
    ``GAMMA_FLOOR`` and renormalized so collapsed components cannot produce
    -inf downstream.
    """
    z_arr = as_tensor(z)
    single = z_arr.ndim == 1
    z2 = z_arr[None, :] if single else z_arr
    if z2.ndim != 2 or z2.shape[1] != prior.means.shape[1]:
        raise ValueError(f"z must be (n, {prior.means.shape[1]})")
    logvar = np.log(prior.variances)  # (K, J)
    diff2 = (z2[:, None, :] - prior.means[None, :, :]) ** 2
    log_n = -0.5 * (prior.means.shape[1] * LOG_2PI + logvar.sum(axis=1) + (diff2 / prior.variances).sum(axis=2))
    lw = np.log(prior.weights) + log_n
    m = lw.max(axis=1, keepdims=True)
    lw = lw - (np.log(np.exp(lw - m).sum(axis=1, keepdims=True)) + m)
    gamma = np.clip(np.exp(lw), GAMMA_FLOOR, 1.0)
    gamma /= gamma.sum(axis=1, keepdims=True)
    return gamma[0] if single else gamma


def fused_posterior(model: Model, views) -> LatentPosterior:
    """Encode every view and fuse; ``views`` is one matrix per view."""
    m = model.config.n_views
    if len(views) != m:
        raise ValueError(f"expected {m} views, got {len(views)} (all views are required)")
    mats = [_check_batch(views[v], model.config.view_dims[v], f"view {v}") for v in range(m)]
    n = mats[0].shape[0]
    if any(mat.shape[0] != n for mat in mats):
        raise ValueError("all views must have the same number of rows")
    weights = model.fusion_weights()
    means = np.empty((n, model.config.latent_dim))
    variances = np.empty((n, model.config.latent_dim))
    for start in range(0, n, _INFER_CHUNK):
        sl = slice(start, min(n, start + _INFER_CHUNK))
        stats = []
        for v in range(m):
            mu, logvar = encode_view(model, v, mats[v][sl])
            stats.append((mu, np.exp(logvar)))
        post = fuse_posteriors(stats, weights)
        means[sl] = post.mean
        variances[sl] = post.var
    return LatentPosterior(means, variances)


def assign_clusters(model: Model, views) -> np.ndarray:
    """Hard labels: encode, fuse, take z = posterior mean, argmax gamma.

    Ties in the argmax break toward the smallest cluster index.
    """
    post = fused_posterior(model, views)
    gamma = responsibilities(post.mean, model.prior())
    return np.argmax(gamma, axis=1)


def _normalize_noise(noise, n, latent_dim, n_samples):
    arr = as_tensor(noise)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.shape != (n_samples, n, latent_dim):
        raise ValueError(f"noise must have shape ({n_samples}, {n}, {latent_dim}), got {arr.shape}")
    return arr


def elbo_terms(model: Model, views, noise, n_samples: int = 1) -> dict:
    """Forward the objective graph; returns per-sample term arrays and the
    scalar batch-mean ELBO under keys recon/gauss_kl/cat_kl/entropy/
    elbo_samples/elbo."""
    m = model.config.n_views
    if len(views) != m:
        raise ValueError(f"expected {m} views, got {len(views)}")
    mats = [_check_batch(views[v], model.config.view_dims[v], f"view {v}") for v in range(m)]
    n = mats[0].shape[0]
    if any(mat.shape[0] != n for mat in mats):
        raise ValueError("all views must have the same number of rows")
    eps = _normalize_noise(noise, n, model.config.latent_dim, n_samples)
    inputs = {f"x{v}": mats[v] for v in range(m)}
    inputs.update({f"eps{l}": eps[l] for l in range(n_samples)})
    values = forward(model.elbo_graph(n_samples), inputs, model.params)
    keys = ("recon", "gauss_kl", "cat_kl", "entropy", "elbo_samples", "elbo")
    return {k: values[k] for k in keys}


def elbo_bernoulli(model: Model, views, noise, n_samples: int = 1) -> float:
    """Per-sample-mean ELBO for binary-normalized data in [0, 1]."""
    if model.config.likelihood != "bernoulli":
        raise ValueError("model decoders are not Bernoulli")
    for v, x in enumerate(views):
        arr = as_tensor(x)
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError(f"view {v} data must lie in [0, 1] for the Bernoulli objective")
    return float(elbo_terms(model, views, noise, n_samples)["elbo"])


def elbo_gaussian(model: Model, views, noise, n_samples: int = 1) -> float:
    """Per-sample-mean ELBO under Gaussian decoders."""
    if model.config.likelihood != "gaussian":
        raise ValueError("model decoders are not Gaussian")
    return float(elbo_terms(model, views, noise, n_samples)["elbo"])


def generate(model: Model, view: int, cluster: int, noise) -> np.ndarray:
    """Draw z from the chosen prior component and decode view ``view``.

    Returns the decoded mean (no binarization for Bernoulli decoders).
    """
    prior = model.prior()
    if not 0 <= cluster < prior.n_clusters:
        raise ValueError(f"cluster index {cluster} out of range [0, {prior.n_clusters})")
    eps = as_tensor(noise)
    single = eps.ndim == 1
    eps2 = eps[None, :] if single else eps
    if eps2.ndim != 2 or eps2.shape[1] != model.config.latent_dim:
        raise ValueError(f"noise must be (n, {model.config.latent_dim})")
    z = prior.means[cluster] + np.sqrt(prior.variances[cluster]) * eps2
    if model.config.likelihood == "bernoulli":
        out = decode_bernoulli(model, view, z)
    else:
        out = decode_gaussian(model, view, z)[0]
    return out[0] if single else out
