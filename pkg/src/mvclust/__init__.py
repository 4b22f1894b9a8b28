"""Multi-view clustering through a shared generative latent space."""

from .data import (
    LoadError,
    MultiViewDataset,
    NormalizationRecord,
    batch_iter,
    load_dataset,
    normalize,
    save_dataset,
    synth_generate,
)
from .metrics import accuracy, ari, contingency, hungarian, nmi, purity
from .model import (
    FusionWeights,
    GmmPrior,
    LatentPosterior,
    Model,
    ModelConfig,
    assign_clusters,
    decode_bernoulli,
    decode_gaussian,
    elbo_bernoulli,
    elbo_gaussian,
    elbo_terms,
    encode_view,
    fuse_posteriors,
    fused_posterior,
    generate,
    responsibilities,
    sample_latent,
)
from .numgrad import Graph, GraphError, NumericError, ParamStore, adam_step, backward, forward
from .training import (
    KMeansResult,
    TrainConfig,
    TrainResult,
    evaluate,
    init_gmm,
    kmeans,
    load_checkpoint,
    pretrain_autoencoders,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
