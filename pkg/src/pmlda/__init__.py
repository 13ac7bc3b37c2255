"""Partial Membership Latent Dirichlet Allocation."""

from .blend import BlendedGaussian, TopicParams, blend_natural, log_blend_pdf
from .distributions import rng_stream
from .exceptions import ConfigError, DomainError, FileFormatError, PMLDAError
from .inference import MapEstimate, SampleChain, SamplerConfig, run_sampler
from .model import Corpus, Document, DocumentState, Hyperparams, generate_corpus, log_corpus_posterior, log_doc_joint

__version__ = "0.1.0"

__all__ = [
    "BlendedGaussian",
    "ConfigError",
    "Corpus",
    "Document",
    "DocumentState",
    "DomainError",
    "FileFormatError",
    "Hyperparams",
    "MapEstimate",
    "PMLDAError",
    "SampleChain",
    "SamplerConfig",
    "TopicParams",
    "blend_natural",
    "generate_corpus",
    "log_blend_pdf",
    "log_corpus_posterior",
    "log_doc_joint",
    "rng_stream",
    "run_sampler",
]
