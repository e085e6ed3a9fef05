"""Agentic evidence search, context compression, and discriminative
factuality scoring, with the training-data and benchmark pipelines that
feed them.

Subpackages:
  gateway    prompt templates and LLM chat backends (mock + remote)
  retrieval  web snippet search and local BM25 index
  agent      Think/Search/Observe evidence loop
  scorer     featurizers, scoring head, margin-ranking training
  evalbench  metrics, verifier baselines, dataset reports
Top-level modules: compress, pipelines, config, cli, runner, textnorm.
"""

from ._kernels import implementation_name as kernel_implementation

__version__ = "0.1.0"

__all__ = ["__version__", "kernel_implementation"]
