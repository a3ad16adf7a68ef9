"""Knowledge-infused multiple choice QA: retrieval, graph reasoning and
entropy-weighted training on a small from-scratch autodiff stack."""

__version__ = "0.1.0"

from .errors import ConfigError

__all__ = ["ConfigError", "__version__"]
