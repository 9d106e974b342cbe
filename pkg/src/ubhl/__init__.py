"""Union-bound Hoare logic toolkit: language, semantics, proof kernel,
Hoare embedding, differential-privacy case studies."""

__version__ = "0.1.0"
