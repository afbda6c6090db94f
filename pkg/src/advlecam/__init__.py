"""Adversarial Le Cam lower bounds under noise-injection attacks.

Closed-form minimax lower bounds for mean estimation, binary classification
and orthogonal Procrustes when the learner sees poisoned samples, TV budgets
for Gaussian and uniform-box poisoning, and Monte-Carlo / quadrature oracles
that check every closed form.
"""
__version__ = "0.1.0"

from .rng import Stream, backend, derive_seed, set_backend, use_backend  # noqa: E402

__all__ = ["Stream", "__version__", "backend", "derive_seed", "set_backend", "use_backend"]
