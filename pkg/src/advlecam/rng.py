"""Seeded random streams with a selectable kernel backend.

Every random draw in the package goes through :class:`Stream`, a
xorshift64* generator (Vigna, 2016) whose normal variates come from the
polar Box-Muller method.  The generator is fully specified here rather than
delegated to numpy's bit generators so that a ``(seed, n)`` pair maps to
the same floats regardless of numpy version.

The inner loops live in a compiled Cython module (``_rng_core``).  When that
extension is not built, the bit-identical pure-Python kernels in
``_rng_py`` are used instead; they are roughly two orders of magnitude
slower.
"""
from __future__ import annotations

import contextlib

import numpy as np

from . import _rng_py

try:
    from . import _rng_core
except ImportError:  # extension not built
    _rng_core = None

__all__ = [
    "Stream",
    "available_backends",
    "backend",
    "derive_seed",
    "mix64",
    "set_backend",
    "use_backend",
]

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_ZERO_STATE_SUBSTITUTE = 0x853C49E6748FEA9B

_BACKENDS = {"python": _rng_py}
if _rng_core is not None:
    _BACKENDS["compiled"] = _rng_core

_active = "compiled" if _rng_core is not None else "python"


def available_backends():
    return tuple(sorted(_BACKENDS))


def backend():
    """Name of the kernel backend currently in use."""
    return _active


def set_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(
            f"unknown or unavailable backend {name!r}; "
            f"available: {', '.join(available_backends())}"
        )
    _active = name


@contextlib.contextmanager
def use_backend(name):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def mix64(x):
    """SplitMix64 finalizer: a bijective avalanche map on 64-bit integers."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base, scenario_id, replicate_index):
    """Child seed for one (scenario, replicate) cell under ``base``.

    Three chained SplitMix64 rounds.  For fixed ``base`` and ``scenario_id``
    the map is injective in ``replicate_index`` (odd multiplier, XOR and
    ``mix64`` are all bijections), so replicates never share a stream.
    """
    h = mix64(int(base) & MASK64)
    h = mix64(h ^ ((int(scenario_id) * _GOLDEN) & MASK64))
    h = mix64(h ^ (((int(replicate_index) + 1) * 0xD1B54A32D192ED03) & MASK64))
    return h


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


class Stream:
    """A deterministic source of uniform and standard normal variates.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed.  It is scrambled with :func:`mix64` before use,
        so nearby seeds give unrelated streams.

    Notes
    -----
    Draws are consumed in call order.  Two streams built from the same seed
    and issued the same sequence of calls produce identical arrays on either
    backend.
    """

    def __init__(self, seed):
        self.seed = _check_seed(seed)
        state = mix64(self.seed)
        self._state = state if state else _ZERO_STATE_SUBSTITUTE

    def uniform(self, size=None):
        """Uniform variates on [0, 1) with 53 random bits each."""
        shape = () if size is None else size
        out = np.empty(int(np.prod(shape, dtype=np.int64)), dtype=np.float64)
        self._state = _BACKENDS[_active].fill_uniform(self._state, out)
        return out[0] if size is None else out.reshape(shape)

    def standard_normal(self, size=None):
        shape = () if size is None else size
        out = np.empty(int(np.prod(shape, dtype=np.int64)), dtype=np.float64)
        self._state = _BACKENDS[_active].fill_normal(self._state, out)
        return out[0] if size is None else out.reshape(shape)

    def rademacher(self, size):
        """Fair +/-1 signs."""
        return np.where(self.uniform(size) < 0.5, 1.0, -1.0)
