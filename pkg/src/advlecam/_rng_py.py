"""Pure-Python twin of ``_rng_core``.

Same xorshift64* recurrence and polar Box-Muller loop, operation for
operation, so that both backends emit identical bits.
"""
import math

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
_TO_UNIT = 1.0 / 9007199254740992.0


def fill_uniform(state, out):
    s = state
    vals = [0.0] * len(out)
    for i in range(len(vals)):
        s ^= s >> 12
        s ^= (s << 25) & _MASK
        s ^= s >> 27
        vals[i] = float(((s * _MULT) & _MASK) >> 11) * _TO_UNIT
    out[:] = vals
    return s


def fill_normal(state, out):
    s = state
    n = len(out)
    vals = [0.0] * n
    log, sqrt = math.log, math.sqrt
    i = 0
    while i < n:
        s ^= s >> 12
        s ^= (s << 25) & _MASK
        s ^= s >> 27
        u1 = 2.0 * (float(((s * _MULT) & _MASK) >> 11) * _TO_UNIT) - 1.0
        s ^= s >> 12
        s ^= (s << 25) & _MASK
        s ^= s >> 27
        u2 = 2.0 * (float(((s * _MULT) & _MASK) >> 11) * _TO_UNIT) - 1.0
        r2 = u1 * u1 + u2 * u2
        if r2 >= 1.0 or r2 == 0.0:
            continue
        f = sqrt(-2.0 * log(r2) / r2)
        vals[i] = u1 * f
        i += 1
        if i < n:
            vals[i] = u2 * f
            i += 1
    out[:] = vals
    return s
