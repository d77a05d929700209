"""Random instance generation, canned fixtures, and instance JSON I/O.

Random streams use xoshiro256** seeded through splitmix64, written out in
full so the same seed yields the same instances on every platform and
Python version. Each instance draws from its own substream keyed by
``(seed, n, index)``, so generation order and batch size never matter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Instance, validate_instance
from .errors import ParseError, UnknownFixture, ValidationError

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + _GOLDEN) & MASK64
        return _mix64(self.state)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** 1.0 (Blackman and Vigna)."""

    def __init__(self, seed: int):
        sm = SplitMix64(seed)
        self.s = [sm.next() for _ in range(4)]

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def open_closed(self) -> float:
        """Uniform on (0, 1]."""
        return 1.0 - self.random()

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer on [lo, hi] by rejection (no modulo bias)."""
        span = hi - lo + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % span


def substream_key(seed: int, n: int, index: int) -> int:
    h = seed & MASK64
    for word in (n, index):
        h = _mix64((h ^ _mix64((word + _GOLDEN) & MASK64)) & MASK64)
    return h


@dataclass(frozen=True)
class GenConfig:
    seed: int
    n: int
    m_min: int = 1
    m_max: int = 10
    k_max: float = 100.0

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ValidationError("seed must fit in 64 unsigned bits")
        if self.n < 1:
            raise ValidationError("n must be at least 1")
        if not 1 <= self.m_min <= self.m_max:
            raise ValidationError("need 1 <= m_min <= m_max")
        if not self.k_max > 0:
            raise ValidationError("k_max must be positive")


def random_instance_raw(config: GenConfig, index: int):
    """Pre-normalization demand draws and work for one batch position."""
    rng = Xoshiro256(substream_key(config.seed, config.n, index))
    m = rng.integer(config.m_min, config.m_max)
    raw = np.array([[rng.open_closed() for _ in range(m)] for _ in range(config.n)])
    work = np.array([config.k_max * rng.open_closed() for _ in range(config.n)])
    return raw, work


def random_instance(config: GenConfig, index: int) -> Instance:
    raw, work = random_instance_raw(config, index)
    return validate_instance(raw / raw.max(axis=1, keepdims=True), work)


# --- fixtures ---------------------------------------------------------------

FIXTURE_NAMES = ("drfw-example", "lcp-example", "sp-truthful", "sp-misreport", "envy", "tie")


def canned(name: str, *, epsilon: float | None = None, k3: float = 3.0, n: int = 4):
    """Return ``(instance, expected)`` for a named worked example.

    ``expected`` maps fact names to values; mechanisms are keyed by the
    prefix of each fact (``drfw_``, ``lcpx_``).
    """
    if name in ("drfw-example", "lcp-example"):
        inst = validate_instance([[1.0, 0.5], [0.25, 1.0]], [1.0, 1.0])
        expected = {
            "drfw_shares": (2 / 3, 2 / 3),
            "drfw_costs": (1.5, 1.5),
            "lcpx_first_shares": (6 / 7, 4 / 7),
            "lcpx_costs": (7 / 6, 3 / 2),
            "lcpx_log_cp": math.log(7 / 4),
        }
        return inst, expected
    if name == "sp-truthful":
        inst = validate_instance([[0.5, 1.0], [1.0, 1 / 6]], [1.0, 1.0])
        return inst, {"lcpx_first_shares": (10 / 11, 6 / 11), "lcpx_costs": (11 / 10, 15 / 10)}
    if name == "sp-misreport":
        inst = validate_instance([[2 / 3, 1.0], [1.0, 1 / 6]], [1.0, 1.0])
        return inst, {"lcpx_first_shares": (15 / 16, 3 / 8), "lcpx_costs": (16 / 15, 5 / 3)}
    if name == "envy":
        eps = 0.01 if epsilon is None else epsilon
        inst = validate_instance([[1.0, 1.0], [1.0, eps], [eps, 1.0]], [1.0, 1.0, k3])
        costs = (1.0, 2.0 + eps, 1.0 + eps + k3)
        return inst, {
            "lcpx_costs": costs,
            "lcpx_log_cp": math.log(costs[1] * costs[2]),
            "lcpx_envy_pairs": ((1, 0),),
            "drfw_envy_pairs": (),
        }
    if name == "tie":
        if n < 3:
            raise ValidationError("the tie fixture needs n >= 3")
        eps = 1e-6 if epsilon is None else epsilon
        rows = [[1.0, 2 / 3, eps], [eps, 0.5, 1.0]] + [[1.0, 1.0, 1.0]] * (n - 2)
        inst = validate_instance(rows, [1.0, 1.0] + [5.0] * (n - 2))
        return inst, {"tie_crossover_n": 132}
    raise UnknownFixture(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}")


# --- JSON I/O ---------------------------------------------------------------


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance.to_dict()) + "\n"


def loads_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return Instance.from_dict(data)


def write_instance(instance: Instance, path) -> None:
    Path(path).write_text(dumps_instance(instance))


def read_instance(path) -> Instance:
    return loads_instance(Path(path).read_text())
