"""Deterministic instance generators.

Four families: uniform-random, s-bounded (deadline within span slots of
release), agreeable (deadline order matches release order), and
phi-adversarial (a fixed stop-chain of two-packet gadgets on which the
greedy baseline forfeits a 1/phi-ish fraction of the optimum while the
plan-following scheduler stays optimal).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from planpack.model import Instance, Packet, validate

KINDS = ("uniform-random", "s-bounded", "agreeable", "phi-adversarial")

# Fibonacci convergent 987/610 of phi; powers of it weight the chain.
PHI_APPROX = Fraction(987, 610)


class InvalidConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str
    steps: int
    seed: int = 0
    packets_per_step: int = 5   # per-step count drawn uniformly from 0..this
    weight_max: int = 10**6     # integer weights drawn from 1..this
    span: int = 8               # max deadline - release for s-bounded

    def check(self) -> "GeneratorConfig":
        if self.kind not in KINDS:
            raise InvalidConfigError(f"unknown generator kind {self.kind!r}")
        if self.steps < 0:
            raise InvalidConfigError("steps must be nonnegative")
        if self.packets_per_step < 0:
            raise InvalidConfigError("packets_per_step must be nonnegative")
        if self.weight_max < 1:
            raise InvalidConfigError("weight_max must be at least 1")
        if self.span < 0:
            raise InvalidConfigError("span must be nonnegative")
        return self


def generate(config: GeneratorConfig) -> Instance:
    config.check()
    if config.kind == "phi-adversarial":
        return _phi_adversarial(config.steps)
    rng = random.Random(config.seed)
    builder = {
        "uniform-random": _uniform_random,
        "s-bounded": _s_bounded,
        "agreeable": _agreeable,
    }[config.kind]
    return validate(builder(config, rng))


def _weight(config: GeneratorConfig, rng: random.Random) -> Fraction:
    return Fraction(rng.randint(1, config.weight_max))


def _uniform_random(config: GeneratorConfig, rng: random.Random) -> list[Packet]:
    packets = []
    next_id = 1
    last = config.steps - 1
    for t in range(config.steps):
        for _ in range(rng.randint(0, config.packets_per_step)):
            d = rng.randint(t, last) if t < last else t
            packets.append(Packet(next_id, t, d, _weight(config, rng)))
            next_id += 1
    return packets


def _s_bounded(config: GeneratorConfig, rng: random.Random) -> list[Packet]:
    packets = []
    next_id = 1
    for t in range(config.steps):
        for _ in range(rng.randint(0, config.packets_per_step)):
            d = t + rng.randint(0, config.span)
            packets.append(Packet(next_id, t, d, _weight(config, rng)))
            next_id += 1
    return packets


def _agreeable(config: GeneratorConfig, rng: random.Random) -> list[Packet]:
    packets = []
    next_id = 1
    floor_d = 0
    for t in range(config.steps):
        floor_d = max(floor_d, t)
        deadlines = sorted(
            floor_d + rng.randint(0, 3)
            for _ in range(rng.randint(0, config.packets_per_step))
        )
        for d in deadlines:
            packets.append(Packet(next_id, t, d, _weight(config, rng)))
            next_id += 1
        if deadlines:
            floor_d = deadlines[-1]
    return packets


def _phi_adversarial(epochs: int) -> Instance:
    """Stop-chain gadgets: epoch i at time 2i releases a tight packet
    (deadline 2i, weight r**i) and a flexible one (deadline 2i+1, weight
    r**(i+1)), r = 987/610; nothing arrives at odd steps.  Greedy burns
    the flexible packet immediately and idles next step; the optimum
    takes both, for a per-gadget ratio of (1+r)/r = 1597/987.
    """
    packets = []
    next_id = 1
    w = Fraction(1)
    for i in range(epochs):
        t = 2 * i
        packets.append(Packet(next_id, t, t, w))
        packets.append(Packet(next_id + 1, t, t + 1, w * PHI_APPROX))
        next_id += 2
        w *= PHI_APPROX
    return validate(packets)
