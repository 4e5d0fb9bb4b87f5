"""Link-gain types, Rayleigh-fading sampling and RNSNR unit helpers.

Everything downstream works in normalized units: link power gains are
dimensionless and the rate-normalized SNR (RNSNR) is

    S = (P_t / N0 W) / (e^K - 1),

so noise density, bandwidth and absolute power never appear in the core.
Decibel conversion happens only at the I/O boundary.

Random streams
--------------
Monte Carlo work is split into fixed-size chunks.  Chunk ``j`` of a run with
seed ``s`` draws from ``SeedSequence(s, spawn_key=(j,))``.  Results therefore
depend only on ``(seed, chunk size, sample count)`` and never on how chunks
are distributed over worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

#: Samples per independent RNG stream.
CHUNK_SIZE = 1 << 20

_MAX_REDRAWS = 100


class RngFaultError(RuntimeError):
    """Raised when the generator keeps producing exact-zero exponential draws."""


@dataclass(frozen=True)
class LinkGains:
    """One realization of the three link power gains."""

    z13: float
    z12: float
    z23: float

    def __post_init__(self):
        for name in ("z13", "z12", "z23"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.z13, self.z12, self.z23)

    def coherent(self) -> "LinkGains":
        """Gains seen by the coherent protocol: z23 -> z13 + z23."""
        return LinkGains(self.z13, self.z12, self.z13 + self.z23)


@dataclass(frozen=True)
class GainArrays:
    """Column-oriented batch of link gains (one entry per fading realization)."""

    z13: np.ndarray
    z12: np.ndarray
    z23: np.ndarray

    def __len__(self):
        return len(self.z13)

    def __getitem__(self, i) -> LinkGains:
        return LinkGains(float(self.z13[i]), float(self.z12[i]), float(self.z23[i]))

    def coherent(self) -> "GainArrays":
        return GainArrays(self.z13, self.z12, self.z13 + self.z23)


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def bits_to_nats(bits: float) -> float:
    return bits * math.log(2.0)


def rnsnr_from_power(snr_linear: float, k: float) -> float:
    """RNSNR for a total SNR ``P_t / N0 W`` at rate ``k`` nats/s/Hz."""
    if k <= 0:
        raise ValueError("rate must be positive")
    return snr_linear / math.expm1(k)


def harmonic_mean(x: float, y: float) -> float:
    """Gain of a two-hop path, ``1 / (1/x + 1/y)``.

    This is half of the textbook harmonic mean.
    """
    if not (x > 0 and y > 0):
        raise ValueError(f"harmonic_mean needs positive inputs, got {x!r}, {y!r}")
    return 1.0 / (1.0 / x + 1.0 / y)


def harmonic_mean_array(x, y):
    """Elementwise ``1/(1/x + 1/y)`` with the convention that a zero gain gives 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / (1.0 / x + 1.0 / y)


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for chunk ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _exponential(rng: np.random.Generator, shape) -> np.ndarray:
    # -log(V) with V = 1 - U in (0, 1]; V == 1 gives an exact zero, which is redrawn.
    out = -np.log1p(-rng.random(shape))
    for _ in range(_MAX_REDRAWS):
        bad = out == 0.0
        if not bad.any():
            return out
        out[bad] = -np.log1p(-rng.random(int(bad.sum())))
    raise RngFaultError("exact-zero exponential draws persisted after 100 redraws")


def draw_gains(rng: np.random.Generator, count: int) -> GainArrays:
    """Draw ``count`` i.i.d. unit-mean exponential gain triples from ``rng``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    z = _exponential(rng, (3, count))
    return GainArrays(z[0], z[1], z[2])


def chunk_sizes(count: int, chunk: int = CHUNK_SIZE) -> list[int]:
    full, rest = divmod(count, chunk)
    return [chunk] * full + ([rest] if rest else [])


def iter_gain_chunks(seed: int, count: int, chunk: int = CHUNK_SIZE) -> Iterator[GainArrays]:
    for j, n in enumerate(chunk_sizes(count, chunk)):
        yield draw_gains(stream(seed, j), n)


def sample_gains(seed: int, count: int, chunk: int = CHUNK_SIZE) -> GainArrays:
    """Reproducible batch of ``count`` gain triples for ``seed``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    parts = list(iter_gain_chunks(seed, count, chunk))
    return GainArrays(
        np.concatenate([p.z13 for p in parts]),
        np.concatenate([p.z12 for p in parts]),
        np.concatenate([p.z23 for p in parts]),
    )
