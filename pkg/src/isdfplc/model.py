"""Statistical model of a power-line link.

Each hop has distance-proportional path loss and log-normal fading; the
noise is Bernoulli-Gaussian.  The rate thresholds follow from the noise
mixture's capacity.

Everything else in the package consumes these types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtr

LN10_OVER_10 = math.log(10.0) / 10.0


def qfunc(x):
    """Gaussian tail probability Q(x) = Pr[N(0, 1) > x].

    Uses ``ndtr(-x)`` which stays accurate far into the upper tail, unlike
    ``1 - Phi(x)``.
    """
    out = ndtr(-np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def db_to_linear(x_db):
    out = 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)
    return out if np.ndim(out) else float(out)


def linear_to_db(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("linear power must be non-negative")
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(arr)
    return out if np.ndim(out) else float(out)


def db_linear_convert(x, direction: str = "to_linear"):
    """Convert between dB and linear scale.

    ``direction`` is ``"to_linear"`` or ``"to_db"``.
    """
    if direction == "to_linear":
        return db_to_linear(x)
    if direction == "to_db":
        return linear_to_db(x)
    raise ValueError(f"unknown direction {direction!r}")


def received_power(p_tx_db: float, d_km: float, p_l: float) -> float:
    """Linear received power after ``d_km`` of cable losing ``p_l`` dB/km."""
    if d_km < 0:
        raise ValueError("cable length must be non-negative")
    if p_l < 0:
        raise ValueError("path-loss factor must be non-negative")
    return db_to_linear(p_tx_db - d_km * p_l)


@dataclass(frozen=True)
class NoiseModel:
    """Bernoulli-Gaussian additive noise.

    ``p`` is the probability an impulse is present, ``eta`` the
    impulsive-to-background power ratio and ``sigma_w2`` the background
    variance.
    """

    p: float = 0.1
    eta: float = 10.0
    sigma_w2: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.eta < 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")
        if self.sigma_w2 <= 0:
            raise ValueError(f"sigma_w2 must be positive, got {self.sigma_w2}")

    @classmethod
    def unit_power(cls, p: float = 0.1, eta: float = 10.0) -> "NoiseModel":
        """Noise scaled so that the average power N0 equals one."""
        return cls(p=p, eta=eta, sigma_w2=1.0 / (1.0 + p * eta))

    @property
    def sigma_i2(self) -> float:
        return self.eta * self.sigma_w2

    @property
    def average_power(self) -> float:
        return self.sigma_w2 * (1.0 + self.p * self.eta)

    @property
    def weights(self) -> tuple[float, float]:
        return (1.0 - self.p, self.p)

    @property
    def variances(self) -> tuple[float, float]:
        return (self.sigma_w2, self.sigma_w2 + self.sigma_i2)

    @property
    def alphas(self) -> tuple[float, float]:
        """Per-component SNR scalings used by the capacity and BER models."""
        scale = 1.0 + self.p * self.eta
        return (scale / 2.0, scale / (2.0 * (1.0 + self.eta)))


def noise_average_power(n: NoiseModel) -> float:
    return n.average_power


@dataclass(frozen=True)
class LinkModel:
    """One hop: cable length, fading spread and received power.

    ``p_r`` is linear received power; the log-normal SNR parameters need a
    noise model and come from :func:`snr_params`.
    """

    d_km: float
    sigma_h_db: float = 3.0
    p_r: float = 1.0

    def __post_init__(self):
        if self.d_km < 0:
            raise ValueError("cable length must be non-negative")
        if self.sigma_h_db < 0:
            raise ValueError("fading spread must be non-negative")
        if self.p_r <= 0:
            raise ValueError("received power must be positive")

    @property
    def sigma_h(self) -> float:
        return self.sigma_h_db * LN10_OVER_10

    @property
    def mu_h(self) -> float:
        # unit channel energy: E[h^2] = exp(2 mu + 2 sigma^2) = 1
        return -self.sigma_h ** 2


@dataclass(frozen=True)
class SnrParams:
    """Log-normal SNR: ln(gamma) ~ N(mu, sigma^2)."""

    mu: float
    sigma: float

    @property
    def median(self) -> float:
        return math.exp(self.mu)

    @property
    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma ** 2)


def snr_params(link: LinkModel, noise: NoiseModel) -> SnrParams:
    n0 = noise.average_power
    if link.p_r <= 0 or n0 <= 0:
        raise ValueError("received and noise power must be positive")
    return SnrParams(mu=2.0 * link.mu_h + math.log(link.p_r / n0), sigma=2.0 * link.sigma_h)


def snr_cdf(w, params: SnrParams):
    """Pr[gamma <= w] for the log-normal SNR."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("SNR must be non-negative")
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    if params.sigma == 0:
        out = (lw >= params.mu).astype(float)
    else:
        out = ndtr((lw - params.mu) / params.sigma)
    return out if np.ndim(out) else float(out)


def snr_sf(w, params: SnrParams):
    """Pr[gamma > w], computed directly so small tails keep precision."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("SNR must be non-negative")
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    if params.sigma == 0:
        out = (lw < params.mu).astype(float)
    else:
        out = ndtr((params.mu - lw) / params.sigma)
    return out if np.ndim(out) else float(out)


def capacity(gamma, n: NoiseModel):
    """Mixture capacity in bits/s/Hz at instantaneous SNR ``gamma``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SNR must be non-negative")
    out = sum(pj * np.log2(1.0 + aj * gamma) for pj, aj in zip(n.weights, n.alphas))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class Thresholds:
    gamma_sd: float
    gamma_sr_rd: float

    @property
    def gamma_sr(self) -> float:
        return self.gamma_sr_rd

    @property
    def gamma_rd(self) -> float:
        return self.gamma_sr_rd


def thresholds(r_th: float, n: NoiseModel) -> Thresholds:
    """SNR thresholds for rate ``r_th`` on the direct link and ``2 r_th`` per hop."""
    if r_th <= 0:
        raise ValueError("target rate must be positive")
    (p1, p2), (a1, a2) = n.weights, n.alphas
    base = a1 ** (-p1) * a2 ** (-p2)
    return Thresholds(gamma_sd=base * 2.0 ** r_th, gamma_sr_rd=base * 2.0 ** (2.0 * r_th))


def channel_gain(link: LinkModel, g):
    """Amplitude for standard-normal draw(s) ``g``."""
    return np.exp(link.mu_h + link.sigma_h * np.asarray(g, dtype=float))


def sample_channel_gain(rng: np.random.Generator, link: LinkModel, size=None):
    """Log-normal amplitude draws with unit mean energy."""
    return channel_gain(link, rng.standard_normal(size))


def sample_noise(rng: np.random.Generator, n: NoiseModel, size=None):
    """Draw z = z_W + z_B * z_I."""
    z_w = rng.normal(0.0, math.sqrt(n.sigma_w2), size)
    z_b = rng.random(size) < n.p
    z_i = rng.normal(0.0, math.sqrt(n.sigma_i2), size)
    return z_w + z_b * z_i


def noise_pdf(x, n: NoiseModel):
    x = np.asarray(x, dtype=float)
    return sum(
        pj * np.exp(-x ** 2 / (2 * v)) / math.sqrt(2 * math.pi * v)
        for pj, v in zip(n.weights, n.variances)
    )


def noise_cdf(x, n: NoiseModel):
    x = np.asarray(x, dtype=float)
    return sum(pj * ndtr(x / math.sqrt(v)) for pj, v in zip(n.weights, n.variances))


class PowerSplit(str, Enum):
    HALF = "half"
    FULL = "full"


LINKS = ("sd", "sr", "rd")


@dataclass(frozen=True)
class SystemConfig:
    """Source/relay/destination topology with power budget and rate target.

    ``sigma_h_db`` is either one spread shared by all links or a
    ``(sd, sr, rd)`` triple.
    """

    p_t_db: float = 50.0
    d_sd_km: float = 0.4
    d_f: float = 0.5
    p_l_db_per_km: float = 60.0
    r_th: float = 1.0
    power_split: PowerSplit = PowerSplit.FULL
    noise: NoiseModel = field(default_factory=NoiseModel.unit_power)
    sigma_h_db: float | tuple[float, float, float] = 3.0

    def __post_init__(self):
        object.__setattr__(self, "power_split", PowerSplit(self.power_split))
        if not 0.0 < self.d_f < 1.0:
            raise ValueError(f"d_f must lie in (0, 1), got {self.d_f}")
        if self.d_sd_km <= 0:
            raise ValueError("d_sd_km must be positive")
        if self.p_l_db_per_km < 0:
            raise ValueError("path-loss factor must be non-negative")
        if self.r_th <= 0:
            raise ValueError("r_th must be positive")
        if not isinstance(self.sigma_h_db, (int, float)):
            spreads = tuple(float(s) for s in self.sigma_h_db)
            if len(spreads) != 3:
                raise ValueError("sigma_h_db needs one value or one per link (sd, sr, rd)")
            object.__setattr__(self, "sigma_h_db", spreads)

    @property
    def d_sr_km(self) -> float:
        return self.d_f * self.d_sd_km

    @property
    def d_rd_km(self) -> float:
        return (1.0 - self.d_f) * self.d_sd_km

    @property
    def node_power_db(self) -> float:
        if self.power_split is PowerSplit.HALF:
            return self.p_t_db - 10.0 * math.log10(2.0)
        return self.p_t_db

    def spread_db(self, link: str) -> float:
        if isinstance(self.sigma_h_db, tuple):
            return self.sigma_h_db[LINKS.index(link)]
        return float(self.sigma_h_db)

    def link(self, name: str) -> LinkModel:
        d = {"sd": self.d_sd_km, "sr": self.d_sr_km, "rd": self.d_rd_km}[name]
        return LinkModel(
            d_km=d,
            sigma_h_db=self.spread_db(name),
            p_r=received_power(self.node_power_db, d, self.p_l_db_per_km),
        )
