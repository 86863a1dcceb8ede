"""Seeded Monte-Carlo simulation of the ISDF protocol.

Trials are grouped in fixed-size blocks.  Block ``k`` draws from its own
generator seeded with ``(seed, k)``, so a trial's random numbers depend only
on the seed and its index, never on how blocks are spread over workers.
Per-block sums are combined in block order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import log_ndtr, logsumexp, ndtr
from scipy.stats import binomtest

from .analytic import SystemDerived, instantaneous_ber
from .model import channel_gain

BLOCK_SIZE = 1 << 16
DEFAULT_TRIALS = 1_000_000
WORKERS_ENV = "ISDF_WORKERS"

METRICS = ("outage", "relay_usage", "ber", "ber_semianalytic", "slots")


@dataclass(frozen=True)
class TrialOutcome:
    gamma_sd: float
    gamma_sr: float
    gamma_rd: float
    relay_used: bool
    outage: bool
    bit_error: bool
    slots_used: int


@dataclass(frozen=True)
class TrialBatch:
    """Vectorised outcomes of ``n`` consecutive trials."""

    gamma_sd: np.ndarray
    gamma_sr: np.ndarray
    gamma_rd: np.ndarray
    relay_used: np.ndarray
    outage: np.ndarray
    bit_error: np.ndarray
    error_prob: np.ndarray
    weight: np.ndarray | None = None

    @property
    def slots_used(self) -> np.ndarray:
        return 1 + self.relay_used.astype(np.int64)

    def __len__(self):
        return self.gamma_sd.size

    def __getitem__(self, i) -> TrialOutcome:
        return TrialOutcome(
            gamma_sd=float(self.gamma_sd[i]),
            gamma_sr=float(self.gamma_sr[i]),
            gamma_rd=float(self.gamma_rd[i]),
            relay_used=bool(self.relay_used[i]),
            outage=bool(self.outage[i]),
            bit_error=bool(self.bit_error[i]),
            slots_used=int(self.slots_used[i]),
        )


@dataclass(frozen=True)
class McEstimate:
    """Monte-Carlo estimate of one metric.

    ``count`` is set for indicator means (event counts) and ``None`` for
    averages of continuous per-trial values.
    """

    metric: str
    mean: float
    std_error: float
    n_trials: int
    seed: int
    count: int | None = None

    def z_score(self, reference: float) -> float:
        diff = abs(self.mean - reference)
        if self.std_error == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.std_error

    def p_value(self, reference: float) -> float:
        """Two-sided p-value of the estimate under ``reference``.

        Indicator metrics use an exact binomial test, which stays valid when
        the expected event count is far below one; continuous metrics use the
        normal approximation.
        """
        if self.count is not None:
            ref = min(max(reference, 0.0), 1.0)
            return binomtest(self.count, self.n_trials, ref).pvalue
        return 2.0 * float(ndtr(-self.z_score(reference)))

    def agrees(self, reference: float, k: float = 3.0) -> bool:
        """True when ``reference`` is within ``k`` standard errors."""
        if self.count is not None:
            return self.p_value(reference) >= 2.0 * float(ndtr(-k))
        return self.z_score(reference) <= k


def run_trials(rng: np.random.Generator, sys: SystemDerived, n: int,
               sd_shift: float = 0.0) -> TrialBatch:
    """Simulate ``n`` protocol rounds.

    Each block of rounds consumes ``n`` standard normals per link (SD, SR,
    RD) and then ``n`` triples of uniforms for the SD, SR and RD detection
    errors.  A non-zero ``sd_shift`` moves the SD fading draw to
    ``N(sd_shift, 1)`` and attaches likelihood-ratio weights.
    """
    n0 = sys.noise.average_power
    g = rng.standard_normal((3, n))
    g[0] += sd_shift
    g_sd, g_sr, g_rd = (
        sys.links[name].p_r * channel_gain(sys.links[name], g[k]) ** 2 / n0
        for k, name in enumerate(("sd", "sr", "rd"))
    )
    u = rng.random((n, 3))
    th = sys.thresholds
    sd_ok = g_sd >= th.gamma_sd
    sr_ok = g_sr >= th.gamma_sr_rd
    rd_ok = g_rd >= th.gamma_sr_rd
    relay = ~sd_ok & sr_ok
    outage = ~sd_ok & (~sr_ok | ~rd_ok)

    pe_sd = instantaneous_ber(g_sd, sys.noise)
    pe_sr = instantaneous_ber(g_sr, sys.noise)
    pe_rd = instantaneous_ber(g_rd, sys.noise)
    err_sd, err_sr, err_rd = u[:, 0] < pe_sd, u[:, 1] < pe_sr, u[:, 2] < pe_rd
    # a relayed bit arrives flipped iff exactly one hop flipped it
    bit_error = np.where(relay, err_sr ^ err_rd, err_sd)
    error_prob = np.where(relay, pe_sr * (1.0 - pe_rd) + (1.0 - pe_sr) * pe_rd, pe_sd)
    weight = None
    if sd_shift:
        weight = np.exp(-sd_shift * g[0] + 0.5 * sd_shift ** 2)
    return TrialBatch(g_sd, g_sr, g_rd, relay, outage, bit_error, error_prob, weight)


def run_trial(rng: np.random.Generator, sys: SystemDerived) -> TrialOutcome:
    return run_trials(rng, sys, 1)[0]


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _block_sums(sys: SystemDerived, seed: int, block: int, n: int) -> np.ndarray:
    b = run_trials(block_rng(seed, block), sys, n)
    return np.array([
        np.count_nonzero(b.outage),
        np.count_nonzero(b.relay_used),
        np.count_nonzero(b.bit_error),
        b.error_prob.sum(),
        np.square(b.error_prob).sum(),
        b.gamma_sd.sum(),
        np.square(b.gamma_sd).sum(),
    ], dtype=float)


def default_workers() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


@dataclass(frozen=True)
class SimulationSummary:
    outage: McEstimate
    relay_usage: McEstimate
    ber: McEstimate
    ber_semianalytic: McEstimate
    slots: McEstimate
    mean_gamma_sd: McEstimate

    def __getitem__(self, metric: str) -> McEstimate:
        return getattr(self, metric)


def _indicator(metric, count, n, seed):
    count = int(count)
    p = count / n
    return McEstimate(metric, p, math.sqrt(p * (1.0 - p) / n), n, seed, count)


def _continuous(metric, total, total_sq, n, seed):
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return McEstimate(metric, mean, math.sqrt(var / n), n, seed)


def simulate(sys: SystemDerived, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
             workers: int | None = None) -> SimulationSummary:
    """Run ``n_trials`` rounds and estimate every metric from the same draws."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    n_blocks = -(-n_trials // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_trials - k * BLOCK_SIZE) for k in range(n_blocks)]
    workers = workers or default_workers()
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda k: _block_sums(sys, seed, k, sizes[k]), range(n_blocks)))
    else:
        parts = [_block_sums(sys, seed, k, sizes[k]) for k in range(n_blocks)]
    sums = np.zeros(7)
    for part in parts:
        sums += part

    n = n_trials
    usage = _indicator("relay_usage", sums[1], n, seed)
    return SimulationSummary(
        outage=_indicator("outage", sums[0], n, seed),
        relay_usage=usage,
        ber=_indicator("ber", sums[2], n, seed),
        ber_semianalytic=_continuous("ber_semianalytic", sums[3], sums[4], n, seed),
        slots=McEstimate("slots", 1.0 + usage.mean, usage.std_error, n, seed),
        mean_gamma_sd=_continuous("mean_gamma_sd", sums[5], sums[6], n, seed),
    )


def estimate(sys: SystemDerived, metric: str, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
             workers: int | None = None) -> McEstimate:
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    return simulate(sys, n_trials, seed, workers)[metric]


def _log_ber(gamma: float, sys: SystemDerived) -> float:
    terms = [math.log(pj) + log_ndtr(-math.sqrt(aj * gamma))
             for pj, aj in zip(sys.noise.weights, sys.noise.alphas) if pj > 0]
    return float(logsumexp(terms))


def dominating_shift(sys: SystemDerived) -> float:
    """Mean shift for the SD fading normal that favours the fades driving the BER.

    Maximizes ``log Pe(gamma_sd(g)) - g^2 / 2`` over ``g``, the mode of the
    zero-variance sampling density for the direct-link error term.
    """
    link = sys.links["sd"]
    if link.sigma_h == 0:
        return 0.0
    scale = link.p_r / sys.noise.average_power

    def neg(g):
        return -(_log_ber(scale * float(channel_gain(link, g)) ** 2, sys) - 0.5 * g * g)

    res = optimize.minimize_scalar(neg, bounds=(-40.0, 0.0), method="bounded",
                                   options={"xatol": 1e-6})
    return float(res.x)


def _weighted_block(sys, seed, block, n, shift):
    b = run_trials(block_rng(seed, block), sys, n, sd_shift=shift)
    x = b.error_prob if b.weight is None else b.error_prob * b.weight
    return np.array([x.sum(), np.square(x).sum()])


def estimate_ber_semianalytic(sys: SystemDerived, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
                              workers: int | None = None, importance: bool = True) -> McEstimate:
    """BER from the exact per-round error probability instead of drawn bit errors.

    With ``importance`` the SD fading draw is mean-shifted to
    :func:`dominating_shift` and reweighted.  The estimate stays unbiased,
    and at high transmit power, where rare deep fades carry the whole
    error rate, its standard error stays trustworthy.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    shift = dominating_shift(sys) if importance else 0.0
    n_blocks = -(-n_trials // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_trials - k * BLOCK_SIZE) for k in range(n_blocks)]
    work = lambda k: _weighted_block(sys, seed, k, sizes[k], shift)  # noqa: E731
    workers = workers or default_workers()
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(n_blocks)))
    else:
        parts = [work(k) for k in range(n_blocks)]
    sums = np.zeros(2)
    for part in parts:
        sums += part
    return _continuous("ber_semianalytic", sums[0], sums[1], n_trials, seed)
