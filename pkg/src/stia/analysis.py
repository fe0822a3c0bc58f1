"""Delay-DoF trade-off curves and Monte Carlo DoF slope estimation.

The analytic side is exact rational arithmetic: the achievable DoF of the
3-user channel as a function of the delay ratio gamma, together with the
time-sharing baselines (ZF with TDMA fill-in, ZF with the outdated-CSI
scheme whose DoF of 3/2 enters only as a constant).

The empirical side estimates the DoF as the high-SNR slope of Monte Carlo
mean sum rates against log2(SNR). Trials are drawn in fixed-size chunks
whose generators are keyed by (seed, chunk index), so results are byte
identical regardless of execution order or worker count; channel draws are
shared across the SNR grid, which removes almost all Monte Carlo noise
from the slope.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import protocol
from .channel import DelayConfig, complex_normal
from .numerics import CONDITION_LIMIT
from .scheduler import build_plan_general

__all__ = [
    "MAT_DOF_K3",
    "SIMULATION_SCHEMES",
    "TRADEOFF_SCHEMES",
    "DofEstimate",
    "TradeoffPoint",
    "baseline_zf_mat",
    "baseline_zf_tdma",
    "emit_tradeoff_table",
    "estimate_dof_slope",
    "fit_dof_slope",
    "tradeoff_k3",
]

# DoF of the completely-outdated-CSI scheme for 3 users and 2 antennas,
# used as a curve constant only (no signal-level simulation of it).
MAT_DOF_K3 = Fraction(3, 2)

TRADEOFF_SCHEMES = ("stia", "zf_tdma", "zf_mat", "tdma", "mat")
SIMULATION_SCHEMES = ("stia", "zf_tdma", "zf", "tdma")

_CHUNK = 512
_BOOTSTRAP_KEY = 999983


@dataclass(frozen=True)
class TradeoffPoint:
    """One scheme's DoF at one delay ratio, both exact rationals."""

    scheme: str
    gamma: Fraction
    dof: Fraction


@dataclass
class DofEstimate:
    """Monte Carlo DoF slope with its provenance."""

    scheme: str
    gamma: Fraction
    snr_grid_db: tuple[float, ...]
    mean_sum_rates: tuple[float, ...]
    slope: float
    confidence_halfwidth: float
    trials: int
    seed: int
    resamples: int = 0

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "gamma_num": self.gamma.numerator,
            "gamma_den": self.gamma.denominator,
            "snr_grid_db": list(self.snr_grid_db),
            "mean_sum_rates": list(self.mean_sum_rates),
            "slope": self.slope,
            "confidence_halfwidth": self.confidence_halfwidth,
            "trials": self.trials,
            "seed": self.seed,
            "resamples": self.resamples,
        }


def tradeoff_k3(gamma) -> Fraction:
    """Achievable DoF of the 3-user, 2-antenna channel versus delay ratio.

    2 up to gamma = 1/3, then the line -(3/4) gamma + 9/4 down to 3/2 at
    gamma = 1, constant 3/2 beyond.
    """
    g = Fraction(gamma)
    if g < 0:
        raise ValueError("gamma cannot be negative")
    if g <= Fraction(1, 3):
        return Fraction(2)
    if g <= 1:
        return -Fraction(3, 4) * g + Fraction(9, 4)
    return MAT_DOF_K3


def baseline_zf_tdma(gamma) -> Fraction:
    """Time sharing of ZF (current CSIT) and TDMA (none): 2 - gamma on [0, 1]."""
    g = Fraction(gamma)
    if not 0 <= g <= 1:
        raise ValueError("the ZF/TDMA baseline is defined on gamma in [0, 1]")
    return 2 - g


def baseline_zf_mat(gamma) -> Fraction:
    """Time sharing of ZF and the outdated-CSI scheme: 2 - gamma/2 on [0, 1]."""
    g = Fraction(gamma)
    if not 0 <= g <= 1:
        raise ValueError("the ZF/outdated-CSI baseline is defined on gamma in [0, 1]")
    return 2 - g / 2


def _baseline_extended(gamma: Fraction, no_csit_dof: Fraction) -> Fraction:
    # Time-sharing line clamped past gamma = 1, where no current-CSIT slots
    # remain and only the no-CSIT scheme runs.
    if gamma >= 1:
        return no_csit_dof
    return (1 - gamma) * 2 + gamma * no_csit_dof


def emit_tradeoff_table(gammas) -> list[TradeoffPoint]:
    """Rows for every scheme at every delay ratio, exact rationals.

    The time-sharing baselines are extended past gamma = 1 by their no-CSIT
    constituents (1 for TDMA fill-in, 3/2 for the outdated-CSI scheme) so
    each grid point gets a complete set of rows.
    """
    gs = [Fraction(g) for g in gammas]
    if not gs:
        raise ValueError("gamma grid must not be empty")
    rows = []
    for g in gs:
        if g < 0:
            raise ValueError("gamma cannot be negative")
        rows.append(TradeoffPoint("stia", g, tradeoff_k3(g)))
        rows.append(TradeoffPoint("zf_tdma", g, _baseline_extended(g, Fraction(1))))
        rows.append(TradeoffPoint("zf_mat", g, _baseline_extended(g, MAT_DOF_K3)))
        rows.append(TradeoffPoint("tdma", g, Fraction(1)))
        rows.append(TradeoffPoint("mat", g, MAT_DOF_K3))
    return rows


def fit_dof_slope(snr_grid_db, mean_rates) -> float:
    """Least-squares slope of rate against log2 of the linear SNR."""
    db = np.asarray(snr_grid_db, dtype=float)
    y = np.asarray(mean_rates, dtype=float)
    if db.shape != y.shape or db.size < 2:
        raise ValueError("need matching grids with at least two SNR points")
    x = db / (10.0 * np.log10(2.0))
    design = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[1])


# ---------------------------------------------------------------------------
# Batched per-scheme rate engines. Each returns (rates, resamples) with
# rates of shape (trials, len(snr)) holding per-slot sum rates in bits.
# Slots and rounds are drawn independently; mean rates are unaffected
# because expectation is additive across the horizon.
# ---------------------------------------------------------------------------


def _chunk_layout(trials: int):
    starts = range(0, trials, _CHUNK)
    return [(i, s, min(_CHUNK, trials - s)) for i, s in enumerate(starts)]


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng((seed & (1 << 64) - 1, index))


def _zf_stack_bits(n_t: int, count: int, snr_lin: np.ndarray, rng) -> tuple[np.ndarray, int]:
    """Sum rates of ZF slots on (count,) served-channel stacks.

    Served users' rows are i.i.d., so drawing the n_t x n_t served stack
    directly is distribution-identical to selecting a rotating subset of K
    users.
    """
    h = complex_normal(rng, (count, n_t, n_t))
    resamples = 0
    for _ in range(64):
        s = np.linalg.svd(h, compute_uv=False)
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = s[:, 0] / s[:, -1]
        bad = ~np.isfinite(cond) | (cond > CONDITION_LIMIT)
        if not np.any(bad):
            break
        resamples += int(bad.sum())
        h[bad] = complex_normal(rng, (int(bad.sum()), n_t, n_t))
    inv = np.linalg.solve(h, np.broadcast_to(np.eye(n_t, dtype=complex), h.shape))
    gains = 1.0 / np.sum(np.abs(inv) ** 2, axis=1)  # |h_i w_i|^2 per stream
    bits = np.log2(1.0 + (snr_lin[None, None, :] / n_t) * gains[:, :, None]).sum(axis=1)
    return bits, resamples


def _stia_chunk(K: int, rounds_per_trial: int, snr_lin, size: int, rng) -> tuple[np.ndarray, int]:
    n_t = K - 1
    total = size * rounds_per_trial
    ch, v, _, resamples = protocol.batch_rounds(K, total, rng)
    heff = protocol.batch_effective_channels(ch, v)
    w = protocol.whitening_matrix(K)
    g = np.einsum("ab,ckbj->ckaj", w, heff)
    gram = np.einsum("ckaj,ckbj->ckab", g, g.conj())
    lam = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
    bits = np.empty((total, snr_lin.size))
    for gi, p in enumerate(snr_lin):
        p_s = p / (K * (K - 1))
        bits[:, gi] = np.log2(1.0 + p_s * lam).sum(axis=(1, 2))
    stia_bits = bits.reshape(size, rounds_per_trial, -1).sum(axis=1)

    z_count = (K - 1) ** 2
    zf_bits, zf_res = _zf_stack_bits(n_t, size * z_count, snr_lin, rng)
    zf_bits = zf_bits.reshape(size, z_count, -1).sum(axis=1)

    t_count = K - 1
    h = complex_normal(rng, (size * t_count, n_t))
    gains = np.sum(np.abs(h) ** 2, axis=1)
    tdma_bits = np.log2(1.0 + snr_lin[None, :] * gains[:, None])
    tdma_bits = tdma_bits.reshape(size, t_count, -1).sum(axis=1)

    horizon = K * (rounds_per_trial + K - 1)
    return (stia_bits + zf_bits + tdma_bits) / horizon, resamples + zf_res


def _zf_tdma_chunk(K: int, t_c: int, t_fb: int, snr_lin, size: int, rng) -> tuple[np.ndarray, int]:
    # One coherence block per trial; positions before the report arrives run
    # TDMA, the rest run ZF on a rotating served subset of the same block.
    n_t = K - 1
    ch = complex_normal(rng, (size, K, n_t))
    resamples = 0
    zf_positions = [p for p in range(t_c) if p >= t_fb]
    if zf_positions:
        for _ in range(64):
            worst = np.zeros(size)
            for p in zf_positions:
                drop = p % K
                served = [u for u in range(K) if u != drop]
                s = np.linalg.svd(ch[:, served, :], compute_uv=False)
                with np.errstate(divide="ignore", invalid="ignore"):
                    cond = s[:, 0] / s[:, -1]
                worst = np.maximum(worst, np.where(np.isfinite(cond), cond, np.inf))
            bad = worst > CONDITION_LIMIT
            if not np.any(bad):
                break
            resamples += int(bad.sum())
            ch[bad] = complex_normal(rng, (int(bad.sum()), K, n_t))
    bits = np.zeros((size, snr_lin.size))
    for p in range(t_c):
        if p < t_fb:
            user = p % K
            gains = np.sum(np.abs(ch[:, user, :]) ** 2, axis=1)
            bits += np.log2(1.0 + snr_lin[None, :] * gains[:, None])
        else:
            drop = p % K
            served = [u for u in range(K) if u != drop]
            inv = np.linalg.solve(
                ch[:, served, :], np.broadcast_to(np.eye(n_t, dtype=complex), (size, n_t, n_t))
            )
            gains = 1.0 / np.sum(np.abs(inv) ** 2, axis=1)
            bits += np.log2(1.0 + (snr_lin[None, None, :] / n_t) * gains[:, :, None]).sum(axis=1)
    return bits / t_c, resamples


def _tdma_chunk(n_t: int, snr_lin, size: int, rng) -> tuple[np.ndarray, int]:
    h = complex_normal(rng, (size, n_t))
    gains = np.sum(np.abs(h) ** 2, axis=1)
    return np.log2(1.0 + snr_lin[None, :] * gains[:, None]), 0


def _zf_chunk(n_t: int, snr_lin, size: int, rng) -> tuple[np.ndarray, int]:
    return _zf_stack_bits(n_t, size, snr_lin, rng)


def estimate_dof_slope(
    scheme: str,
    K: int,
    delay: DelayConfig,
    snr_grid_db,
    trials: int,
    seed: int,
    rounds_per_trial: int = 16,
    bootstrap_samples: int = 200,
    threads: int | None = None,
) -> DofEstimate:
    """Monte Carlo DoF slope of one scheme over an SNR grid.

    Per trial the scheme's slot composition is simulated end to end (a full
    scheduled horizon for the aligned scheme, one coherence block for the
    ZF/TDMA time share, a single slot for pure ZF or TDMA) and the sum rate
    per slot is recorded at every grid point. The slope of the mean rates
    against log2(SNR) is the DoF estimate; the confidence half width is
    1.96 times the bootstrap standard deviation over trials.

    The aligned scheme requires ``delay == (t_c=K, t_fb=1)``, pure ZF
    requires ``t_fb == 0`` and the time share ``t_fb <= t_c``.
    """
    db = tuple(float(x) for x in snr_grid_db)
    if len(db) < 2 or any(x2 <= x1 for x1, x2 in zip(db, db[1:])):
        raise ValueError("snr_grid_db must be strictly increasing with at least 2 points")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if scheme not in SIMULATION_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SIMULATION_SCHEMES}")
    snr_lin = np.asarray([10.0 ** (x / 10.0) for x in db])

    if scheme == "stia":
        if K < 3:
            raise ValueError("the aligned scheme needs at least 3 users")
        if (delay.t_c, delay.t_fb) != (K, 1):
            raise ValueError(
                "no aligned plan for this delay configuration; need t_c == K and t_fb == 1"
            )
        # Exercise the plan construction once so an infeasible geometry fails here.
        build_plan_general(K, rounds_per_trial)

        def compute(size, rng):
            return _stia_chunk(K, rounds_per_trial, snr_lin, size, rng)

    elif scheme == "zf_tdma":
        if delay.t_fb > delay.t_c:
            raise ValueError("the ZF/TDMA time share needs t_fb <= t_c")

        def compute(size, rng):
            return _zf_tdma_chunk(K, delay.t_c, delay.t_fb, snr_lin, size, rng)

    elif scheme == "zf":
        if delay.t_fb != 0:
            raise ValueError("pure ZF needs t_fb == 0")

        def compute(size, rng):
            return _zf_chunk(K - 1, snr_lin, size, rng)

    else:  # tdma
        def compute(size, rng):
            return _tdma_chunk(K - 1, snr_lin, size, rng)

    layout = _chunk_layout(trials)

    def run_chunk(entry):
        index, _, size = entry
        return compute(size, _chunk_rng(seed, index))

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_chunk, layout))
    else:
        results = [run_chunk(entry) for entry in layout]

    rates = np.concatenate([r for r, _ in results], axis=0)
    resamples = int(sum(res for _, res in results))
    mean_rates = rates.mean(axis=0)
    slope = fit_dof_slope(db, mean_rates)

    boot_rng = np.random.default_rng((seed & (1 << 64) - 1, _BOOTSTRAP_KEY))
    slopes = np.empty(bootstrap_samples)
    for b in range(bootstrap_samples):
        idx = boot_rng.integers(0, trials, trials)
        slopes[b] = fit_dof_slope(db, rates[idx].mean(axis=0))
    halfwidth = float(1.96 * slopes.std(ddof=1)) if bootstrap_samples > 1 else 0.0

    return DofEstimate(
        scheme=scheme,
        gamma=delay.gamma,
        snr_grid_db=db,
        mean_sum_rates=tuple(float(x) for x in mean_rates),
        slope=slope,
        confidence_halfwidth=halfwidth,
        trials=trials,
        seed=seed,
        resamples=resamples,
    )
