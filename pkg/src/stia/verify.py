"""Batched property sweeps: alignment, cancellation, decoding, rank, plans, power.

Each suite draws a fixed number of random rounds per user count, runs the
vectorized round machinery and reports worst-case residuals together with
pass/fail flags. The whole report is JSON-ready and deterministic in the
seed. A deliberately broken precoder (negated reference CSI) can be
injected to prove the alignment and cancellation suites actually bite.
"""

from __future__ import annotations

import numpy as np

from . import protocol
from .channel import complex_normal
from .numerics import CONDITION_LIMIT, DEFAULT_RANK_TOL
from .scheduler import account_dof, build_plan_general, build_plan_k3, validate_plan

__all__ = [
    "ALIGNMENT_TOL",
    "DECODE_TOL",
    "LEAKAGE_TOL",
    "POWER_RTOL",
    "RANK_MIN_FRACTION",
    "round_sweep",
    "plan_suite",
    "power_suite",
    "run_all",
]

ALIGNMENT_TOL = 1e-9
LEAKAGE_TOL = 1e-9
DECODE_TOL = 1e-8
RANK_MIN_FRACTION = 0.999
POWER_RTOL = 0.02


def round_sweep(K: int, rounds: int, seed: int, inject_fault: bool = False) -> dict:
    """Alignment, cancellation, decoding and rank statistics over random rounds.

    Runs the noise-free signal path end to end on ``rounds`` random rounds:
    coefficient-level alignment residuals, signal-level leakage of every
    interferer after cancellation, relative decoding error, and the
    numerical rank of every effective channel. ``inject_fault`` negates the
    reference CSI inside the precoder build, which must blow the alignment
    and cancellation residuals up to order one.
    """
    rng = np.random.default_rng((seed & (1 << 64) - 1, K))
    ch, v, conds, resamples = protocol.batch_rounds(K, rounds, rng)
    if inject_fault:
        v = -v

    # Coefficient-level alignment: h_j[m] V_k[m] against h_j[ref] for j != k.
    got = np.einsum("cmji,cmkia->cmkja", ch[:, 1:], v)
    want = ch[:, 0][:, None, None, :, :]
    num = np.max(np.abs(got - want), axis=-1)
    den = np.max(np.abs(ch[:, 0]), axis=-1)[:, None, None, :]
    rel = num / den
    k_idx = np.arange(K)
    rel[:, :, k_idx, k_idx] = 0.0  # own rows carry the data, not interference
    alignment = float(rel.max())

    # Noise-free signal path: broadcast, precoded slots, differences.
    symbols = complex_normal(rng, (rounds, K, K - 1))
    x0 = symbols.sum(axis=1)
    xm = np.einsum("cmkab,ckb->cma", v, symbols)
    y0 = np.einsum("cki,ci->ck", ch[:, 0], x0)
    ym = np.einsum("cmki,cmi->cmk", ch[:, 1:], xm)
    diffs = ym - y0[:, None, :]

    hv_own = np.einsum("cmki,cmkia->cmka", ch[:, 1:], v[:, :, :, :, :])
    own_rows = np.einsum("cmka,cka->cmk", hv_own - ch[:, 0][:, None], symbols)
    leak = np.abs(diffs - own_rows)
    cross = np.abs(np.einsum("cki,cji->ckj", ch[:, 0], symbols))
    scale = cross.sum(axis=2) - cross[:, k_idx, k_idx]
    leakage = float((leak / scale[:, None, :]).max())

    heff = protocol.batch_effective_channels(ch, v)
    d_user = np.moveaxis(diffs, 1, 2)
    decoded = np.linalg.solve(heff, -d_user[..., None])[..., 0]
    err = np.max(np.abs(decoded - symbols), axis=-1)
    mag = np.max(np.abs(symbols), axis=-1)
    decode_error = float((err / mag).max())

    s = np.linalg.svd(heff, compute_uv=False)
    full = s[..., -1] > DEFAULT_RANK_TOL * s[..., 0]
    round_full = full.all(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_eff = s[..., 0] / s[..., -1]
    flagged = ~np.isfinite(cond_eff) | (cond_eff > CONDITION_LIMIT)
    unflagged_failures = int(np.count_nonzero(~full & ~flagged))

    return {
        "rounds": rounds,
        "max_alignment_residual": alignment,
        "max_cancellation_leakage": leakage,
        "max_decode_error": decode_error,
        "full_rank_fraction": float(round_full.mean()),
        "unflagged_rank_failures": unflagged_failures,
        "worst_condition": float(conds.max()),
        "resamples": int(resamples),
    }


def plan_suite(k_values=(3, 4, 5, 6), n_max: int = 50) -> dict:
    """Partition and accounting invariants for every plan in the grid."""
    checked = 0
    failures = []
    for K in k_values:
        for n in range(1, n_max + 1):
            plan = build_plan_general(K, n)
            try:
                validate_plan(plan)
            except ValueError as err:
                failures.append(f"K={K} n={n}: {err}")
            checked += 1
    k3_match = all(
        build_plan_k3(n).stia_rounds == build_plan_general(3, n).stia_rounds
        and build_plan_k3(n).zf_slots == build_plan_general(3, n).zf_slots
        and build_plan_k3(n).tdma_slots == build_plan_general(3, n).tdma_slots
        for n in range(1, n_max + 1)
    )
    golden = build_plan_k3(3)
    golden_ok = (
        golden.stia_rounds == ((1, 6, 8), (4, 9, 11), (7, 12, 14))
        and golden.zf_slots == frozenset({2, 3, 5, 15})
        and golden.tdma_slots == frozenset({10, 13})
    )
    dofs = [account_dof(build_plan_k3(n)).dof for n in range(1, n_max + 1)]
    monotone = all(a <= b < 2 for a, b in zip(dofs, dofs[1:]))
    return {
        "plans_checked": checked,
        "violations": failures,
        "k3_specialization_matches": k3_match,
        "k3_golden_sets_match": golden_ok,
        "k3_dof_monotone_below_limit": monotone,
        "passed": not failures and k3_match and golden_ok and monotone,
    }


def power_suite(trials: int = 10_000, seed: int = 7, power: float = 10.0, K: int = 3) -> dict:
    """Realized mean transmit power per slot type against the budget."""
    rng = np.random.default_rng((seed & (1 << 64) - 1, 101))
    n_t = K - 1

    s = complex_normal(rng, (trials, K, n_t))
    alpha = np.sqrt(power / (K * n_t))
    x = alpha * s.sum(axis=1)
    phase_one = float(np.mean(np.sum(np.abs(x) ** 2, axis=1)))

    _, v, _, _ = protocol.batch_rounds(K, trials, rng)
    v1 = v[:, 0]
    fro = np.sum(np.abs(v1) ** 2, axis=(1, 2, 3))
    alpha = np.sqrt(power / fro)
    s = complex_normal(rng, (trials, K, n_t))
    x = alpha[:, None] * np.einsum("ckab,ckb->ca", v1, s)
    phase_two = float(np.mean(np.sum(np.abs(x) ** 2, axis=1)))

    h = complex_normal(rng, (trials, n_t, n_t))
    inv = np.linalg.solve(h, np.broadcast_to(np.eye(n_t, dtype=complex), h.shape))
    w = inv / np.linalg.norm(inv, axis=1, keepdims=True)
    s = complex_normal(rng, (trials, n_t))
    x = np.sqrt(power / n_t) * np.einsum("tab,tb->ta", w, s)
    zf = float(np.mean(np.sum(np.abs(x) ** 2, axis=1)))

    s = complex_normal(rng, trials)
    tdma = float(power * np.mean(np.abs(s) ** 2))

    realized = {"phase_one": phase_one, "phase_two": phase_two, "zf": zf, "tdma": tdma}
    ok = all(abs(p / power - 1.0) <= POWER_RTOL for p in realized.values())
    return {
        "target_power": power,
        "realized": realized,
        "tolerance": POWER_RTOL,
        "passed": ok,
    }


def run_all(
    k_values=(3, 4, 5, 6),
    rounds: int = 1000,
    seed: int = 2024,
    power_trials: int = 10_000,
    plan_n_max: int = 50,
    inject_fault: str = "none",
) -> dict:
    """Run every suite and aggregate a JSON-ready pass/fail report."""
    if inject_fault not in ("none", "alignment"):
        raise ValueError("inject_fault must be 'none' or 'alignment'")
    k_values = tuple(int(k) for k in k_values)
    if any(k < 3 for k in k_values):
        raise ValueError("round sweeps need K >= 3")
    sweeps = {
        k: round_sweep(k, rounds, seed, inject_fault=(inject_fault == "alignment"))
        for k in k_values
    }
    alignment_ok = all(s["max_alignment_residual"] <= ALIGNMENT_TOL for s in sweeps.values())
    leakage_ok = all(s["max_cancellation_leakage"] <= LEAKAGE_TOL for s in sweeps.values())
    decode_ok = all(s["max_decode_error"] <= DECODE_TOL for s in sweeps.values())
    rank_ok = all(
        s["full_rank_fraction"] >= RANK_MIN_FRACTION and s["unflagged_rank_failures"] == 0
        for s in sweeps.values()
    )
    plans = plan_suite(k_values=k_values, n_max=plan_n_max)
    power = power_suite(trials=power_trials, seed=seed)
    report = {
        "schema_version": 1,
        "seed": seed,
        "rounds_per_k": rounds,
        "k_values": list(k_values),
        "inject_fault": inject_fault,
        "round_sweeps": {str(k): sweeps[k] for k in k_values},
        "alignment": {"tolerance": ALIGNMENT_TOL, "passed": alignment_ok},
        "cancellation": {"tolerance": LEAKAGE_TOL, "passed": leakage_ok},
        "decoding": {"tolerance": DECODE_TOL, "passed": decode_ok},
        "rank": {"min_fraction": RANK_MIN_FRACTION, "passed": rank_ok},
        "plans": plans,
        "power": power,
    }
    report["passed"] = bool(
        alignment_ok and leakage_ok and decode_ok and rank_ok and plans["passed"] and power["passed"]
    )
    return report
