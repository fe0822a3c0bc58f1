"""
Feedback delay versus DoF
=========================

The achievable DoF of the 3-user, 2-antenna broadcast channel as a
function of gamma, the feedback delay over the coherence time. Up to
gamma = 1/3 there is no loss at all; past that the curve decays linearly
to the completely-outdated value of 3/2.
"""

from fractions import Fraction

from stia import (
    baseline_zf_mat,
    baseline_zf_tdma,
    coherence_time_estimate,
    emit_tradeoff_table,
    tradeoff_k3,
)

gammas = [Fraction(i, 12) for i in range(0, 19)]  # 0 .. 3/2

print("gamma    aligned   zf+tdma   zf+outdated   tdma   outdated")
rows = emit_tradeoff_table(gammas)
by_gamma = {}
for p in rows:
    by_gamma.setdefault(p.gamma, {})[p.scheme] = p.dof
for g in gammas:
    r = by_gamma[g]
    print(
        f"{str(g):>5}    {float(r['stia']):.4f}    {float(r['zf_tdma']):.4f}    "
        f"{float(r['zf_mat']):.4f}        {float(r['tdma']):.2f}   {float(r['mat']):.2f}"
    )

third = Fraction(1, 3)
print(f"\nat gamma = 1/3 the aligned scheme keeps the full DoF of {tradeoff_k3(third)}")
print(f"  gain over ZF+TDMA time sharing:     {tradeoff_k3(third) - baseline_zf_tdma(third)}")
print(f"  gain over ZF+outdated time sharing: {tradeoff_k3(third) - baseline_zf_mat(third)}")

# what 1/3 of a coherence time means in a cellular downlink: 2.1 GHz
# carrier, walking-speed user
t_c = coherence_time_estimate(2.1e9, 3000 / 3600)
print(f"\ncoherence time at 2.1 GHz and 3 km/h: {t_c * 1e3:.1f} ms")
print(f"feedback may lag up to {t_c / 3 * 1e3:.2f} ms with zero DoF loss")
