"""A uniform bit sent over a binary symmetric channel with Hamming distortion.

Sending the bit uncoded already meets the rate-distortion function at the
channel's capacity, so the relaxation is tight here: its value equals the
best deterministic code's value and the information constraint is active.
"""
import numpy as np

from teamrelax import (Instance, SeparableCost, blahut_arimoto_cc, blahut_arimoto_rd,
                       enumerate_optimal, solve_relaxation_separable)

crossover = 0.1
channel = np.array([[1 - crossover, crossover], [crossover, 1 - crossover]])
hamming = 1.0 - np.eye(2)
inst = Instance(np.array([0.5, 0.5]), channel, separable=SeparableCost(hamming, np.zeros(2)))

exact = enumerate_optimal(inst)
print(f"best code       f={list(exact.best_code.f)} g={list(exact.best_code.g)}  cost {exact.value:.6f}")

sol = solve_relaxation_separable(inst)
print(f"relaxation      value {sol.value:.6f}  status {sol.status}")
print(f"multiplier      lambda {sol.lam:.6f}  (positive: the information constraint binds)")
print(f"info slack      I(X;Y) - I(S;Shat) = {sol.dpi_slack:.2e}")
print(f"KKT residual    {sol.kkt.max_residual:.2e}")

cap = blahut_arimoto_cc(channel).value
rate = blahut_arimoto_rd(np.array([0.5, 0.5]), hamming, target=crossover).value
print(f"capacity        {cap:.6f} nats")
print(f"R({crossover})          {rate:.6f} nats  (equal: distortion {crossover} is achievable uncoded)")
