"""Building costs under which a chosen code is optimal.

Multipliers of the relaxation's optimality conditions turn into a
distortion delta(s, shat) and an input cost rho(x). For Shannon information
these reproduce the classical log-posterior distortion and divergence
cost; total-variation information yields costs outside that family while
still making the code optimal.
"""
import numpy as np

from teamrelax import DetCode, Instance, SynthesisSpec, synthesize_costs, verify_inverse_optimality
from teamrelax.info import neg_log, total_variation
from teamrelax.inverse import best_gastpar_fit, candidate_pair, instance_with_costs

np.set_printoptions(precision=4, suppress=True)
base = Instance(np.array([0.4, 0.6]), np.array([[0.8, 0.2], [0.3, 0.7]]), cost=np.zeros((2, 2, 2, 2)))
code = DetCode([0, 1], [0, 1])
pair = candidate_pair(base, code)

for f in (neg_log(), total_variation()):
    delta, rho = synthesize_costs(base, pair, SynthesisSpec(f, 1.0, np.zeros(2), 0.0))
    inst = instance_with_costs(base, delta, rho)
    rep = verify_inverse_optimality(inst, code)
    fit = best_gastpar_fit(base, pair, delta, rho)
    print(f"{f.kind}:")
    print(f"  delta =\n{delta}\n  rho = {rho}")
    print(f"  code cost {rep.candidate_value:.6f}, best over all codes {rep.global_min:.6f}, "
          f"optimal {rep.optimal}")
    print(f"  distance from the log-posterior family: {fit.residual:.2e}")
    delta[0, 0] += 1.0
    broken = verify_inverse_optimality(instance_with_costs(base, delta, rho), code)
    print(f"  after raising delta[0,0] by 1: optimal {broken.optimal}\n")
