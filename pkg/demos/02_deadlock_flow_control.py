"""Flow control that prevents a deadlock on a two-channel line.

Topology A - B - C. The A<->C demands form a circulation the line can carry
forever; B's demands toward A and C are one-way and would drain B's side of
both channels, eventually freezing all four flows.

With linear utility U(q) = q, a path whose price climbs above 1 stops
earning its keep. B's path prices rise by gamma * flow every slot until
they cross 1, at which point B's flows switch off for good and the A<->C
circulation keeps running at a net price of zero.
"""
import numpy as np

import pcnflow as pf

trace = pf.run_scenario(pf.builtin_scenario("line3-deadlock"), horizon=60)

print("pair columns:", trace.pair_names)
for t in list(range(0, 14)) + [30, 59]:
    mu = trace.path_prices[t]
    q = trace.totals[t]
    print(f"slot {t:2d}: price(B->A) = {mu[1]:4.2f}  flows "
          f"A->C {q[0]:4.1f} | B->A {q[1]:4.1f} | B->C {q[2]:4.1f} | C->A {q[3]:4.1f}")

cross = int(np.nonzero(trace.path_prices[:, 1] > 1.0)[0][0])
print(f"\nB's path price crossed 1 at slot {cross}; its flows stay off afterwards.")
print("A<->C never paid a positive price: the two channel prices cancel along the line.")

print("\n== with eta = 0.1 the same shutdown happens smoothly ==")
reg = pf.run_scenario(
    pf.apply_overrides(pf.builtin_scenario("line3-deadlock"), eta=0.1), horizon=3000
)
print("final totals:", np.round(reg.totals[-1], 4))
oracle = pf.brute_force_primal(pf.apply_overrides(
    pf.builtin_scenario("line3-deadlock"), eta=0.1).model())
print("brute-force optimum:", np.round(oracle.flows, 4), "value", round(oracle.value, 6))
