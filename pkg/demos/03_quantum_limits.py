"""
Quantum limits and the devices that reach them
==============================================

The amplification limit (1 + lam)/eta is reached by the amplifier with
g = eta/(1 + lam)^2 once eta >= (1 + lam)^2. The conjugation limit
(N + lam)/(N + lam + 1) is reached by a measure-and-prepare device.
"""

import numpy as np

from cvlimits import fidelity_limits as fl
from cvlimits.channels import ChannelSpec, TaskSpec, average_fidelity_closed

for eta, lam in [(4.0, 0.2), (2.0, 0.0), (1.5, 0.3), (1.1, 0.3)]:
    r = fl.amplification_bound(eta, lam)
    print(f"eta={eta:<4} lam={lam:<4} bound={r.value:.6f} {r.branch.value:<17} "
          f"{r.attainability.value:<18} by={r.attained_by}  best_known={r.best_known}")

# scanning the gain confirms the optimum
gains = np.linspace(1, 6, 5001)
fids = [average_fidelity_closed(ChannelSpec.amplifier(g), TaskSpec(1, 4, 0.2)) for g in gains]
print("scanned optimum g =", gains[int(np.argmax(fids))], "fidelity =", max(fids))

# the conjugation limit is classical: heterodyne, then prepare |c beta*>
r = fl.conjugation_bound(1.0, 0.5)
print("conjugation bound", r.value, "attained by", r.attained_by)

# the witness chain gives the same numbers once its free parameter is optimised
print("witness, conjugation  ", fl.witness_bound_optimize(TaskSpec(1, 1, 0.5, conjugate=True)))
print("witness, amplification", fl.witness_bound_optimize(TaskSpec(0.25, 1, 0.05)))

# between 1 + lam and (1 + lam)^2 its optimum drops to the unit-gain value
eta, lam = 1.5, 0.3
print("gap region:", fl.amplification_bound(eta, lam).value,
      fl.witness_bound_optimize(TaskSpec(1 / eta, 1, lam / eta))[1],
      fl.best_gaussian_amplifier(eta, lam))
