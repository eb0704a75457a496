"""
Measure-and-prepare devices in Fock space
=========================================

A heterodyne measurement followed by preparation of |c beta*> turns a
coherent input into a displaced thermal state with mean photon number c^2.
"""

import numpy as np

from cvlimits import channels as ch
from cvlimits import fock_numerics as fn
from cvlimits.channels import ChannelSpec, TaskSpec

trunc = fn.TruncationSpec(40)
conj = ChannelSpec.mp_conjugator(2 / 3)
rho = ch.mp_output_state(conj, 1.0, trunc).matrix

a = np.diag(np.sqrt(np.arange(1, 40)), 1)
mean = np.trace(rho @ a)
print("output mean", np.round(mean, 12), " excess photons", np.real(np.trace(rho @ a.T @ a)) - abs(mean) ** 2)

task = TaskSpec(1, 1, 0.5, conjugate=True)
print("fidelity with |1*>: Fock", fn.pure_state_fidelity(fn.coherent_vector(1.0, trunc), ch.mp_output_state(conj, 1.0, trunc)),
      " closed", ch.per_input_fidelity(conj, 1.0, task))

# at c = sqrt(N)/(N + lam) the average reaches the conjugation limit
print("average", ch.average_fidelity_closed(conj, task))
