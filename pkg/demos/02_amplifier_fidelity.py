"""
Average fidelity of the quantum-limited amplifier
=================================================

Coherent inputs drawn from a Gaussian prior of inverse width lambda are sent
through a phase-insensitive amplifier of gain g. The average fidelity with the
target |sqrt(eta) alpha> is computed four ways.
"""

from cvlimits import channels as ch
from cvlimits import fock_numerics as fn
from cvlimits.channels import ChannelSpec, TaskSpec

task = TaskSpec(n_in=1.0, eta=4.0, lam=0.2)
amp = ChannelSpec.amplifier(2.0)

# exact Gaussian integral
print("closed form       ", ch.average_fidelity_closed(amp, task))

# Gauss-Laguerre quadrature of the per-input fidelity
print("quadrature        ", ch.average_fidelity_quadrature(amp, task))

# Monte Carlo over the prior, reproducible for a given seed
mean, se = ch.average_fidelity_mc(amp, task, samples=10**6, seed=7)
print(f"Monte Carlo        {mean:.6f} +/- {se:.6f}")

# truncated Fock space: the amplifier on vacuum, viewed from the output mean
print("Fock (dim 60)     ", ch.amplifier_average_fidelity_displaced(2.0, task, fn.TruncationSpec(60)))

# a single input, simulated through the Kraus branches of the dilation
print("per input, alpha=1", ch.per_input_fidelity(amp, 1.0, task),
      ch.fock_fidelity(amp, 1.0, task, fn.TruncationSpec(60)))
