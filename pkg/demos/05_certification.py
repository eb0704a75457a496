"""
Certifying a fidelity dataset
=============================

Simulated test data from the optimal amplifier is compared with the quantum
limit and with the best measure-and-prepare baseline. The same steps are
available from the command line::

    cvlimits synth --amp --eta 4 --lambda 0.2 --seed 1 --out data.csv
    cvlimits certify data.csv --amp --eta 4 --lambda 0.2
"""

from cvlimits import cli
from cvlimits.channels import ChannelSpec, TaskSpec

task = TaskSpec(1, 4, 0.2)
records = cli.synthesize_records(ChannelSpec.amplifier(4 / 1.2**2), task, n_records=10_000, n_trials=100, seed=1)
v = cli.certify(records, task, z=3.0)
print(f"mean {v.empirical_mean:.5f} +/- {v.std_err:.5f}  bound {v.bound.value}  "
      f"classical {v.classical_baseline:.5f}  -> {v.verdict}")

# a device claiming perfect fidelity is flagged
ones = [cli.ExperimentRecord(r.alpha_re, r.alpha_im, 1.0, r.n_trials) for r in records]
print("all-ones dataset ->", cli.certify(ones, task).verdict)
