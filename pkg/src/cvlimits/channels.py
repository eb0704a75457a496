"""
Device models and their average fidelities on Gaussian-distributed coherent tasks.

A task maps inputs ``|sqrt(N) a>`` to targets ``|sqrt(eta) a>`` (or
``|sqrt(eta) a*>`` for conjugating tasks) with ``a`` drawn from
``p_lam(a) = (lam/pi) exp(-lam |a|^2)``.

Every channel here sends a coherent input to a displaced thermal state with
mean ``gain * a`` (or ``gain * a*``) and occupation ``nbar``, which yields the
closed forms. The Fock-space routes rebuild the outputs from Kraus/Stinespring
and measure-and-prepare constructions instead.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, roots_hermite, roots_laguerre

from . import fock_numerics as fn
from .exceptions import DomainError, TruncationError, UsageError

AMPLIFIER = "amplifier"
ATTENUATOR = "attenuator"
MP_CONJUGATOR = "mp_conjugator"
MP_DIRECT = "mp_direct"
IDENTITY = "identity"
KINDS = (AMPLIFIER, ATTENUATOR, MP_CONJUGATOR, MP_DIRECT, IDENTITY)

MC_BLOCK = 1 << 16


@dataclass(frozen=True)
class ChannelSpec:
    """A device: ``kind`` plus its single parameter.

    ``param`` is the gain ``g >= 1`` (amplifier), transmissivity ``t`` in
    [0, 1] (attenuator), or re-preparation scale ``c >= 0`` (measure-and-prepare
    kinds). It is ignored for the identity.
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        p = self.param
        if self.kind not in KINDS:
            raise UsageError(f"unknown channel kind {self.kind!r}")
        if not np.isfinite(p):
            raise DomainError(f"channel parameter must be finite, got {p}")
        if self.kind == AMPLIFIER and p < 1:
            raise DomainError(f"amplifier gain must be >= 1, got {p}")
        if self.kind == ATTENUATOR and not 0 <= p <= 1:
            raise DomainError(f"attenuator transmissivity must lie in [0, 1], got {p}")
        if self.kind in (MP_CONJUGATOR, MP_DIRECT) and p < 0:
            raise DomainError(f"re-preparation scale must be >= 0, got {p}")

    @classmethod
    def amplifier(cls, g):
        return cls(AMPLIFIER, float(g))

    @classmethod
    def attenuator(cls, t):
        return cls(ATTENUATOR, float(t))

    @classmethod
    def mp_conjugator(cls, c):
        return cls(MP_CONJUGATOR, float(c))

    @classmethod
    def mp_direct(cls, c):
        return cls(MP_DIRECT, float(c))

    @classmethod
    def identity(cls):
        return cls(IDENTITY, 1.0)

    @property
    def conjugating(self):
        return self.kind == MP_CONJUGATOR

    def __str__(self):
        if self.kind == IDENTITY:
            return IDENTITY
        return f"{self.kind}({self.param:.6g})"


@dataclass(frozen=True)
class TaskSpec:
    """Transformation task ``|sqrt(n_in) a> -> |sqrt(eta) a>`` under the prior ``p_lam``."""

    n_in: float
    eta: float
    lam: float
    conjugate: bool = False

    def __post_init__(self):
        for name in ("n_in", "eta", "lam"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"task parameter {name} must be positive and finite, got {v}")


def check_compatible(chan, task):
    if chan.kind == MP_CONJUGATOR and not task.conjugate:
        raise UsageError("mp_conjugator is defined for conjugating tasks only")
    if chan.kind == MP_DIRECT and task.conjugate:
        raise UsageError("mp_direct is defined for non-conjugating tasks only")


def output_gaussian(chan, n_in):
    """``(gain, nbar)`` of the displaced thermal output for input ``|sqrt(n_in) a>``."""
    p = chan.param
    if chan.kind == AMPLIFIER:
        return np.sqrt(p * n_in), p - 1.0
    if chan.kind == ATTENUATOR:
        return np.sqrt(p * n_in), 0.0
    if chan.kind == IDENTITY:
        return np.sqrt(n_in), 0.0
    # heterodyne adds one unit of noise; re-preparation at scale c maps it to c^2
    return p * np.sqrt(n_in), p**2


def per_input_fidelity(chan, alpha, task):
    """Fidelity of the channel output on ``|sqrt(N) alpha>`` with the task target.

    Vectorised over ``alpha``.
    """
    check_compatible(chan, task)
    alpha = np.asarray(alpha, dtype=complex)
    gain, nbar = output_gaussian(chan, task.n_in)
    mean = gain * (alpha.conj() if chan.conjugating else alpha)
    target = np.sqrt(task.eta) * (alpha.conj() if task.conjugate else alpha)
    return np.exp(-np.abs(target - mean) ** 2 / (1.0 + nbar)) / (1.0 + nbar)


def average_fidelity_closed(chan, task):
    """Exact prior average of ``per_input_fidelity``.

    Matched phase (channel and task both conjugating or both not)::

        lam / (lam (1 + nbar) + (sqrt(eta) - gain)^2)

    Mismatched phase: ``lam / ((1 + nbar) sqrt(A^2 - B^2))`` with
    ``A = lam + (eta + gain^2)/(1 + nbar)`` and ``B = 2 gain sqrt(eta)/(1 + nbar)``.
    """
    check_compatible(chan, task)
    gain, nbar = output_gaussian(chan, task.n_in)
    lam, eta = task.lam, task.eta
    if chan.conjugating == task.conjugate:
        return lam / (lam * (1.0 + nbar) + (np.sqrt(eta) - gain) ** 2)
    A = lam + (eta + gain**2) / (1.0 + nbar)
    B = 2.0 * gain * np.sqrt(eta) / (1.0 + nbar)
    # A^2 - B^2 = (A - B)(A + B) avoids cancellation
    return lam / ((1.0 + nbar) * np.sqrt((A - B) * (A + B)))


def prior_average(func, lam, radial_nodes=80, angular_nodes=32, node_cut=0.0):
    """Average ``func(alpha)`` over ``p_lam`` by Gauss-Laguerre x trapezoid quadrature.

    Along each direction the Laguerre weight ``exp(-sigma u)``, ``u = |alpha|^2``,
    uses the decay rate ``sigma`` of ``p_lam * func`` measured from two probe
    values, so integrands that decay exponentially in ``u`` are integrated
    exactly. ``func`` takes a 1-d complex array. Nodes whose weighted
    contribution bound is below ``node_cut`` are skipped.
    """
    t, w = roots_laguerre(radial_nodes)
    phis = 2 * np.pi * np.arange(angular_nodes) / angular_nodes
    f0 = float(func(np.array([0j]))[0])
    total = 0.0
    for phi in phis:
        direction = np.exp(1j * phi)
        u1 = 1.0 / lam
        while True:
            f1 = float(func(np.array([np.sqrt(u1) * direction]))[0])
            if f1 > 0 and f0 > 0 and f1 > 1e-200:
                rate = max(0.0, np.log(f0 / f1) / u1)
                break
            u1 /= 4
            if u1 < 1e-12:
                rate = 0.0
                break
        sigma = lam + rate
        log_wt = np.log(np.where(w > 0, w, np.finfo(float).tiny)) + (1.0 - lam / sigma) * t
        coeff = np.exp(log_wt) * lam / sigma
        # func <= 1 times the measured decay bounds a node's contribution by w * lam / sigma
        use = w * lam / sigma >= node_cut
        u = t[use] / sigma
        vals = np.asarray(func(np.sqrt(u) * direction), dtype=float)
        total += float(np.sum(coeff[use] * vals))
    return total / angular_nodes


def _angular_nodes(chan, task):
    """Trapezoid node count resolving the angular peak of a phase-mismatched integrand.

    At ``|alpha|^2 = u`` the integrand varies in angle like ``exp(b u cos 2 phi)``;
    ``u`` is effectively bounded by ``40 / sigma`` with ``sigma`` the slowest radial
    decay, and ``m`` nodes resolve a peak of strength ``k`` once ``m^2 >> k``.
    """
    gain, nbar = output_gaussian(chan, task.n_in)
    b = 2.0 * gain * np.sqrt(task.eta) / (1.0 + nbar)
    sigma = task.lam + (np.sqrt(task.eta) - gain) ** 2 / (1.0 + nbar)
    need = 2.0 * np.sqrt(60.0 * b * 40.0 / sigma)
    return int(min(2**14, max(256, 2 ** np.ceil(np.log2(max(need, 1.0))))))


def average_fidelity_quadrature(chan, task, radial_nodes=80, angular_nodes=None):
    """Numerical prior average of ``per_input_fidelity``.

    With phases matched the integrand depends on ``|alpha|`` only and 32 angles
    suffice; otherwise it peaks sharply in angle at large ``|alpha|`` and the
    default node count is sized to the peak.
    """
    if radial_nodes < 8:
        raise UsageError(f"radial_nodes must be >= 8, got {radial_nodes}")
    check_compatible(chan, task)
    if angular_nodes is None:
        angular_nodes = 32 if chan.conjugating == task.conjugate else _angular_nodes(chan, task)
    return prior_average(lambda a: per_input_fidelity(chan, a, task), task.lam,
                         radial_nodes, angular_nodes)


def sample_prior(rng, lam, size):
    """Draw ``alpha`` from ``p_lam``: complex Gaussian, variance ``1/(2 lam)`` per component."""
    z = rng.standard_normal((2, size))
    return (z[0] + 1j * z[1]) / np.sqrt(2.0 * lam)


def _mc_block(chan, task, seq, size):
    rng = np.random.default_rng(seq)
    f = per_input_fidelity(chan, sample_prior(rng, task.lam, size), task)
    return f.sum(), np.sum(f * f), size


def average_fidelity_mc(chan, task, samples, seed, workers=1):
    """Monte Carlo estimate ``(mean, std_err)`` of the average fidelity.

    Samples are generated in fixed blocks of ``MC_BLOCK`` draws, each from its own
    PCG64 stream spawned from ``SeedSequence(seed)``, so the result does not
    depend on ``workers``.
    """
    if samples < 1000:
        raise UsageError(f"Monte Carlo needs at least 1000 samples, got {samples}")
    check_compatible(chan, task)
    n_blocks = -(-samples // MC_BLOCK)
    seqs = np.random.SeedSequence(seed).spawn(n_blocks)
    sizes = [MC_BLOCK] * (n_blocks - 1) + [samples - MC_BLOCK * (n_blocks - 1)]
    jobs = list(zip(seqs, sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _mc_block(chan, task, *j), jobs))
    else:
        parts = [_mc_block(chan, task, *j) for j in jobs]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / samples
    var = max(0.0, (s2 - samples * mean**2) / (samples - 1))
    return float(mean), float(np.sqrt(var / samples))


def mp_output_state(chan, alpha_in, trunc=fn.TruncationSpec(), gh_nodes=None):
    """Output of a measure-and-prepare channel on the coherent input ``|alpha_in>``.

    Heterodyne outcome ``b`` has density ``exp(-|b - alpha_in|^2)/pi``; the device
    then prepares ``|c b*>`` (conjugator) or ``|c b>`` (direct). The outcome
    integral is done by tensor Gauss-Hermite quadrature after completing the
    square with the ``exp(-c^2 |b|^2)`` factor of the prepared projector, which
    is exact once ``gh_nodes >= dim``.

    Raises
    ------
    TruncationError
        If more than 1e-4 of the trace falls outside the truncation.
    """
    if chan.kind not in (MP_CONJUGATOR, MP_DIRECT):
        raise UsageError(f"mp_output_state needs a measure-and-prepare channel, got {chan.kind}")
    d = trunc.dim
    c = chan.param
    a = complex(alpha_in)
    if c == 0:
        out = np.zeros((d, d), dtype=complex)
        out[0, 0] = 1.0
        return fn.FockOperator(out)
    k = gh_nodes or d + 4
    x, wx = roots_hermite(k)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(wx, wx).ravel()
    b = a / (1 + c**2) + (X + 1j * Y).ravel() / np.sqrt(1 + c**2)
    prepared = c * (b.conj() if chan.kind == MP_CONJUGATOR else b)
    n = np.arange(d)
    log_fact = 0.5 * gammaln(n + 1.0)
    V = np.exp(n[None, :] * np.log(np.abs(prepared))[:, None] - log_fact[None, :]
               + 1j * n[None, :] * np.angle(prepared)[:, None])
    pref = np.exp(-c**2 * abs(a) ** 2 / (1 + c**2)) / (np.pi * (1 + c**2))
    rho = pref * (V.T * W) @ V.conj()
    rho = 0.5 * (rho + rho.conj().T)
    out = fn.FockOperator(rho)
    deficit = 1.0 - out.trace()
    if deficit > 1e-4:
        raise TruncationError(f"measure-and-prepare output does not fit in dim={d}", deficit)
    return out


def output_state_fock(chan, alpha_in, trunc=fn.TruncationSpec()):
    """Fock-space output of ``chan`` on ``|alpha_in>`` built from its physical construction."""
    if chan.kind in (MP_CONJUGATOR, MP_DIRECT):
        return mp_output_state(chan, alpha_in, trunc)
    rho = fn.coherent_vector(alpha_in, trunc).projector()
    if chan.kind == AMPLIFIER:
        return fn.amplifier_apply(rho, chan.param)
    if chan.kind == ATTENUATOR:
        return fn.attenuator_apply(rho, chan.param)
    return rho


def fock_fidelity(chan, alpha, task, trunc=fn.TruncationSpec()):
    """``per_input_fidelity`` recomputed in truncated Fock space.

    For the amplifier the fidelity is summed over Kraus branches,
    ``sum_k |<target| A_k |input>|^2``, which avoids forming the output matrix.
    Output mass pushed above the truncation pairs only with target levels
    ``>= dim``, so the tail checks on input and target bound the error.
    """
    check_compatible(chan, task)
    target = np.sqrt(task.eta) * (np.conj(alpha) if task.conjugate else alpha)
    v = fn.coherent_vector(target, trunc)
    if chan.kind == AMPLIFIER:
        psi = fn.coherent_vector(np.sqrt(task.n_in) * alpha, trunc)
        branches = fn.amplifier_branches(psi, chan.param)
        return float(np.sum(np.abs(branches @ v.amplitudes.conj()) ** 2))
    out = output_state_fock(chan, np.sqrt(task.n_in) * alpha, trunc)
    return fn.pure_state_fidelity(v, out)


def average_fidelity_fock(chan, task, trunc=fn.TruncationSpec(), radial_nodes=40,
                          angular_nodes=4, node_cut=1e-12):
    """Prior average of ``fock_fidelity``; nodes below ``node_cut`` are skipped."""
    check_compatible(chan, task)

    def f(alphas):
        return np.array([fock_fidelity(chan, a, task, trunc) for a in alphas])

    return prior_average(f, task.lam, radial_nodes, angular_nodes, node_cut)


def amplifier_average_fidelity_displaced(g, task, trunc=fn.TruncationSpec(), radial_nodes=40,
                                         node_cut=1e-12):
    """Amplifier average fidelity in the frame co-moving with the output mean.

    By displacement covariance ``A_g(D(b) rho D(b)^dag) = D(sqrt(g) b) A_g(rho) D(sqrt(g) b)^dag``,
    the fidelity of ``A_g(|sqrt(N) a><sqrt(N) a|)`` with ``|sqrt(eta) a>`` equals
    that of the Fock-simulated ``A_g(|0><0|)`` with ``|(sqrt(eta) - sqrt(g N)) a>``.
    The co-moving frame keeps photon numbers small for flat priors where the
    direct route would need a very large truncation.
    """
    if task.conjugate:
        raise UsageError("the co-moving frame applies to non-conjugating tasks")
    noise = fn.amplifier_apply(fn.coherent_vector(0, trunc).projector(), g)
    shift = np.sqrt(task.eta) - np.sqrt(g * task.n_in)

    def f(alphas):
        out = []
        for a in alphas:
            v = fn.FockVector(fn.coherent_amplitudes(shift * a, trunc.dim))
            out.append(fn.pure_state_fidelity(v, noise))
        return np.array(out)

    return prior_average(f, task.lam, radial_nodes, angular_nodes=1, node_cut=node_cut)
