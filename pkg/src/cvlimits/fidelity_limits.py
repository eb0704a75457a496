"""
Quantum-limit fidelities for amplification, attenuation and phase conjugation,
together with the channels that attain them and the witness-operator bound
chain that proves them.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import gaussian_core as gc
from .channels import ChannelSpec, TaskSpec, average_fidelity_closed
from .exceptions import CVLimitsError, DomainError, UsageError

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class Branch(str, Enum):
    NONTRIVIAL = "nontrivial"
    SATURATED_AT_ONE = "saturated_at_one"


class Attainability(str, Enum):
    PROVEN_TIGHT = "proven_tight"
    TIGHTNESS_UNKNOWN = "tightness_unknown"


@dataclass(frozen=True)
class BoundResult:
    """Upper limit on the average fidelity of any physical channel.

    ``attained_by`` is set only when that channel reaches ``value`` exactly.
    ``best_known`` holds the best Gaussian-amplifier value where tightness is
    unknown.
    """

    value: float
    branch: Branch
    attained_by: ChannelSpec | None
    attainability: Attainability
    best_known: float | None = None


@dataclass(frozen=True)
class WitnessParams:
    """Auxiliary parameters ``(s, kappa, xi)`` of the witness operator chain."""

    s: float
    kappa: float
    xi: float


def _check_positive(**kw):
    for name, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be positive, got {v}")


def _check_lambda(lam):
    if not (np.isfinite(lam) and lam >= 0):
        raise DomainError(f"prior inverse width must be >= 0, got {lam}")


def scale_task(task):
    """Canonical unit-input form ``(1, eta/N, lam/N)`` of a task."""
    n = task.n_in
    return TaskSpec(1.0, task.eta / n, task.lam / n, task.conjugate)


def unit_target(task):
    """Unit-target form ``(N/eta, 1, lam/eta)`` of a task."""
    e = task.eta
    return TaskSpec(task.n_in / e, 1.0, task.lam / e, task.conjugate)


def best_gaussian_amplifier(eta, lam):
    """Gain maximising the amplifier fidelity on ``(1, eta, lam)`` and that fidelity.

    The optimum over ``g >= 1`` is ``g* = max(1, eta / (1 + lam)^2)``.
    ``lam = 0`` is taken as the flat-prior limit.
    """
    _check_positive(eta=eta)
    _check_lambda(lam)
    g = max(1.0, eta / (1.0 + lam) ** 2)
    if lam == 0:
        return g, (1.0 / g if g == eta else 0.0)
    return g, float(lam / (lam * g + (np.sqrt(g) - np.sqrt(eta)) ** 2))


def amplification_bound(eta, lam):
    """Quantum limit for ``|a> -> |sqrt(eta) a>``.

    ``(1 + lam) / eta`` when ``eta >= 1 + lam``, otherwise 1. The amplifier with
    ``g = eta / (1 + lam)^2`` attains the value when ``eta >= (1 + lam)^2``;
    for ``eta <= 1`` the attenuator with ``t = eta`` gives fidelity 1.

    Between ``1 + lam`` and ``(1 + lam)^2`` tightness is reported as unknown;
    ``best_known`` is the unit-gain value, which ``witness_bound_optimize``
    reproduces numerically there.
    """
    _check_positive(eta=eta)
    _check_lambda(lam)
    if eta <= 1.0:
        chan = ChannelSpec.identity() if eta == 1.0 else ChannelSpec.attenuator(eta)
        return BoundResult(1.0, Branch.SATURATED_AT_ONE, chan, Attainability.PROVEN_TIGHT)
    if eta >= 1.0 + lam:
        value, branch = (1.0 + lam) / eta, Branch.NONTRIVIAL
    else:
        value, branch = 1.0, Branch.SATURATED_AT_ONE
    if eta >= (1.0 + lam) ** 2:
        return BoundResult(value, branch, ChannelSpec.amplifier(eta / (1.0 + lam) ** 2),
                           Attainability.PROVEN_TIGHT)
    _, best = best_gaussian_amplifier(eta, lam)
    return BoundResult(value, branch, None, Attainability.TIGHTNESS_UNKNOWN, best_known=best)


def conjugation_bound(n_in, lam):
    """Quantum limit ``(N + lam)/(N + lam + 1)`` for ``|sqrt(N) a> -> |a*>``.

    Reached by the measure-and-prepare conjugator with ``c = sqrt(N)/(N + lam)``.
    """
    _check_positive(n_in=n_in)
    _check_lambda(lam)
    x = n_in + lam
    return BoundResult(x / (x + 1.0), Branch.NONTRIVIAL,
                       ChannelSpec.mp_conjugator(np.sqrt(n_in) / x), Attainability.PROVEN_TIGHT)


def attenuation_bound(task):
    """Unit quantum limit for tasks with ``eta <= N``, reached by ``attenuator(eta/N)``."""
    ratio = task.eta / task.n_in
    if task.conjugate:
        raise UsageError("attenuation_bound applies to non-conjugating tasks")
    if ratio > 1.0:
        raise UsageError(f"eta/N = {ratio} > 1 is an amplification task; use amplification_bound")
    chan = ChannelSpec.identity() if ratio == 1.0 else ChannelSpec.attenuator(ratio)
    return BoundResult(1.0, Branch.SATURATED_AT_ONE, chan, Attainability.PROVEN_TIGHT)


def task_bound(task):
    """Quantum limit of an arbitrary task, routed by its kind."""
    if task.conjugate:
        t = unit_target(task)
        return conjugation_bound(t.n_in, t.lam)
    if task.eta <= task.n_in:
        return attenuation_bound(task)
    t = scale_task(task)
    return amplification_bound(t.eta, t.lam)


def task_kind(task):
    if task.conjugate:
        return "conjugation"
    return "attenuation" if task.eta <= task.n_in else "amplification"


def best_mp_direct(task):
    """Best non-conjugating measure-and-prepare device ``(c*, fidelity)``.

    Minimising ``lam (1 + c^2) + (sqrt(eta) - c sqrt(N))^2`` gives
    ``c* = sqrt(N eta) / (lam + N)``. No optimality over all classical devices is
    claimed.
    """
    if task.conjugate:
        raise UsageError("best_mp_direct applies to non-conjugating tasks")
    c = np.sqrt(task.n_in * task.eta) / (task.lam + task.n_in)
    return c, average_fidelity_closed(ChannelSpec.mp_direct(c), task)


def classical_baseline(task):
    """Fidelity of the best measure-and-prepare device of the matching kind."""
    if task.conjugate:
        return task_bound(task).value
    return best_mp_direct(task)[1]


def witness_params(task, xi):
    """``(s, kappa, xi)`` tied to a unit-target task by ``lam = s + (1 - xi^2) kappa^2`` and ``sqrt(N) = kappa xi``.

    Raises
    ------
    DomainError
        If ``xi`` violates ``s >= 0`` (``xi^2 >= N/(N + lam)``), ``xi < 1``, or,
        for non-conjugating tasks, ``kappa <= 1`` (``xi^2 >= N``).
    """
    t = unit_target(task)
    N, lam = t.n_in, t.lam
    if not 0 < xi < 1:
        raise DomainError(f"xi must lie in (0, 1), got {xi}")
    kappa = np.sqrt(N) / xi
    s = lam - (1.0 - xi**2) * kappa**2
    if s < -1e-12 * max(1.0, lam):
        raise DomainError(f"xi^2 = {xi**2} violates s >= 0 (needs xi^2 >= N/(N+lam) = {N / (N + lam)})")
    if not task.conjugate and kappa > 1.0 + 1e-12:
        raise DomainError(f"xi^2 = {xi**2} violates kappa <= 1 (needs xi^2 >= N = {N})")
    return WitnessParams(max(s, 0.0), float(kappa), float(xi))


def witness_bound(task, xi, route="closed"):
    """Fidelity bound ``lam / (s (1 - xi^2)) * ||M||`` at witness parameter ``xi``.

    ``route="closed"`` uses the norm expressions with ``s`` cancelled, which stay
    finite on the boundary ``s = 0``:

        non-conjugating: 2 lam / ((1 - xi^2)(N + lam + 1 + sqrt((N + lam + 1)^2 - 4 N / xi^2)))
        conjugating:     lam / ((1 - xi^2)(s + 1 + kappa^2))

    ``route="covariance"`` computes ``||M||`` from the symplectic eigenvalues of
    the mixture covariance and needs ``s > 0``.
    """
    t = unit_target(task)
    N, lam = t.n_in, t.lam
    p = witness_params(task, xi)
    one_minus = 1.0 - xi**2
    if route == "covariance":
        if p.s <= 0:
            raise DomainError("the covariance route needs s > 0")
        spec = gc.GaussianMixtureSpec(p.s, p.kappa, conjugate_mode_b=not task.conjugate)
        return lam / (p.s * one_minus) * gc.mixture_max_eigenvalue(spec)
    if route != "closed":
        raise UsageError(f"unknown route {route!r}")
    if task.conjugate:
        return lam / (one_minus * (p.s + 1.0 + p.kappa**2))
    x = N + lam + 1.0
    disc = x**2 - 4.0 * N / xi**2
    return 2.0 * lam / (one_minus * (x + np.sqrt(max(disc, 0.0))))


def feasible_xi_interval(task):
    t = unit_target(task)
    N, lam = t.n_in, t.lam
    lo2 = N / (N + lam)
    if not task.conjugate:
        lo2 = max(lo2, N)
    if lo2 >= 1.0:
        raise DomainError("no feasible witness parameter: the task is not an amplification or conjugation task")
    return np.sqrt(lo2), 1.0


def _golden_section(f, a, b, tol=1e-14):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def witness_bound_optimize(task, grid=256):
    """Minimise ``witness_bound`` over the feasible ``xi``: coarse grid, then golden section.

    Returns ``(xi_star, value)``.
    """
    if grid < 64:
        raise UsageError(f"grid must be >= 64, got {grid}")
    lo, hi = feasible_xi_interval(task)
    hi = lo + (hi - lo) * (1.0 - 1e-9)
    xs = np.linspace(lo, hi, grid)

    def f(x):
        return witness_bound(task, min(max(x, lo), hi))

    vals = np.array([f(x) for x in xs])
    if not np.all(np.isfinite(vals)):
        raise CVLimitsError("witness bound is not finite on the feasible grid")
    i = int(np.argmin(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    x, v = _golden_section(f, a, b)
    # a boundary minimum is returned exactly at the endpoint
    for end in (lo, hi):
        fe = f(end)
        if fe <= v:
            x, v = end, fe
    return float(x), float(v)
