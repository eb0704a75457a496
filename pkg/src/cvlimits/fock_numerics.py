"""
Dense truncated Fock-space numerics used as a brute-force oracle.

Everything here is deterministic and works from number-basis series rather
than from covariance matrices, so it can check the Gaussian closed forms
independently. Two-mode objects use the index ``m * dim + n`` for ``|m>_A |n>_B``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln, logsumexp, roots_laguerre, xlogy

from .exceptions import DomainError, TruncationError, UsageError

DEFAULT_DIM = 60
DEFAULT_TAIL_TOL = 1e-8
DEFAULT_RADIAL_NODES = 80
HERMITIAN_ATOL = 1e-12


@dataclass(frozen=True)
class TruncationSpec:
    """Fock levels ``0 .. dim-1`` per mode and the tolerated discarded mass."""

    dim: int = DEFAULT_DIM
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise DomainError(f"truncation dim must be an integer >= 2, got {self.dim}")
        if not 0 < self.tail_tol < 1:
            raise DomainError(f"tail_tol must lie in (0, 1), got {self.tail_tol}")


@dataclass(frozen=True, eq=False)
class FockVector:
    amplitudes: np.ndarray
    modes: int = 1

    @property
    def dim(self):
        return round(len(self.amplitudes) ** (1.0 / self.modes))

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def projector(self):
        v = self.amplitudes
        return FockOperator(np.outer(v, v.conj()), modes=self.modes)


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense operator on one or two truncated modes.

    When ``hermitian`` is set the matrix is checked against its adjoint on
    construction (absolute tolerance 1e-12).
    """

    matrix: np.ndarray
    modes: int = 1
    hermitian: bool = True

    def __post_init__(self):
        A = self.matrix
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise UsageError(f"operator matrix must be square, got shape {A.shape}")
        if self.hermitian:
            dev = np.max(np.abs(A - A.conj().T)) if A.size else 0.0
            if dev > HERMITIAN_ATOL:
                raise UsageError(f"operator flagged Hermitian deviates from its adjoint by {dev:.2e}")

    @property
    def dim(self):
        return round(self.matrix.shape[0] ** (1.0 / self.modes))

    def trace(self):
        return float(np.real(np.trace(self.matrix)))


def _check_tail(what, deficit, trunc):
    if deficit > trunc.tail_tol:
        raise TruncationError(f"{what} does not fit in dim={trunc.dim}", deficit)


def coherent_amplitudes(alpha, dim):
    """Number-basis amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)``, ``n < dim``, unchecked."""
    n = np.arange(dim)
    if alpha == 0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    log_mod = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mod + 1j * n * np.angle(alpha))


def coherent_vector(alpha, trunc=TruncationSpec()):
    """Coherent state ``|alpha>`` in the truncated number basis.

    Raises
    ------
    TruncationError
        If the Poisson mass above ``dim - 1`` exceeds ``trunc.tail_tol``.
    """
    alpha = complex(alpha)
    _check_tail("coherent state", stats.poisson.sf(trunc.dim - 1, abs(alpha) ** 2), trunc)
    return FockVector(coherent_amplitudes(alpha, trunc.dim))


def two_mode_squeezed_vector(xi, trunc=TruncationSpec()):
    """``sqrt(1 - xi^2) sum_n xi^n |n>|n>``."""
    if not 0 <= xi < 1:
        raise DomainError(f"two-mode squeezing amplitude must satisfy 0 <= xi < 1, got {xi}")
    d = trunc.dim
    _check_tail("two-mode squeezed state", xi ** (2 * d), trunc)
    amps = np.zeros(d * d)
    n = np.arange(d)
    amps[n * d + n] = np.sqrt(1 - xi**2) * xi**n
    return FockVector(amps, modes=2)


def thermal_operator(nbar, trunc=TruncationSpec()):
    """Thermal state with mean photon number ``nbar``."""
    if not nbar >= 0:
        raise DomainError(f"mean photon number must be >= 0, got {nbar}")
    ratio = nbar / (1.0 + nbar)
    _check_tail("thermal state", ratio**trunc.dim, trunc)
    p = ratio ** np.arange(trunc.dim) / (1.0 + nbar)
    return FockOperator(np.diag(p))


def tensor(a, b):
    return FockOperator(np.kron(a.matrix, b.matrix), modes=a.modes + b.modes,
                        hermitian=a.hermitian and b.hermitian)


def partial_trace(op, keep=0):
    """Reduced single-mode operator of a two-mode operator (``keep`` = 0 for A, 1 for B)."""
    if op.modes != 2:
        raise UsageError("partial_trace needs a two-mode operator")
    d = op.dim
    t = op.matrix.reshape(d, d, d, d)
    red = np.einsum("ijkj->ik", t) if keep == 0 else np.einsum("ijil->jl", t)
    return FockOperator(red, hermitian=op.hermitian)


def _laguerre_moments(rate, kmax, radial_nodes):
    """``log int_0^inf exp(-rate u) u^k du`` for ``k = 0..kmax`` by Gauss-Laguerre."""
    t, w = roots_laguerre(radial_nodes)
    keep = w > 0
    t, w = t[keep], w[keep]
    k = np.arange(kmax + 1)[:, None]
    return logsumexp(np.log(w)[None, :] + k * np.log(t)[None, :], axis=1) - (k[:, 0] + 1) * np.log(rate)


def build_mixture_operator(spec, trunc=TruncationSpec(), radial_nodes=DEFAULT_RADIAL_NODES,
                           check_trace=True):
    """Fock matrix of M or M* from its defining coherent-state integral.

    In polar coordinates the angular integral keeps only entries
    ``<m, n| . |m', n'>`` with ``m - n = m' - n'`` (M) or ``m + n = m' + n'`` (M*);
    the surviving radial integrals ``int exp(-(s + 1 + k^2) u) u^j du`` are
    evaluated by Gauss-Laguerre quadrature.

    Raises
    ------
    TruncationError
        If ``check_trace`` and the truncated trace falls short of 1 by more than 1e-4.
    """
    if radial_nodes < 20:
        raise UsageError(f"radial_nodes must be >= 20, got {radial_nodes}")
    d = trunc.dim
    s, kap = spec.s, spec.kappa
    ar = np.arange(d)
    m, n, mp = (x.ravel() for x in np.meshgrid(ar, ar, ar, indexing="ij"))
    if spec.conjugate_mode_b:
        nq = mp - m + n
        power = m + nq
    else:
        nq = m + n - mp
        power = m + n
    ok = (nq >= 0) & (nq < d)
    if kap == 0:
        ok &= (n == 0) & (nq == 0)
    m, n, mp, nq, power = m[ok], n[ok], mp[ok], nq[ok], power[ok]

    log_moment = _laguerre_moments(s + 1.0 + kap**2, 2 * d - 2, radial_nodes)
    lg = gammaln(ar + 1.0)
    log_entry = np.log(s) + log_moment[power] - 0.5 * (lg[m] + lg[mp] + lg[n] + lg[nq])
    if kap > 0:
        log_entry += (n + nq) * np.log(kap)

    M = np.zeros((d * d, d * d))
    M[m * d + n, mp * d + nq] = np.exp(log_entry)
    # the entry formula is symmetric; enforce it bitwise
    M = 0.5 * (M + M.T)
    op = FockOperator(M, modes=2)
    deficit = 1.0 - op.trace()
    if check_trace and deficit > 1e-4:
        raise TruncationError(f"mixture operator (s={s}, kappa={kap}) does not fit in dim={d}", deficit)
    return op


def _blocks(A):
    """Index sets of the connected components of the sparsity graph of ``A``."""
    n_comp, labels = connected_components(csr_matrix(A != 0), directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    return np.split(order, splits)


def hermitian_eigenvalues(op):
    """All eigenvalues of a Hermitian operator, ascending.

    The matrix is split into the connected components of its sparsity pattern
    and each dense block is diagonalised separately.
    """
    if not op.hermitian:
        raise UsageError("eigenvalues requested for an operator not flagged Hermitian")
    A = op.matrix
    vals = [np.linalg.eigvalsh(A[np.ix_(idx, idx)]) for idx in _blocks(A)]
    return np.sort(np.concatenate(vals))


def hermitian_max_eigenvalue(op):
    """Operator norm ``max <u|A|u>`` over unit vectors."""
    return float(hermitian_eigenvalues(op)[-1])


def _check_loss(what, rho_in, out, max_loss):
    loss = rho_in.trace() - out.trace()
    if loss > max_loss:
        raise TruncationError(f"{what} output leaks out of dim={rho_in.dim}", loss)


def _amplifier_coefficients(g, d):
    """``c[n, k]`` with ``U_r |n>|0> = sum_k c[n, k] |n+k>|k>``, ``g = cosh^2 r``."""
    r = np.arccosh(np.sqrt(g))
    n = np.arange(d)[:, None]
    k = np.arange(d)[None, :]
    log_c = 0.5 * (gammaln(n + k + 1.0) - gammaln(n + 1.0) - gammaln(k + 1.0))
    log_c = log_c + xlogy(k, np.tanh(r)) - (n + 1) * np.log(np.cosh(r))
    return np.exp(log_c)


def amplifier_branches(vec, g):
    """Kraus branches ``A_k |psi>`` of the amplifier on a pure single-mode input.

    Row ``k`` of the returned array is the (unnormalised) output conditioned on
    ``k`` photons in the traced-out idler, truncated to the input dimension.
    """
    if vec.modes != 1:
        raise UsageError("amplifier_branches acts on single-mode vectors")
    if not g >= 1:
        raise DomainError(f"amplifier gain must be >= 1, got {g}")
    psi = vec.amplitudes
    d = psi.shape[0]
    if g == 1:
        return psi[None, :].astype(complex)
    c = _amplifier_coefficients(g, d)
    out = np.zeros((d, d), dtype=complex)
    for k in range(d):
        out[k, k:] = c[: d - k, k] * psi[: d - k]
    return out


def amplifier_apply(rho_in, g, max_loss=1e-4):
    """Quantum-limited phase-insensitive amplifier of gain ``g``.

    Uses the Stinespring form ``tr_B[U_r (rho (x) |0><0|) U_r^dag]`` with
    ``g = cosh^2 r`` and the exact action

        U_r |n>|0> = sum_k sqrt(C(n+k, k)) tanh^k r / cosh^(n+1) r |n+k>|k>,

    so the channel is ``sum_k A_k rho A_k^dag`` with ``A_k |n> = c_{n,k} |n+k>``.
    """
    if rho_in.modes != 1:
        raise UsageError("amplifier_apply acts on single-mode operators")
    if not g >= 1:
        raise DomainError(f"amplifier gain must be >= 1, got {g}")
    rho = rho_in.matrix
    d = rho.shape[0]
    if g == 1:
        return FockOperator(rho.copy())
    coeff = _amplifier_coefficients(g, d)
    out = np.zeros_like(rho, dtype=np.result_type(rho, float))
    for k in range(d):
        c = coeff[: d - k, k]
        out[k:, k:] += np.outer(c, c) * rho[: d - k, : d - k]
    result = FockOperator(out, hermitian=rho_in.hermitian)
    _check_loss("amplifier", rho_in, result, max_loss)
    return result


def attenuator_apply(rho_in, t, max_loss=1e-4):
    """Pure-loss channel of transmissivity ``t`` (vacuum environment).

    Kraus operators ``E_k |n> = sqrt(C(n, k)) t^((n-k)/2) (1-t)^(k/2) |n-k>``.
    """
    if rho_in.modes != 1:
        raise UsageError("attenuator_apply acts on single-mode operators")
    if not 0 <= t <= 1:
        raise DomainError(f"transmissivity must lie in [0, 1], got {t}")
    rho = rho_in.matrix
    d = rho.shape[0]
    if t == 1:
        return FockOperator(rho.copy())
    out = np.zeros_like(rho, dtype=np.result_type(rho, float))
    ar = np.arange(d)
    lg = gammaln(ar + 1.0)
    for k in range(d):
        n = ar[k:]
        if t == 0:
            c = np.where(n == k, 1.0, 0.0)
        else:
            log_c = 0.5 * (lg[n] - lg[k] - lg[n - k]) + 0.5 * (n - k) * np.log(t)
            log_c = log_c + (0.5 * k * np.log1p(-t) if k else 0.0)
            c = np.exp(log_c)
        out[: d - k, : d - k] += np.outer(c, c) * rho[k:, k:]
    result = FockOperator(out, hermitian=rho_in.hermitian)
    _check_loss("attenuator", rho_in, result, max_loss)
    return result


def pure_state_fidelity(vec, op):
    """``<v| rho |v>``."""
    v = vec.amplitudes
    if v.shape[0] != op.matrix.shape[0]:
        raise UsageError(f"dimension mismatch: vector {v.shape[0]} vs operator {op.matrix.shape[0]}")
    return float(np.real(np.vdot(v, op.matrix @ v)))
