"""
Covariance-matrix algebra for centred two-mode Gaussian operators.

Quadratures are ordered ``(x_A, p_A, x_B, p_B)`` with ``[x, p] = i`` and the
vacuum covariance normalised to the identity. The symplectic form is
``Omega = diag(J, J)`` with ``J = [[0, 1], [-1, 0]]``.

The two operator families handled here are coherent-state mixtures

    M  = int p_s(a) |a><a| (x) |k a*><k a*| d^2a      (conjugate_mode_b=True)
    M* = int p_s(a) |a><a| (x) |k a ><k a | d^2a      (conjugate_mode_b=False)

with the Gaussian weight ``p_s(a) = (s/pi) exp(-s |a|^2)``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, UsageError

I2 = np.eye(2)
Z2 = np.diag([1.0, -1.0])

PHYSICAL_SLACK = 1e-10


def symplectic_form(modes=2):
    """Block-diagonal symplectic form for ``modes`` bosonic modes."""
    return np.kron(np.eye(modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


OMEGA = symplectic_form(2)


def is_symplectic(S, atol=1e-12):
    S = np.asarray(S, dtype=float)
    omega = symplectic_form(S.shape[0] // 2)
    return bool(np.allclose(S @ omega @ S.T, omega, rtol=0.0, atol=atol))


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Parameters of the mixtures M (``conjugate_mode_b=True``) and M*.

    Attributes
    ----------
    s : float
        Inverse width of the mixing Gaussian, strictly positive.
    kappa : float
        Amplitude scale of the mode-B coherent state, non-negative.
    conjugate_mode_b : bool
        True selects ``|kappa a*>`` in mode B, False selects ``|kappa a>``.
    """

    s: float
    kappa: float
    conjugate_mode_b: bool = True

    def __post_init__(self):
        if not np.isfinite(self.s) or self.s <= 0:
            raise DomainError(f"mixture inverse width must be positive, got s={self.s}")
        if not np.isfinite(self.kappa) or self.kappa < 0:
            raise DomainError(f"mixture amplitude scale must be >= 0, got kappa={self.kappa}")


@dataclass(frozen=True)
class ThermalDecomposition:
    """Normal-mode form of a two-mode mixture: ``S gamma S^T = diag(nu+, nu+, nu-, nu-)``."""

    nu_plus: float
    nu_minus: float
    nbar_plus: float
    nbar_minus: float
    diagonalizer: np.ndarray


def validate_covariance(gamma, atol=1e-12):
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (4, 4):
        raise DomainError(f"expected a 4x4 covariance matrix, got shape {gamma.shape}")
    scale = max(1.0, float(np.max(np.abs(gamma))))
    if np.max(np.abs(gamma - gamma.T)) > atol * scale:
        raise DomainError("covariance matrix is not symmetric")
    try:
        np.linalg.cholesky(gamma)
    except np.linalg.LinAlgError:
        raise DomainError("covariance matrix is not positive definite") from None
    return gamma


def mixture_covariance(spec):
    """Covariance matrix of M or M*.

    Returns ``I_4 + (2/s) [[I, k B], [k B, k^2 I]]`` where ``B = Z`` for M
    and ``B = I`` for M*.
    """
    B = Z2 if spec.conjugate_mode_b else I2
    k = spec.kappa
    block = np.block([[I2, k * B], [k * B, k**2 * I2]])
    return np.eye(4) + (2.0 / spec.s) * block


def two_mode_squeezer(r):
    """Symplectic matrix of ``exp(r (a^dag b^dag - a b))`` acting on quadratures."""
    if not np.isfinite(r):
        raise DomainError(f"squeezing parameter must be finite, got r={r}")
    ch, sh = np.cosh(r), np.sinh(r)
    return np.block([[ch * I2, sh * Z2], [sh * Z2, ch * I2]])


def beamsplitter(theta):
    """Passive symplectic rotation mixing modes A and B by angle ``theta``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.block([[c * I2, s * I2], [-s * I2, c * I2]])


MODE_SWAP = np.block([[np.zeros((2, 2)), I2], [I2, np.zeros((2, 2))]])


def diagonalizing_squeeze_param(spec):
    """Squeezing ``r`` with ``tanh 2r = 2 kappa / (1 + s + kappa^2)``.

    ``two_mode_squeezer(-r)`` brings the covariance of M to diagonal form.
    Only M is diagonalised by a squeezer; M* needs a beamsplitter.
    """
    if not spec.conjugate_mode_b:
        raise UsageError("M* is diagonalised by a beamsplitter, not a two-mode squeezer")
    k = spec.kappa
    return 0.5 * np.arctanh(2.0 * k / (1.0 + spec.s + k**2))


def diagonalizing_beamsplitter_angle(spec):
    """Beamsplitter angle bringing the covariance of M* to diagonal form.

    The x and p blocks of the covariance are identical, so the rotation is read
    off the leading eigenvector of the 2x2 x-quadrature block.
    """
    if spec.conjugate_mode_b:
        raise UsageError("M is diagonalised by a two-mode squeezer, not a beamsplitter")
    gamma = mixture_covariance(spec)
    xblock = gamma[np.ix_([0, 2], [0, 2])]
    _, vecs = np.linalg.eigh(xblock)
    v = vecs[:, -1]
    if v[0] < 0:
        v = -v
    # beamsplitter(theta) maps (x_A, x_B) -> (c x_A + s x_B, -s x_A + c x_B)
    return float(np.arctan2(v[1], v[0]))


def symplectic_eigenvalues(gamma):
    """Symplectic eigenvalues ``(nu_plus, nu_minus)`` in descending order.

    Computed as the moduli of the eigenvalues of ``Omega @ gamma``, which come in
    pairs ``+/- i nu``.

    Raises
    ------
    DomainError
        If ``gamma`` is not symmetric positive definite.
    """
    gamma = validate_covariance(gamma)
    moduli = np.sort(np.abs(np.linalg.eigvals(OMEGA @ gamma)))[::-1]
    return float(moduli[0]), float(moduli[2])


def closed_form_symplectic_eigenvalues(spec):
    """Symplectic eigenvalues of M or M* from their analytic expressions, descending."""
    s, k = spec.s, spec.kappa
    if spec.conjugate_mode_b:
        root = np.sqrt((1.0 + s + k**2) ** 2 - 4.0 * k**2)
        pair = ((root + (1.0 - k**2)) / s, (root - (1.0 - k**2)) / s)
    else:
        pair = (1.0, 1.0 + 2.0 * (1.0 + k**2) / s)
    return max(pair), min(pair)


def gaussian_max_eigenvalue(nu_plus, nu_minus):
    """Largest eigenvalue ``4 / ((nu_+ + 1)(nu_- + 1))`` of a centred two-mode Gaussian state."""
    for nu in (nu_plus, nu_minus):
        if not nu >= 1.0 - PHYSICAL_SLACK:
            raise DomainError(f"symplectic eigenvalue below 1: {nu}")
    return 4.0 / ((nu_plus + 1.0) * (nu_minus + 1.0))


def thermal_decomposition(spec):
    """Symplectic eigenvalues, thermal occupations and diagonaliser of M or M*."""
    gamma = mixture_covariance(spec)
    if spec.conjugate_mode_b:
        S = two_mode_squeezer(-diagonalizing_squeeze_param(spec))
    else:
        S = beamsplitter(diagonalizing_beamsplitter_angle(spec))
    diag = np.diag(S @ gamma @ S.T)
    if diag[0] < diag[2]:
        S = MODE_SWAP @ S
        diag = diag[[2, 3, 0, 1]]
    nu_plus, nu_minus = float(diag[0]), float(diag[2])
    return ThermalDecomposition(
        nu_plus=nu_plus,
        nu_minus=nu_minus,
        nbar_plus=(nu_plus - 1.0) / 2.0,
        nbar_minus=(nu_minus - 1.0) / 2.0,
        diagonalizer=S,
    )


def mixture_max_eigenvalue(spec):
    """Operator norm of M or M* via the generic symplectic route."""
    return gaussian_max_eigenvalue(*symplectic_eigenvalues(mixture_covariance(spec)))
