import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvlimits import fock_numerics as fn
from cvlimits import gaussian_core as gc
from cvlimits.exceptions import DomainError, TruncationError, UsageError


def T(dim, tol=1e-8):
    return fn.TruncationSpec(dim, tol)


def mix(s, k, conj=True):
    return gc.GaussianMixtureSpec(s, k, conj)


@pytest.mark.parametrize("dim, tol", [(1, 1e-8), (2.5, 1e-8), (10, 0.0), (10, 1.0)])
def test_truncation_spec_validation(dim, tol):
    with pytest.raises(DomainError):
        fn.TruncationSpec(dim, tol)


class TestStates:
    def test_vacuum(self):
        v = fn.coherent_vector(0, T(10)).amplitudes
        assert v[0] == 1 and np.all(v[1:] == 0)

    def test_coherent_ground_amplitude(self):
        v = fn.coherent_vector(1.0, T(20))
        assert v.amplitudes[0] == pytest.approx(np.exp(-0.5), abs=1e-15)
        assert v.norm() == pytest.approx(1.0, abs=1e-8)

    def test_coherent_truncation_error_carries_deficit(self):
        with pytest.raises(TruncationError) as info:
            fn.coherent_vector(3.0, T(4))
        # Poisson(9) mass above n = 3
        assert info.value.deficit == pytest.approx(0.9787735, abs=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 3), st.floats(-np.pi, np.pi))
    def test_coherent_matches_displacement_series(self, r, phi):
        a = r * np.exp(1j * phi)
        v = fn.coherent_vector(a, T(60)).amplitudes
        # independent recursion c_{n+1} = a c_n / sqrt(n+1)
        ref = np.empty(60, dtype=complex)
        ref[0] = np.exp(-abs(a) ** 2 / 2)
        for n in range(59):
            ref[n + 1] = ref[n] * a / np.sqrt(n + 1)
        np.testing.assert_allclose(v, ref, atol=1e-13)

    def test_two_mode_squeezed(self):
        assert fn.two_mode_squeezed_vector(0.0, T(5)).amplitudes[0] == 1.0
        v = fn.two_mode_squeezed_vector(0.5, T(30))
        assert v.amplitudes[2 * 30 + 2] == pytest.approx(np.sqrt(0.75) * 0.25, abs=1e-15)
        assert v.dim == 30 and v.modes == 2
        with pytest.raises(TruncationError):
            fn.two_mode_squeezed_vector(0.9, T(10))
        with pytest.raises(DomainError):
            fn.two_mode_squeezed_vector(1.0, T(10))

    @pytest.mark.parametrize("xi", [0.1, 0.5, 0.8])
    def test_squeezed_reduced_state_is_thermal(self, xi):
        tr = T(60)
        proj = fn.two_mode_squeezed_vector(xi, tr).projector()
        ref = fn.thermal_operator(xi**2 / (1 - xi**2), tr).matrix
        for keep in (0, 1):
            assert np.max(np.abs(fn.partial_trace(proj, keep).matrix - ref)) <= 1e-8

    def test_squeezed_reduced_state_strong_squeezing(self):
        tr = T(200)
        amps = fn.two_mode_squeezed_vector(0.9, tr).amplitudes.reshape(200, 200)
        ref = fn.thermal_operator(0.81 / 0.19, tr).matrix
        assert np.max(np.abs(amps @ amps.conj().T - ref)) <= 1e-8

    def test_thermal_examples(self):
        vac = fn.thermal_operator(0.0, T(6)).matrix
        assert vac[0, 0] == 1 and np.count_nonzero(vac) == 1
        assert fn.hermitian_max_eigenvalue(fn.thermal_operator(0.5, T(60))) == pytest.approx(2 / 3, abs=1e-15)
        with pytest.raises(TruncationError):
            fn.thermal_operator(1.0, T(5))
        with pytest.raises(DomainError):
            fn.thermal_operator(-0.1, T(5))


class TestOperators:
    def test_hermitian_flag_enforced(self):
        with pytest.raises(UsageError):
            fn.FockOperator(np.array([[0, 1], [0, 0]], dtype=float))
        op = fn.FockOperator(np.array([[0, 1], [0, 0]], dtype=float), hermitian=False)
        with pytest.raises(UsageError):
            fn.hermitian_max_eigenvalue(op)

    def test_vacuum_projector_norm(self):
        assert fn.hermitian_max_eigenvalue(fn.coherent_vector(0, T(8)).projector()) == 1.0

    def test_block_eigensolve_matches_dense(self):
        op = fn.build_mixture_operator(mix(0.7, 0.6), T(20))
        np.testing.assert_allclose(fn.hermitian_eigenvalues(op), np.linalg.eigvalsh(op.matrix), atol=1e-13)

    def test_pure_state_fidelity_examples(self):
        tr = T(30)
        vac = fn.coherent_vector(0, tr)
        assert fn.pure_state_fidelity(vac, fn.thermal_operator(1.0, T(30, 1e-6))) == pytest.approx(0.5)
        b = fn.coherent_vector(1.0, tr)
        assert fn.pure_state_fidelity(b, b.projector()) == pytest.approx(1.0, abs=1e-12)
        assert fn.pure_state_fidelity(vac, b.projector()) == pytest.approx(np.exp(-1), abs=1e-12)
        with pytest.raises(UsageError):
            fn.pure_state_fidelity(fn.coherent_vector(0, T(10)), b.projector())


class TestMixtureOperator:
    def test_kappa_zero_factorizes(self):
        tr = T(40)
        op = fn.build_mixture_operator(mix(2.0, 0.0), tr)
        vac = fn.coherent_vector(0, tr).projector()
        ref = fn.tensor(fn.thermal_operator(0.5, tr), vac)
        assert np.max(np.abs(op.matrix - ref.matrix)) <= 1e-8

    @pytest.mark.parametrize(
        "args, value",
        [((1.0, 1.0, True), 0.3819660112501051), ((2.0, 1.0, False), 0.5), ((2.0, 0.5, True), 0.6306831231470184)],
    )
    def test_max_eigenvalue_examples(self, args, value):
        op = fn.build_mixture_operator(mix(*args), T(60))
        assert fn.hermitian_max_eigenvalue(op) == pytest.approx(value, abs=1e-6)

    def test_trace_deficit_raises(self):
        with pytest.raises(TruncationError):
            fn.build_mixture_operator(mix(0.1, 1.0), T(10))

    def test_rejects_few_nodes(self):
        with pytest.raises(UsageError):
            fn.build_mixture_operator(mix(1.0, 1.0), T(10), radial_nodes=10)

    @pytest.mark.parametrize("conj", [True, False])
    def test_matches_direct_phase_space_integral(self, conj):
        # entries from brute 2D quadrature over alpha of the defining integral
        s, k, d = 1.3, 0.6, 6
        tr = T(d, 0.5)
        op = fn.build_mixture_operator(mix(s, k, conj), tr, check_trace=False).matrix
        t, w = np.polynomial.laguerre.laggauss(120)
        phis = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        ref = np.zeros((d * d, d * d), dtype=complex)
        for u, wu in zip(t / s, w / s):
            for phi in phis:
                a = np.sqrt(u) * np.exp(1j * phi)
                va = fn.coherent_amplitudes(a, d)
                vb = fn.coherent_amplitudes(k * (np.conj(a) if conj else a), d)
                v = np.kron(va, vb)
                ref += (s * wu / 64) * np.outer(v, v.conj())
        # p_s d^2 alpha = (s/pi) e^{-s u} (du/2)(d phi) and (1/2pi) int d phi -> mean over phis
        np.testing.assert_allclose(op, ref.real, atol=1e-12)
        assert np.max(np.abs(ref.imag)) < 1e-12


GRID = [(s, k, True) for s in (0.5, 1.0, 2.0) for k in (0.0, 0.3, 0.7, 1.0)]
GRID += [(s, k, False) for s in (0.5, 1.0, 2.0) for k in (0.0, 0.3, 0.7, 1.0, 1.5)]


@pytest.mark.parametrize("s, k, conj", GRID)
def test_oracle_equivalence_and_positivity(s, k, conj):
    sp = mix(s, k, conj)
    op = fn.build_mixture_operator(sp, T(60))
    ev = fn.hermitian_eigenvalues(op)
    closed = gc.gaussian_max_eigenvalue(*gc.closed_form_symplectic_eigenvalues(sp))
    assert abs(ev[-1] - closed) <= 1e-6 * closed
    assert ev[0] >= -1e-10
    # widest M* case (s=0.5, kappa=1.5) keeps ~6e-6 of its trace above dim 60
    assert op.trace() == pytest.approx(1.0, abs=1e-6 if k < 1.5 else 1e-4)


@pytest.mark.parametrize("s, k, conj", GRID)
def test_truncation_convergence_40_to_80(s, k, conj):
    sp = mix(s, k, conj)
    # the widest M* entries need more than 40 levels to hold their trace
    a = fn.build_mixture_operator(sp, T(40), check_trace=False)
    b = fn.build_mixture_operator(sp, T(80))
    assert abs(fn.hermitian_max_eigenvalue(a) - fn.hermitian_max_eigenvalue(b)) <= 1e-8


class TestAmplifier:
    def test_identity_gain(self):
        rho = fn.coherent_vector(0.7 + 0.2j, T(20)).projector()
        assert np.array_equal(fn.amplifier_apply(rho, 1.0).matrix, rho.matrix)

    def test_vacuum_to_thermal(self):
        tr = T(60)
        out = fn.amplifier_apply(fn.coherent_vector(0, tr).projector(), 2.0)
        assert np.max(np.abs(out.matrix - fn.thermal_operator(1.0, T(60, 1e-6)).matrix)) <= 1e-8

    def test_coherent_example(self):
        tr = T(60)
        out = fn.amplifier_apply(fn.coherent_vector(0.5, tr).projector(), 2.0)
        target = fn.coherent_vector(np.sqrt(2) * 0.5, tr)
        assert fn.pure_state_fidelity(target, out) == pytest.approx(0.5, abs=1e-8)

    def test_errors(self):
        rho = fn.coherent_vector(0, T(10)).projector()
        with pytest.raises(DomainError):
            fn.amplifier_apply(rho, 0.5)
        with pytest.raises(TruncationError):
            fn.amplifier_apply(fn.coherent_vector(2.0, T(12, 1e-3)).projector(), 4.0)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(1, 4), st.floats(0, 1.5), st.floats(-np.pi, np.pi))
    def test_hermitian_positive_trace(self, g, r, phi):
        rho = fn.coherent_vector(r * np.exp(1j * phi), T(60)).projector()
        out = fn.amplifier_apply(rho, g)
        assert np.max(np.abs(out.matrix - out.matrix.conj().T)) <= 1e-12
        assert np.linalg.eigvalsh(out.matrix)[0] >= -1e-10
        assert -1e-14 <= rho.trace() - out.trace() <= 1e-4

    @settings(max_examples=20, deadline=None)
    @given(st.floats(1, 4), st.floats(0, 1.5), st.floats(-np.pi, np.pi))
    def test_branches_reproduce_channel(self, g, r, phi):
        v = fn.coherent_vector(r * np.exp(1j * phi), T(40))
        br = fn.amplifier_branches(v, g)
        rho = br.T @ br.conj()
        np.testing.assert_allclose(rho, fn.amplifier_apply(v.projector(), g, max_loss=1.0).matrix, atol=1e-13)

    def test_matches_unitary_dilation(self):
        # independent oracle: two-mode squeeze exp(r(a^dag b^dag - ab)) by matrix exponential
        from scipy.linalg import expm

        d, g = 30, 1.5
        r = np.arccosh(np.sqrt(g))
        a = np.diag(np.sqrt(np.arange(1, d)), 1)
        A, B = np.kron(a, np.eye(d)), np.kron(np.eye(d), a)
        U = expm(r * (A.T @ B.T - A @ B))
        psi = fn.coherent_amplitudes(0.4, d)
        full = U @ np.kron(psi, np.eye(d)[0])
        rho = np.einsum("ij,kj->ik", full.reshape(d, d), full.reshape(d, d).conj())
        ours = fn.amplifier_apply(fn.FockOperator(np.outer(psi, psi.conj())), g, max_loss=1.0).matrix
        # truncation of the generator corrupts the top levels only
        np.testing.assert_allclose(ours[:8, :8], rho[:8, :8], atol=1e-8)


class TestAttenuator:
    def test_coherent_stays_coherent(self):
        tr = T(40)
        out = fn.attenuator_apply(fn.coherent_vector(1.2 - 0.5j, tr).projector(), 0.36)
        target = fn.coherent_vector(0.6 * (1.2 - 0.5j), tr)
        assert fn.pure_state_fidelity(target, out) == pytest.approx(1.0, abs=1e-12)

    def test_full_loss_gives_vacuum(self):
        out = fn.attenuator_apply(fn.coherent_vector(1.0, T(30)).projector(), 0.0)
        assert out.matrix[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_rejects_bad_transmissivity(self):
        with pytest.raises(DomainError):
            fn.attenuator_apply(fn.coherent_vector(0, T(5)).projector(), 1.5)
