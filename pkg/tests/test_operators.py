import numpy as np
import pytest

from mqclab.operators import (
    OperatorSpec,
    PureState,
    apply,
    apply_array,
    basis_state,
    build_collective,
    build_dipolar,
    build_dq,
    build_site,
    dense_matrix,
    hilbert_schmidt_norm,
    spectral_bounds,
)


def random_spec(n, rng, n_terms=12, ladder=False):
    axes = "xyz+-" if ladder else "xyz"
    terms = []
    for _ in range(n_terms):
        k = rng.integers(1, 3)
        sites = rng.choice(n, size=k, replace=False)
        f = tuple((int(s), axes[rng.integers(len(axes))]) for s in sites)
        c = complex(rng.standard_normal(), rng.standard_normal() if ladder else 0.0)
        terms.append((c, f))
    return OperatorSpec(n, tuple(terms))


def hermitize(spec):
    return OperatorSpec(spec.n_spins, spec.terms + spec.adjoint().terms)


class TestBuilders:
    def test_dipolar_two_spins(self):
        H = build_dipolar(np.array([[0.0, 1.0], [1.0, 0.0]]))
        got = {f: c for c, f in H.terms}
        assert got == {
            ((0, "x"), (1, "x")): -0.5,
            ((0, "y"), (1, "y")): -0.5,
            ((0, "z"), (1, "z")): 1.0,
        }

    def test_dipolar_zero_matrix_empty(self):
        assert build_dipolar(np.zeros((3, 3))).terms == ()

    def test_dipolar_commutes_with_collective_z(self):
        # block-diagonal in total sigma_z sectors
        b = np.zeros((3, 3))
        b[0, 1] = b[1, 0] = b[1, 2] = b[2, 1] = 1.0
        H = dense_matrix(build_dipolar(b))
        Z = dense_matrix(build_collective("z", 3))
        assert np.abs(H @ Z - Z @ H).max() < 1e-14

    def test_dq_two_spin_matrix_element(self):
        H = dense_matrix(build_dq(np.array([[0.0, 1.0], [1.0, 0.0]])))
        expected = np.zeros((4, 4), dtype=complex)
        expected[0, 3] = expected[3, 0] = 1.0  # |uu><dd| + h.c.
        assert np.abs(H - expected).max() < 1e-14

    def test_dq_eigenvalues_two_spins(self):
        H = dense_matrix(build_dq(np.array([[0.0, 1.0], [1.0, 0.0]])))
        ev = np.sort(np.linalg.eigvalsh(H))
        assert np.allclose(ev, [-1.0, 0.0, 0.0, 1.0], atol=1e-13)

    def test_dq_changes_magnetization_by_two(self):
        # nonzero elements only between states whose popcount differs by 2
        b = np.zeros((3, 3))
        b[0, 1] = b[1, 0] = b[1, 2] = b[2, 1] = 1.0
        H = dense_matrix(build_dq(b))
        for i in range(8):
            for j in range(8):
                if H[i, j] != 0:
                    assert abs(bin(i).count("1") - bin(j).count("1")) == 2

    def test_dq_similarity_to_xy(self):
        # flipping alternate spins about z maps (xx - yy)/2 into the
        # flip-flop (xx + yy)/2 form for nearest-neighbour couplings
        n = 3
        b = np.zeros((n, n))
        b[0, 1] = b[1, 0] = b[1, 2] = b[2, 1] = 1.0
        HDQ = dense_matrix(build_dq(b))
        xy_terms = []
        for j in range(n - 1):
            xy_terms.append((0.5, ((j, "x"), (j + 1, "x"))))
            xy_terms.append((0.5, ((j, "y"), (j + 1, "y"))))
        HXY = dense_matrix(OperatorSpec(n, tuple(xy_terms)))
        U = dense_matrix(build_site("z", 1, n))  # invert the middle spin
        assert np.abs(U @ HDQ @ U.conj().T - HXY).max() < 1e-13

    def test_collective_z_dense(self):
        D = dense_matrix(build_collective("z", 2))
        assert np.allclose(np.diag(D).real, [2, 0, 0, -2])
        assert np.abs(D - np.diag(np.diag(D))).max() == 0

    def test_collective_expectations(self):
        n = 4
        all_up = basis_state(n, 0)
        z = build_collective("z", n)
        val = np.vdot(all_up.amplitudes, apply(z, all_up).amplitudes)
        assert abs(val - n) < 1e-14

    def test_collective_x_on_single_spin(self):
        out = apply(build_collective("x", 1), basis_state(1, 0))
        assert np.allclose(out.amplitudes, [0, 1])

    def test_ladder_expansion(self):
        # sigma^+ sigma^+ + sigma^- sigma^- == (xx - yy)/2
        plus = OperatorSpec(2, (
            (1.0, ((0, "+"), (1, "+"))),
            (1.0, ((0, "-"), (1, "-"))),
        ))
        assert np.abs(dense_matrix(plus) - dense_matrix(build_dq(np.array([[0, 1.0], [1.0, 0]])))).max() < 1e-14

    def test_repeated_site_rejected(self):
        with pytest.raises(ValueError):
            OperatorSpec(2, ((1.0, ((0, "x"), (0, "y"))),))

    def test_dq_phase_rotation_selection_rule(self):
        # conjugating H_DQ by exp(-i phi sigma_z/2) multiplies the
        # double-quantum raising part by exp(-2 i phi): dense check n=4
        n = 4
        b = np.zeros((n, n))
        for j in range(n - 1):
            b[j, j + 1] = b[j + 1, j] = 1.0
        phi = 0.731
        HDQ = dense_matrix(build_dq(b))
        Z = np.diag(np.exp(-1j * phi / 2 * np.diag(dense_matrix(build_collective("z", n)))))
        rotated = Z @ HDQ @ Z.conj().T
        raising = OperatorSpec(n, tuple((1.0, ((j, "+"), (j + 1, "+"))) for j in range(n - 1)))
        lowering = raising.adjoint()
        R, L = dense_matrix(raising), dense_matrix(lowering)
        expected = np.exp(-2j * phi) * R + np.exp(2j * phi) * L
        assert np.abs(rotated - expected).max() < 1e-12


class TestApply:
    def test_identity_coefficient(self):
        rng = np.random.default_rng(1)
        amps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        amps /= np.linalg.norm(amps)
        s = PureState(3, amps)
        out = apply(OperatorSpec(3, ((2.0, ()),)), s)
        assert np.allclose(out.amplitudes, 2.0 * amps)

    def test_sigma_x_bit_flip(self):
        n = 4
        for k in (0, 5, 9):
            out = apply(build_site("x", 0, n), basis_state(n, k))
            assert out.amplitudes[k ^ 1] == 1.0
            assert np.count_nonzero(out.amplitudes) == 1

    @pytest.mark.parametrize("seed", range(6))
    def test_against_dense_random_specs(self, seed):
        rng = np.random.default_rng(seed)
        n = 8
        spec = hermitize(random_spec(n, rng, n_terms=14, ladder=(seed % 2 == 0)))
        amps = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
        amps /= np.linalg.norm(amps)
        expected = dense_matrix(spec) @ amps
        got = apply_array(spec, amps)
        assert np.abs(got - expected).max() < 1e-13

    @pytest.mark.parametrize("seed", range(3))
    def test_against_dense_nonhermitian(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = 6
        spec = random_spec(n, rng, n_terms=10, ladder=True)
        amps = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
        expected = dense_matrix(spec) @ amps
        got = apply_array(spec, amps)
        assert np.abs(got - expected).max() < 1e-12

    def test_block_matches_single(self):
        rng = np.random.default_rng(7)
        n = 6
        spec = hermitize(random_spec(n, rng))
        block = rng.standard_normal((2**n, 5)) + 1j * rng.standard_normal((2**n, 5))
        block = np.ascontiguousarray(block)
        out = apply_array(spec, block)
        for q in range(5):
            single = apply_array(spec, np.ascontiguousarray(block[:, q]))
            assert np.abs(out[:, q] - single).max() < 1e-13

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply(build_collective("z", 3), basis_state(2, 0))


class TestDense:
    def test_sigma_z_single(self):
        assert np.allclose(dense_matrix(build_site("z", 0, 1)), np.diag([1, -1]))

    def test_dipolar_hermitian(self):
        b = np.zeros((4, 4))
        for j in range(3):
            b[j, j + 1] = b[j + 1, j] = 1.0
        H = dense_matrix(build_dipolar(b))
        assert np.abs(H - H.conj().T).max() == 0

    def test_size_guard(self):
        with pytest.raises(ValueError):
            dense_matrix(build_collective("z", 15))


class TestScalars:
    def test_hs_norm_single_z(self):
        assert hilbert_schmidt_norm(build_site("z", 0, 4, 2.5)) == pytest.approx(6.25)

    def test_hs_norm_disjoint_sum(self):
        op = OperatorSpec(3, ((2.0, ((0, "x"),)), (3.0, ((1, "z"), (2, "z")))))
        assert hilbert_schmidt_norm(op) == pytest.approx(4.0 + 9.0)

    def test_hs_norm_merges_duplicates(self):
        op = OperatorSpec(2, ((1.0, ((0, "x"),)), (2.0, ((0, "x"),))))
        assert hilbert_schmidt_norm(op) == pytest.approx(9.0)

    def test_hs_norm_matches_dense(self):
        rng = np.random.default_rng(3)
        spec = hermitize(random_spec(6, rng))
        H = dense_matrix(spec)
        expected = np.trace(H @ H).real / 2**6
        assert hilbert_schmidt_norm(spec) == pytest.approx(expected, rel=1e-12)

    def test_nn_chain_per_spin_norm(self):
        # Pauli convention: 1.5 per bond; in spin-1/2 operator units (H/2)
        # the same chain reads 6/16 per spin for long chains
        n = 200
        b = np.zeros((n, n))
        for j in range(n - 1):
            b[j, j + 1] = b[j + 1, j] = 1.0
        H = build_dipolar(b)
        per_spin = hilbert_schmidt_norm(H) / n
        assert per_spin == pytest.approx(1.5 * (n - 1) / n, rel=1e-12)
        half = hilbert_schmidt_norm(0.5 * H) / n
        assert half == pytest.approx(6.0 / 16.0, rel=0.01)

    def test_bounds_collective_z(self):
        lo, hi = spectral_bounds(build_collective("z", 5))
        assert lo <= -5 and hi >= 5

    def test_bounds_single_term(self):
        lo, hi = spectral_bounds(OperatorSpec(2, ((1.7, ((0, "x"), (1, "x"))),)))
        assert lo == pytest.approx(-1.7) and hi == pytest.approx(1.7)

    @pytest.mark.parametrize("tighten", [False, True])
    def test_bounds_enclose_spectrum(self, tighten):
        rng = np.random.default_rng(11)
        spec = hermitize(random_spec(8, rng, n_terms=16))
        ev = np.linalg.eigvalsh(dense_matrix(spec))
        lo, hi = spectral_bounds(spec, tighten=tighten)
        assert lo <= ev[0] + 1e-9 and hi >= ev[-1] - 1e-9


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(5)
        spec = random_spec(5, rng, ladder=True)
        back = OperatorSpec.from_json_dict(spec.to_json_dict())
        assert back == spec

    def test_hermiticity_check(self):
        assert build_dipolar(np.array([[0, 1.0], [1.0, 0]])).is_hermitian()
        assert not OperatorSpec(2, ((1j, ((0, "x"),)),)).is_hermitian()
        assert OperatorSpec(2, ((1.0, ((0, "+"), (1, "+"))), (1.0, ((0, "-"), (1, "-"))))).is_hermitian()
