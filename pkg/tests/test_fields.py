import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclame import fields as fl
from fraclame.errors import AccuracyError, DomainError, PreconditionError, SingularityError
from fraclame.fieldio import decode_field, encode_field, read_field, write_field
from fraclame.symbol import ElasticModuli, lame_symbol_power

GRID = fl.PeriodicGrid(2, 32, 6.0)
M = ElasticModuli(1.3, 0.6)


def rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


def plane_wave(grid, k, v):
    xi0 = np.asarray(k, dtype=float) / grid.L
    return fl.Field.from_function(grid, lambda x: np.cos(2 * np.pi * x @ xi0)[..., None] * np.asarray(v, float)), xi0


def test_grid_validation():
    with pytest.raises(DomainError):
        fl.PeriodicGrid(2, 12, 1.0)
    with pytest.raises(DomainError):
        fl.PeriodicGrid(4, 16, 1.0)
    with pytest.raises(DomainError):
        fl.PeriodicGrid(2, 16, 0.0)
    assert GRID.points()[16, 16].tolist() == [0.0, 0.0]


def test_fft_round_trip_and_modes():
    u = fl.Field(GRID, np.random.default_rng(0).standard_normal(GRID.shape + (2,)))
    back = fl.fft_inverse(fl.fft_forward(u))
    assert rel(back.values, u.values) <= 1e-13
    const = fl.Field(GRID, np.ones(GRID.shape + (2,)))
    c = fl.fft_forward(const).coeffs
    assert np.count_nonzero(np.abs(c) > 1e-12) == 2 and abs(c[0, 0, 0]) == pytest.approx(32.0)
    wave, _ = plane_wave(GRID, [3, 0], [1.0, 0.0])
    c = fl.fft_forward(wave).coeffs[..., 0]
    big = np.argwhere(np.abs(c) > 1e-9)
    assert sorted(map(tuple, big.tolist())) == [(3, 0), (29, 0)]
    assert c[3, 0] == pytest.approx(np.conj(c[29, 0]))


def test_identity_multiplier():
    u = fl.random_smooth_field(GRID, 1)
    out = fl.apply_multiplier(u, lambda xi: np.broadcast_to(np.eye(2), xi.shape[:-1] + (2, 2)))
    assert rel(out.values, u.values) <= 1e-14


@pytest.mark.parametrize("s", [0.3, 0.5, 0.9])
def test_plane_wave_eigenvalues(s):
    k = np.array([2, 1])
    along, xi0 = plane_wave(GRID, k, k / np.linalg.norm(k))
    across, _ = plane_wave(GRID, k, [-1 / np.sqrt(5), 2 / np.sqrt(5)])
    a = (2 * np.pi * np.linalg.norm(xi0)) ** (2 * s)
    assert rel(fl.frac_lame_apply(along, s, M).values, M.longitudinal**s * a * along.values) <= 1e-12
    assert rel(fl.frac_lame_apply(across, s, M).values, M.mu**s * a * across.values) <= 1e-12
    pot = fl.riesz_potential_apply(along, s, M)
    assert rel(pot.values, along.values / (M.longitudinal**s * a)) <= 1e-12


def test_constants_annihilated():
    const = fl.Field(GRID, np.full(GRID.shape + (2,), 0.7))
    for out in (fl.frac_lame_apply(const, 0.4, M), fl.frac_gradient(const, 0.4), fl.frac_divergence(const, 0.4),
                fl.frac_stress(const, 0.4, M)):
        assert np.abs(out.values).max() <= 1e-14


def test_scalar_reduction_is_componentwise_laplacian():
    m = ElasticModuli(2.0, -2.0)
    u = fl.random_smooth_field(GRID, 2)
    assert rel(fl.frac_lame_apply(u, 0.35, m).values, 2.0**0.35 * fl.frac_laplacian(u, 0.35).values) <= 1e-12
    pot = fl.riesz_potential_apply(u, 0.35, m).values
    scalar = 2.0**-0.35 * fl.apply_scalar_multiplier(u, fl._radial_power(GRID, -0.7)).values
    assert rel(pot, scalar) <= 1e-12


def test_projected_operator_only_parameter():
    # lambda = ((2s+1)^{1/s} - 2) mu removes the Laplacian part; at s = 1/2 that is lambda = 2 mu
    s, mu = 0.5, 1.7
    m = ElasticModuli(mu, ((2 * s + 1) ** (1 / s) - 2) * mu)
    assert ((2 * s + 1) * m.mu**s - m.longitudinal**s) / (2 * s) == pytest.approx(0.0, abs=1e-14)
    u = fl.random_smooth_field(GRID, 3)
    assert rel(fl.frac_lame_apply(u, s, m).values, mu**0.5 * fl.f_operator(u, s).values) <= 1e-12


def test_f_operator_plane_wave():
    s = 0.4
    k = np.array([1, 2])
    along, xi0 = plane_wave(GRID, k, k / np.linalg.norm(k))
    across, _ = plane_wave(GRID, k, [2 / np.sqrt(5), -1 / np.sqrt(5)])
    a = (2 * np.pi * np.linalg.norm(xi0)) ** (2 * s)
    assert rel(fl.f_operator(along, s).values, (2 * s + 1) * a * along.values) <= 1e-12
    assert rel(fl.f_operator(across, s).values, a * across.values) <= 1e-12


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_vector_calculus_identities(s):
    u = fl.random_smooth_field(GRID, 4)
    div = fl.frac_divergence(u, s)
    lap = fl.frac_laplacian(u, s).values
    # div^s grad^s acts as minus the fractional Laplacian on every component
    for comp in range(2):
        scal = fl.Field(GRID, u.values[..., comp])
        grad = fl.frac_gradient(fl.Field(GRID, np.stack([scal.values] * 2, -1)), s).values[..., 0, :]
        assert rel(fl.frac_divergence(fl.Field(GRID, grad), s).values, -lap[..., comp]) <= 1e-12
    grad_div = fl.frac_gradient(fl.Field(GRID, np.stack([div.values] * 2, -1)), s).values[..., 0, :]
    mu_s, lg_s = M.powers(s)
    decomposed = mu_s * lap - (lg_s - mu_s) * grad_div
    assert rel(decomposed, fl.frac_lame_apply(u, s, M).values) <= 1e-12


@pytest.mark.parametrize("s", [0.25, 0.75])
def test_stress_divergence_form(s):
    u = fl.random_smooth_field(GRID, 5)
    stress = fl.frac_stress(u, s, M)
    assert np.allclose(stress.values, np.swapaxes(stress.values, -1, -2))
    assert rel(-fl.frac_divergence(stress, s).values, fl.frac_lame_apply(u, s, M).values) <= 1e-11


def test_stress_trace_of_divergence_free_wave():
    s = 0.6
    wave, _ = plane_wave(GRID, [2, 1], [-1 / np.sqrt(5), 2 / np.sqrt(5)])
    stress = fl.frac_stress(wave, s, M).values
    assert np.abs(fl.frac_divergence(wave, s).values).max() <= 1e-12
    trace = np.einsum("...ii->...", stress)
    assert np.abs(trace).max() <= 1e-12 * np.abs(stress).max()


def test_riesz_inverts_on_mean_zero():
    for d, n in ((2, 32), (3, 16)):
        grid = fl.PeriodicGrid(d, n, 5.0)
        u = fl.Field(grid, np.random.default_rng(6).standard_normal(grid.shape + (d,)))
        u = u - fl.Field(grid, np.broadcast_to(u.mean(), u.values.shape))
        for s in (0.3, 0.9, d / 2 - 0.1):
            pot = fl.riesz_potential_apply(u, s, M)
            if s <= 1.0:
                assert rel(fl.frac_lame_apply(pot, s, M).values, u.values) <= 1e-11


def test_riesz_rejects_nonzero_mean():
    with pytest.raises(PreconditionError):
        fl.riesz_potential_apply(fl.Field(GRID, np.ones(GRID.shape + (2,))), 0.4, M)


def test_singular_symbol_names_frequency():
    u = fl.random_smooth_field(GRID, 7)
    with pytest.raises(SingularityError, match=r"xi=\[0\.0, 0\.0\]"):
        fl.apply_multiplier(u, lambda xi: lame_symbol_power(xi, -0.3, M))


def test_imaginary_residue_is_caught():
    with pytest.raises(AccuracyError):
        fl._real_part(np.array([1.0 + 1e-6j, 2.0]))
    assert fl._real_part(np.array([1.0 + 1e-15j]))[0] == 1.0


def test_resolvent_solution():
    s, q = 0.6, 0.8
    f = fl.random_smooth_field(GRID, 9) + fl.Field(GRID, np.full(GRID.shape + (2,), 0.3))
    u = fl.solve_resolvent(f, s, q, M)
    res = fl.frac_lame_apply(u, s, M) + q * u - f
    assert res.norm() <= 1e-12 * f.norm()
    assert u.norm() <= f.norm() / q
    const = fl.Field(GRID, np.full(GRID.shape + (2,), 2.0))
    assert rel(fl.solve_resolvent(const, s, q, M).values, const.values / q) <= 1e-14


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(-7, 7), st.integers(-7, 7), st.floats(0.1, 0.95))
def test_translation_equivariance_and_linearity(seed, sx, sy_, s):
    u = fl.random_smooth_field(GRID, seed)
    v = fl.random_smooth_field(GRID, seed + 1)
    shifted = fl.Field(GRID, np.roll(u.values, (sx, sy_), axis=(0, 1)))
    lhs = fl.frac_lame_apply(shifted, s, M).values
    rhs = np.roll(fl.frac_lame_apply(u, s, M).values, (sx, sy_), axis=(0, 1))
    assert rel(lhs, rhs) <= 1e-12
    comb = fl.frac_lame_apply(2.0 * u - 0.5 * v, s, M).values
    parts = 2.0 * fl.frac_lame_apply(u, s, M).values - 0.5 * fl.frac_lame_apply(v, s, M).values
    assert rel(comb, parts) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.95), st.floats(0.2, 4.0), st.floats(0.1, 4.0))
def test_self_adjoint_and_coercive(seed, s, mu, lg):
    m = ElasticModuli(mu, lg - 2 * mu)
    u = fl.random_smooth_field(GRID, seed)
    v = fl.random_smooth_field(GRID, seed + 7)
    luv = fl.inner(fl.frac_lame_apply(u, s, m), v)
    assert luv == pytest.approx(fl.inner(u, fl.frac_lame_apply(v, s, m)), rel=1e-12, abs=1e-14)
    energy = fl.inner(fl.frac_lame_apply(u, s, m), u)
    half = fl.frac_laplacian(u, s / 2).norm() ** 2
    assert min(mu, lg) ** s * half * (1 - 1e-12) <= energy <= max(mu, lg) ** s * half * (1 + 1e-12)


def test_limits_in_order():
    u = fl.random_smooth_field(GRID, 11)
    classical = fl.lame_apply(u, M).values
    errs = [rel(fl.frac_lame_apply(u, s, M).values, classical) for s in (0.9, 0.99, 0.999)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-2
    assert rel(fl.frac_lame_apply(u, 1.0, M).values, classical) <= 1e-13
    errs = [rel(fl.frac_lame_apply(u, s, M).values, u.values) for s in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-3


def test_wave_packet_is_localized():
    grid = fl.PeriodicGrid(2, 64, 12.0)
    u = fl.gaussian_wave_packet(grid)
    assert np.abs(u.mean()).max() < 1e-6
    edge = np.abs(u.values[0]).max()
    assert edge < 1e-10


def test_field_file_round_trip(tmp_path):
    u = fl.random_smooth_field(GRID, 12)
    write_field(tmp_path / "u.field", u)
    back = read_field(tmp_path / "u.field")
    assert back.grid == GRID and np.array_equal(back.values, u.values)
    mat = fl.frac_gradient(u, 0.5)
    assert np.array_equal(decode_field(encode_field(mat)).values, mat.values)
    blob = encode_field(u)
    with pytest.raises(DomainError):
        decode_field(blob[:-8])
    with pytest.raises(DomainError):
        decode_field(b"not json\n")
