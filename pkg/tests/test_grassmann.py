import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import kstest

from limfeed import grassmann as gm
from limfeed.errors import InvalidInputError
from limfeed.numerics import haar_semiunitary, make_rng, null_basis

from _util import haar_unitary, pair_at_distance, random_pairs

MANIFOLDS = [(4, 1), (4, 2), (4, 3), (6, 2)]
seeds = st.integers(0, 2**32 - 1)


def e(n, *idx):
    return np.eye(n, dtype=complex)[:, list(idx)]


# distances

def test_dist_published_examples():
    assert abs(gm.dist(e(4, 0, 1), e(4, 1, 2)) - 1.0) < 1e-12
    v2 = (e(4, 0) + e(4, 1)) / np.sqrt(2)
    assert abs(gm.dist(e(4, 0), v2) - np.sqrt(0.5)) < 1e-12


@given(seeds, st.sampled_from(MANIFOLDS))
@settings(max_examples=40, deadline=None)
def test_dist_properties(seed, shape):
    rng = make_rng(seed)
    n, m = shape
    v1, v2 = haar_semiunitary(rng, n, m), haar_semiunitary(rng, n, m)
    d = gm.dist(v1, v2)
    assert 0.0 <= d <= 1.0
    assert abs(d - gm.dist_dual(v1, v2)) < 1e-8
    assert abs(d - gm.dist(v2, v1)) < 1e-10
    q = haar_unitary(rng, m)
    assert abs(gm.dist(v1 @ q, v2) - d) < 1e-10
    assert gm.dist(v1, v1 @ q) < 1e-10


def test_dist_rank_one_closed_form(rng):
    v1, v2 = random_pairs(rng, 4, 1, 200)
    ip = np.abs(np.sum(v1.conj() * v2, axis=(1, 2))) ** 2
    np.testing.assert_allclose(gm.dist(v1, v2), np.sqrt(1 - ip), atol=1e-10)


def test_dist_accurate_near_zero(rng):
    v1, v2 = pair_at_distance(rng, 4, 2, 1e-7)
    assert abs(gm.dist(v1, v2) - 1e-7) < 1e-12


def test_dist_shape_mismatch():
    with pytest.raises(InvalidInputError):
        gm.dist(e(4, 0), e(4, 0, 1))


def test_distance_matrix(rng):
    members = haar_semiunitary(rng, 4, 2, size=5)
    d = gm.distance_matrix(members)
    assert d.shape == (5, 5)
    np.testing.assert_allclose(d, d.T, atol=1e-12)
    assert np.all(np.diag(d) < 1e-7)


# caps and codesets

def test_caps(rng):
    center = e(4, 0, 1)
    assert gm.in_cap(center, gm.Cap(center, 0.01))
    assert not gm.in_cap(e(4, 2, 3), gm.Cap(center, 0.99))
    far = haar_semiunitary(rng, 4, 2)
    v = gm.scale(far, center, 0.5 / gm.dist(center, far))
    assert abs(gm.dist(center, v) - 0.5) < 1e-10
    assert gm.in_cap(v, gm.Cap(center, 0.6))
    assert not gm.in_cap(v, gm.Cap(center, 0.4))


@pytest.mark.parametrize("radius", [0.0, 1.0, 1.5])
def test_cap_radius_validation(radius):
    with pytest.raises(InvalidInputError):
        gm.Cap(e(4, 0), radius)


def test_min_dist_examples(rng):
    assert gm.min_dist(np.stack([e(4, 0, 1), e(4, 0, 1)])) == 0.0
    assert abs(gm.min_dist(np.stack([e(4, 0, 1), e(4, 2, 3)])) - 1.0) < 1e-12
    members = haar_semiunitary(rng, 4, 2, size=3)
    pairs = [gm.dist(members[i], members[j]) for i, j in [(0, 1), (0, 2), (1, 2)]]
    assert gm.min_dist(members) == pytest.approx(min(pairs), abs=1e-14)
    with pytest.raises(InvalidInputError):
        gm.min_dist(members[:1])


# rotation

def test_rotate_identity(rng):
    items = haar_semiunitary(rng, 4, 2, size=5)
    v1 = items[0]
    np.testing.assert_allclose(gm.rotate(items, v1, v1), items, atol=1e-12)


@pytest.mark.parametrize("n,m", MANIFOLDS)
def test_rotate_isometry(rng, n, m):
    items = haar_semiunitary(rng, n, m, size=6)
    target = haar_semiunitary(rng, n, m)
    out = gm.rotate(items, items[0], target)
    assert gm.dist(out[0], target) < 1e-9
    np.testing.assert_allclose(gm.distance_matrix(out), gm.distance_matrix(items), atol=1e-9)
    gram = np.swapaxes(out.conj(), -1, -2) @ out
    assert np.max(np.abs(gram - np.eye(m))) < 1e-9


def test_rotate_square_and_shape_errors(rng):
    u = haar_unitary(rng, 3)
    assert gm.rotate(u[None], u, np.eye(3)).shape == (1, 3, 3)
    with pytest.raises(InvalidInputError):
        gm.rotate(haar_semiunitary(rng, 4, 2, size=2), e(4, 0), e(4, 1))


# scaling

def test_beamforming_examples():
    v1 = e(4, 0)
    np.testing.assert_allclose(gm.scale_beamforming(v1, v1, 0.3), v1, atol=1e-14)
    out = gm.scale_beamforming(e(4, 1), v1, 0.5)
    np.testing.assert_allclose(out[:, 0], [np.sqrt(3) / 2, 0.5, 0, 0], atol=1e-14)
    assert abs(gm.dist(v1, out) - 0.5) < 1e-12


def test_beamforming_alpha_one(rng):
    v1, vi = random_pairs(rng, 4, 1, 1)
    out = gm.scale_beamforming(vi[0], v1[0], 1.0)
    assert abs(gm.dist(v1[0], out) - gm.dist(v1[0], vi[0])) < 1e-12


@pytest.mark.parametrize("n,m", [(4, 2), (4, 3), (6, 2), (5, 1), (6, 4)])
@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.9, 1.0])
def test_scale_contracts_distance(rng, n, m, alpha):
    for _ in range(20):
        v1, vi = haar_semiunitary(rng, n, m), haar_semiunitary(rng, n, m)
        out = gm.scale(vi, v1, alpha)
        assert abs(gm.dist(v1, out) - alpha * gm.dist(v1, vi)) < 1e-8
        np.testing.assert_allclose(out.conj().T @ out, np.eye(m), atol=1e-10)
        assert gm.scale_params(vi, v1, alpha).violations() == []


def test_scale_geodesic_example(rng):
    v1, vi = pair_at_distance(rng, 4, 2, 0.8)
    assert abs(gm.dist(v1, gm.scale(vi, v1, 0.5)) - 0.4) < 1e-8


def test_scale_fixed_point(rng):
    v1 = haar_semiunitary(rng, 4, 2)
    assert gm.dist(gm.scale(v1, v1, 0.3), v1) < 1e-9
    p = gm.scale_params(v1, v1, 0.3)
    np.testing.assert_allclose(p.lam_a, [1, 1], atol=1e-12)
    assert p.violations() == []


def test_scale_square_manifold_is_identity(rng):
    u = haar_unitary(rng, 3)
    np.testing.assert_allclose(gm.scale(u, np.eye(3), 0.5), u)


def test_scale_params_forced_unit_entries(rng):
    # M > N_t - M: 2M - N_t principal angles are zero and stay so
    v1, vi = haar_semiunitary(rng, 4, 3), haar_semiunitary(rng, 4, 3)
    p = gm.scale_params(vi, v1, 0.5)
    np.testing.assert_allclose(p.lam_a[1:], [1, 1], atol=1e-10)
    assert p.violations() == []


def test_scale_params_detects_corruption(rng):
    v1, vi = haar_semiunitary(rng, 4, 2), haar_semiunitary(rng, 4, 2)
    p = gm.scale_params(vi, v1, 0.5)
    broken = gm.ScaleParams(**{**p.__dict__, "a": 2 * p.a})
    assert broken.violations()


def test_scale_many_matches_scale(rng):
    v1 = haar_semiunitary(rng, 4, 2)
    items = haar_semiunitary(rng, 4, 2, size=4)
    out = gm.scale_many(items, v1, 0.7)
    for k in range(4):
        np.testing.assert_allclose(out[k], gm.scale(items[k], v1, 0.7), atol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5])
def test_scale_alpha_validation(rng, alpha):
    with pytest.raises(InvalidInputError):
        gm.scale(e(4, 0), e(4, 1), alpha)


def test_scale_general_matches_beamforming(rng):
    for _ in range(50):
        v1, vi = haar_semiunitary(rng, 4, 1), haar_semiunitary(rng, 4, 1)
        a, b = gm.scale(vi, v1, 0.6), gm.scale_beamforming(vi, v1, 0.6)
        assert gm.dist(a, b) < 1e-8


def test_scale_simple_examples(rng):
    v1 = haar_semiunitary(rng, 4, 2)
    beta, delta = gm.scale_simple_coefficients(v1, v1, 0.7)
    assert abs(beta - 1) < 1e-12 and abs(delta) < 1e-7
    np.testing.assert_allclose(gm.scale_simple(v1, v1, 0.7), v1, atol=1e-7)

    v1, vi = pair_at_distance(rng, 4, 2, 0.8)
    beta, delta = gm.scale_simple_coefficients(vi, v1, 0.5)
    assert abs(beta - np.sqrt(1 - 0.25 * 0.64)) < 1e-10
    assert abs(delta - 0.4) < 1e-10
    out = gm.scale_simple(vi, v1, 0.5)
    assert abs(gm.dist(v1, out) - 0.4) < 1e-10

    v1 = e(4, 0, 1)
    extra = e(4, 3)[:, 0]
    out = gm.scale_simple(e(4, 2, 3), v1, 1.0, v_extra=extra)
    np.testing.assert_allclose(out, e(4, 0, 3), atol=1e-12)


def test_scale_simple_rejects_bad_extra():
    with pytest.raises(InvalidInputError):
        gm.scale_simple(e(4, 2, 3), e(4, 0, 1), 0.5, v_extra=e(4, 0)[:, 0])
    with pytest.raises(InvalidInputError):
        gm.scale_simple(e(4, 2, 3), e(4, 0, 1), 0.5, v_extra=2 * e(4, 3)[:, 0])


# sampling

def test_sample_in_cap_contract(rng):
    center = gm.canonical_point(4, 2)
    pts = gm.sample_in_cap(rng, gm.Cap(center, 1 - 1e-9), size=500)
    assert np.all(gm.dist(center, pts) < 1 - 1e-9)
    small = gm.sample_in_cap(rng, gm.Cap(center, 0.1), size=500)
    d = gm.dist(center, small)
    assert np.all(d < 0.1) and d.mean() < 0.1
    assert gm.sample_in_cap(rng, gm.Cap(center, 0.5)).shape == (4, 2)


def test_sample_in_cap_radial_law():
    # on G(4,1) a Haar point has P(dist <= x) = x**6; points beyond the
    # radius are moved to radius * U(0,1)
    r = 0.7
    center = gm.canonical_point(4, 1)
    d = gm.dist(center, gm.sample_in_cap(make_rng(5), gm.Cap(center, r), size=10_000))
    cdf = lambda x: np.clip(x, 0, r) ** 6 + (1 - r**6) * np.clip(x, 0, r) / r  # noqa: E731
    assert kstest(d, cdf).pvalue > 1e-3


# root codesets

def test_root_codeset_two_members(rng):
    cs = gm.make_root_codeset(rng, 4, 2, 2, 0.6, 50)
    assert len(cs) == 2
    assert cs.gamma == pytest.approx(gm.dist(cs.center, cs.members[1]))
    assert cs.gamma <= 0.6


def test_root_codeset_invariants(rng):
    cs = gm.make_root_codeset(rng, 4, 2, 5, 0.8, 300, batch=64)
    np.testing.assert_allclose(cs.center, gm.canonical_point(4, 2))
    assert np.all(gm.dist(cs.center, cs.members) < 0.8)
    assert cs.gamma == pytest.approx(gm.min_dist(cs))
    assert cs.radius() < 0.8


def test_root_codeset_batch_independent_of_trials_split():
    a = gm.make_root_codeset(make_rng(1), 4, 2, 4, 0.8, 200, batch=200)
    b = gm.make_root_codeset(make_rng(1), 4, 2, 4, 0.8, 200, batch=200)
    np.testing.assert_array_equal(a.members, b.members)


@pytest.mark.parametrize("args", [(4, 2, 1, 0.8, 10), (4, 2, 4, 1.0, 10), (4, 2, 4, 0.8, 0)])
def test_root_codeset_validation(rng, args):
    with pytest.raises(InvalidInputError):
        gm.make_root_codeset(rng, *args)


def test_gamma_max_single_budget():
    g = gm.estimate_gamma_max(make_rng(3), 4, 2, 4, 0.8, budget=1, trials=200)
    assert g == gm.make_root_codeset(make_rng(3), 4, 2, 4, 0.8, 200).gamma


def test_gamma_max_monotone_trends():
    est = lambda n, theta: gm.estimate_gamma_max(make_rng(11), 4, 2, n, theta, 2, 2000)  # noqa: E731
    by_n = [est(n, 0.8) for n in (2, 4, 8)]
    by_theta = [est(4, t) for t in (0.3, 0.6, 0.9)]
    assert by_n[0] >= by_n[1] >= by_n[2]
    assert by_theta[0] <= by_theta[1] <= by_theta[2]


def test_codeset_json_round_trip(tmp_path, rng):
    cs = gm.make_root_codeset(rng, 4, 2, 4, 0.8, 100)
    path = tmp_path / "root.json"
    gm.save_codeset(cs, path)
    back = gm.load_codeset(path)
    np.testing.assert_allclose(back.members, cs.members)
    assert back.theta == cs.theta and back.gamma == cs.gamma
    d = gm.codeset_to_dict(cs)
    assert set(d) == {"n_t", "m", "theta", "gamma", "members"}


def test_null_basis_orthogonal_to_scaled_output(rng):
    v1 = haar_semiunitary(rng, 5, 2)
    out = gm.scale(haar_semiunitary(rng, 5, 2), v1, 0.3)
    # most of the energy stays in span(v1)
    assert np.linalg.norm(null_basis(v1).conj().T @ out, 2) <= 0.3 + 1e-12
