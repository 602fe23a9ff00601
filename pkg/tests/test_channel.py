import json

import numpy as np
import pytest

from limfeed.channel import (
    CanonicalModel,
    covariance_spec,
    dft_matrix,
    dumps_model,
    iid_model,
    matched_statistics,
    model_from_dict,
    model_to_dict,
    receive_cov,
    sample,
    separable_model,
    transmit_cov,
    virtual_model,
)
from limfeed.errors import InvalidInputError, InvalidStatisticsError
from limfeed.harness import FIG3_LAMBDA_R, FIG3_LAMBDA_T, FIG4_VARIANCES
from limfeed.numerics import make_rng

from _util import haar_unitary


def rel_fro(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_iid_model():
    model = iid_model(4, 4)
    np.testing.assert_array_equal(model.var, np.ones((4, 4)))
    np.testing.assert_allclose(transmit_cov(model)[0], [4, 4, 4, 4])
    np.testing.assert_allclose(transmit_cov(model)[2], 4 * np.eye(4))


def test_iid_entry_variance():
    h = sample(iid_model(4, 4), make_rng(1), size=100_000 // 16 + 1)
    assert abs(np.mean(np.abs(h) ** 2) - 1) < 0.03


def test_iid_rejects_zero_antennas():
    with pytest.raises(InvalidInputError):
        iid_model(0, 4)


def test_separable_published_values():
    model = separable_model(FIG3_LAMBDA_T, FIG3_LAMBDA_R)
    assert abs(sum(FIG3_LAMBDA_T) - 16.0) < 1e-12
    assert abs(sum(FIG3_LAMBDA_R) - 16.0) < 1e-12
    assert abs(model.var[0, 0] - 15.5 * 14.98 / 16) < 1e-12
    np.testing.assert_allclose(transmit_cov(model)[0], FIG3_LAMBDA_T)
    np.testing.assert_allclose(receive_cov(model)[0], FIG3_LAMBDA_R)


def test_separable_flat():
    model = separable_model(np.ones(3), np.ones(3))
    np.testing.assert_allclose(model.var, np.full((3, 3), 1 / 3))


def test_separable_trace_mismatch():
    with pytest.raises(InvalidStatisticsError):
        separable_model([2.0, 1.0], [1.0, 1.0])


def test_separable_negative():
    with pytest.raises(InvalidStatisticsError):
        separable_model([2.0, -1.0], [0.5, 0.5])


def test_virtual_published_sums():
    model = virtual_model(FIG4_VARIANCES)
    np.testing.assert_allclose(model.var.sum(axis=0), [2.65, 3.08, 8.48, 1.79], atol=1e-12)
    np.testing.assert_allclose(model.var.sum(axis=1), [10.38, 1.00, 2.20, 2.42], atol=1e-12)
    np.testing.assert_allclose(model.u_t, dft_matrix(4))
    lam, vecs, _, order = transmit_cov(model)
    assert order[0] == 2
    assert abs(lam[0] - 8.48) < 1e-12
    np.testing.assert_allclose(vecs[:, 0], dft_matrix(4)[:, 2])


def test_virtual_rejects_bad_var():
    with pytest.raises(InvalidInputError):
        virtual_model([1.0, 2.0])
    with pytest.raises(InvalidStatisticsError):
        virtual_model(-np.ones((2, 2)))


def test_dft_matrix():
    np.testing.assert_allclose(dft_matrix(1), [[1]])
    np.testing.assert_allclose(dft_matrix(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    np.testing.assert_allclose(dft_matrix(4)[1], np.array([1, -1j, -1, 1j]) / 2, atol=1e-15)
    f = dft_matrix(5)
    np.testing.assert_allclose(f.conj().T @ f, np.eye(5), atol=1e-12)


def test_single_path():
    var = np.zeros((3, 3))
    var[0, 0] = 1.0
    h = sample(CanonicalModel(np.eye(3), np.eye(3), var), make_rng(0), size=10)
    assert np.all(h[:, 1:, :] == 0) and np.all(h[:, :, 1:] == 0)
    assert np.all(h[:, 0, 0] != 0)


@pytest.mark.parametrize("name", ["fig3", "fig4"])
def test_sample_second_moments(name):
    if name == "fig3":
        model = separable_model(FIG3_LAMBDA_T, FIG3_LAMBDA_R, dft_matrix(4), dft_matrix(4))
    else:
        model = virtual_model(FIG4_VARIANCES)
    h = sample(model, make_rng(2), size=100_000)
    hh = np.swapaxes(h.conj(), -1, -2)
    sigma_t = np.mean(hh @ h, axis=0)
    sigma_r = np.mean(h @ hh, axis=0)
    assert rel_fro(sigma_t, transmit_cov(model)[2]) < 0.02
    assert rel_fro(sigma_r, receive_cov(model)[2]) < 0.02
    assert abs(np.mean(np.sum(np.abs(h) ** 2, axis=(1, 2))) / model.power - 1) < 0.02


def test_sample_single_shape(rng):
    assert sample(iid_model(2, 3), rng).shape == (2, 3)


def test_model_validation(rng):
    with pytest.raises(InvalidInputError):
        CanonicalModel(np.ones((2, 2)), np.eye(2), np.ones((2, 2)))
    with pytest.raises(InvalidInputError):
        CanonicalModel(np.eye(3), np.eye(2), np.ones((2, 2)))
    with pytest.raises(InvalidStatisticsError):
        CanonicalModel(np.eye(2), np.eye(2), np.zeros((2, 2)))


def test_model_is_read_only():
    model = iid_model(2, 2)
    with pytest.raises(ValueError):
        model.var[0, 0] = 5.0


def test_covariance_spec_iid_and_sorting(rng):
    u = haar_unitary(rng, 3)
    model = CanonicalModel(u, np.eye(2), np.array([[0.1, 2.0, 1.0], [0.1, 2.0, 1.0]]))
    spec = covariance_spec(model)
    np.testing.assert_allclose(spec.lambda_t, [4.0, 2.0, 0.2])
    lam, vecs, sigma, order = transmit_cov(model)
    np.testing.assert_array_equal(order, [1, 2, 0])
    np.testing.assert_allclose(sigma, (u * model.var.sum(axis=0)) @ u.conj().T, atol=1e-12)
    np.testing.assert_allclose(vecs, u[:, order])


def test_transmit_sort_is_stable_for_ties():
    lam, _, _, order = transmit_cov(separable_model(FIG3_LAMBDA_T, FIG3_LAMBDA_R))
    np.testing.assert_array_equal(order, [0, 1, 2, 3])


def test_matched_statistics():
    lt, lr = matched_statistics(4, 4, 2)
    np.testing.assert_allclose(lt, [8, 8, 0, 0])
    np.testing.assert_allclose(lr, [4, 4, 4, 4])
    lt, lr = matched_statistics(4, 4, 4)
    np.testing.assert_allclose(lt, [4, 4, 4, 4])
    for nt, nr, m in [(4, 4, 1), (3, 5, 2), (2, 6, 2)]:
        lt, lr = matched_statistics(nt, nr, m)
        assert lt.sum() == lr.sum() == nt * nr
    with pytest.raises(InvalidInputError):
        matched_statistics(4, 2, 3)


def test_model_json_round_trip(rng):
    model = CanonicalModel(haar_unitary(rng, 3), haar_unitary(rng, 2), rng.random((2, 3)))
    back = model_from_dict(json.loads(dumps_model(model)))
    np.testing.assert_allclose(back.u_t, model.u_t)
    np.testing.assert_allclose(back.u_r, model.u_r)
    np.testing.assert_allclose(back.var, model.var)
    assert model_to_dict(back) == model_to_dict(model)


def test_model_json_constructors():
    assert model_from_dict({"type": "iid", "n_r": 2, "n_t": 3}).var.shape == (2, 3)
    sep = model_from_dict(
        {"type": "separable", "lambda_t": FIG3_LAMBDA_T, "lambda_r": FIG3_LAMBDA_R, "u_t": "dft", "u_r": "dft"}
    )
    np.testing.assert_allclose(sep.u_t, dft_matrix(4))
    haar = model_from_dict({"type": "separable", "lambda_t": [1, 1], "lambda_r": [1, 1], "u_t": "haar", "seed": 3})
    np.testing.assert_allclose(haar.u_t.conj().T @ haar.u_t, np.eye(2), atol=1e-12)
    virt = model_from_dict({"type": "virtual", "var": FIG4_VARIANCES})
    np.testing.assert_allclose(virt.var, FIG4_VARIANCES)
    with pytest.raises(InvalidInputError):
        model_from_dict({"type": "ring"})
    with pytest.raises(InvalidInputError):
        model_from_dict({"type": "separable", "lambda_t": [1], "lambda_r": [1], "u_t": "random"})
