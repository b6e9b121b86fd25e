import math

import numpy as np
import pytest

from confmap import (
    InvalidInputError,
    build_closed_form,
    engine_from_json,
    load_engine,
    save_engine,
)

# (1/2pi) * integral of |1 + 0.45 e^(it)|, mpmath at 50 digits
MEAN_ABS_ONE_PLUS_045 = 1.0513010128044291


def test_identity_is_the_identity(identity_engine):
    z = np.array([0.1 + 0.2j, -0.7j, 0.99])
    assert np.allclose(identity_engine.evaluate(z), z)
    assert np.allclose(identity_engine.derivative(z), 1.0)


def test_normalization(affine_engine):
    z0 = np.array([0.0 + 0.0j])
    assert affine_engine.evaluate(z0)[0] == pytest.approx(1.0 + 0.0j)
    d = affine_engine.derivative(z0)[0]
    assert d.imag == pytest.approx(0.0, abs=1e-15)
    assert d.real > 0


def test_affine_scales_distances(affine_engine):
    z = np.array([0.25 + 0.1j, -0.3 + 0.4j])
    w = affine_engine.evaluate(z)
    c = affine_engine.derivative(np.array([0j]))[0]
    assert abs(w[1] - w[0]) == pytest.approx(abs(c) * abs(z[1] - z[0]), rel=1e-14)


def test_univalent_poly_values(poly_engine):
    # z + a z^2 with a = 1/4
    z = np.array([0.5 + 0.0j, 0.2 - 0.3j])
    expect = z + 0.25 * z ** 2
    assert np.allclose(poly_engine.evaluate(z), expect)
    assert np.allclose(poly_engine.derivative(z), 1.0 + 0.5 * z)


def test_univalent_poly_rejects_non_univalent():
    with pytest.raises(InvalidInputError):
        build_closed_form("univalent-poly", a=0.75)


def test_unknown_name_rejected():
    with pytest.raises(InvalidInputError):
        build_closed_form("moebius")


def test_affine_rejects_zero_scale():
    with pytest.raises(InvalidInputError):
        build_closed_form("affine", c=0.0, d=1.0)


def test_poly_derivative_mean_oracle():
    # |phi'(0.9 e^(it))| = |1 + 0.45 e^(it)| for a = 1/4 up to rotation of t,
    # so the full-circle mean matches the frozen constant
    eng = build_closed_form("univalent-poly", a=0.25)
    t = np.linspace(0.0, 2.0 * math.pi, 4097)[:-1]
    vals = np.abs(eng.derivative(0.9 * np.exp(1j * t)))
    assert vals.mean() == pytest.approx(MEAN_ABS_ONE_PLUS_045, abs=1e-9)


def test_boundary_correspondence_closed_form(identity_engine):
    t = np.array([0.0, 1.0, 2.5])
    w = identity_engine.boundary_correspondence(t)
    assert np.allclose(w, np.exp(1j * t), atol=1e-7)


def test_save_load_round_trip(tmp_path, poly_engine):
    path = tmp_path / "poly.engine.json"
    save_engine(poly_engine, path)
    back = load_engine(path)
    z = np.array([0.3 + 0.4j, -0.2 - 0.1j])
    assert np.allclose(back.evaluate(z), poly_engine.evaluate(z))
    assert np.allclose(back.derivative(z), poly_engine.derivative(z))


def test_engine_from_json_rejects_unknown_variant():
    with pytest.raises(InvalidInputError):
        engine_from_json({"variant": "not-a-map"})
