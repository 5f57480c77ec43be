import numpy as np

from occ_urllc import optimizer, properties


def test_lemma1_passes(calibrated):
    r = properties.lemma1_concavity(l0=calibrated.params.l0, n=2000)
    assert r.passed, r


def test_lemma1_detects_wrong_floor(monkeypatch):
    # a floor that is too low puts convex points in the "concave" sample
    monkeypatch.setattr(properties, "concavity_floor", lambda s, k: 0.3 / np.sqrt(k * s))
    r = properties.lemma1_concavity(n=500)
    assert not r.passed
    assert {"D", "S", "K", "P"} <= set(r.witness)


def test_lemma2_passes(calibrated):
    assert properties.lemma2_negative_root(l0=calibrated.params.l0).passed


def test_lemma2_sign_flip_caught(monkeypatch):
    def flipped(lam, d, s, l0, k):
        a = l0 / (lam * d)
        return a - np.sqrt(a * a - 1.0 / (k * s))

    monkeypatch.setattr(optimizer, "dual_power_array", flipped)
    r = properties.lemma2_negative_root()
    assert not r.passed
    assert {"lam", "D", "S", "P"} <= set(r.witness)


def test_inversion_identity():
    r = properties.inversion_identity(n=2000)
    assert r.passed and r.stats["max_rel_err"] <= 1e-12


def test_second_difference_sign():
    d2, tol = properties.second_difference(np.array([10.0]), 20.0, 1.0, 4e7, 0.2)
    assert d2[0] < -tol[0]
