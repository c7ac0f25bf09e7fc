import json
import math
import os

import numpy as np
import pytest
from skimage.metrics import structural_similarity

from equslab.harness.metrics import cons, mse, psnr, ssim
from equslab.harness.stats import sign_test_less
from equslab.operators import BlockCS, Mask

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def test_psnr_cases():
    ref = np.random.default_rng(0).uniform(0, 0.8, (8, 8, 1))
    assert psnr(ref, ref) == math.inf
    assert psnr(ref + 0.1, ref) == pytest.approx(20.0, abs=1e-9)
    assert psnr(np.ones((2, 2)), np.zeros((2, 2))) == 0.0
    with pytest.raises(ValueError):
        psnr(ref, ref[:4])
    with pytest.raises(ValueError):
        psnr(ref, ref, peak=0)


def test_ssim_identity_and_bounds():
    ref = np.random.default_rng(1).uniform(0, 1, (12, 12, 3))
    assert ssim(ref, ref) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        ssim(np.zeros((6, 6)), np.zeros((6, 6)))


def test_ssim_inverted_pattern_is_negative():
    i, j = np.mgrid[0:8, 0:8]
    ref = (0.2 + 0.6 * ((i + j) % 2))[:, :, None]
    assert ssim(1.0 - ref, ref) < 0


def test_ssim_independent_noise_near_zero():
    r = np.random.default_rng(2)
    vals = [ssim(r.uniform(0, 1, (32, 32)), r.uniform(0, 1, (32, 32))) for _ in range(100)]
    assert max(abs(v) for v in vals) < 0.2


@pytest.mark.parametrize("shape", [(16, 16), (20, 13, 3)])
def test_ssim_agrees_with_skimage_uniform_windows(shape):
    r = np.random.default_rng(3)
    ref = r.uniform(0, 1, shape)
    x = np.clip(ref + r.normal(0, 0.1, shape), 0, 1)
    ours = ssim(x, ref, win=7)
    theirs = structural_similarity(
        x, ref, win_size=7, data_range=1.0, gaussian_weights=False, use_sample_covariance=False,
        channel_axis=2 if len(shape) == 3 else None,
    )
    assert ours == pytest.approx(theirs, abs=1e-10)


def test_golden_fixtures():
    with open(os.path.join(FIXTURES, "metrics_golden.json")) as fh:
        cases = json.load(fh)["cases"]
    for c in cases:
        shape = tuple(c["shape"])
        x, ref = np.array(c["x"]).reshape(shape), np.array(c["ref"]).reshape(shape)
        mask = np.array(c["mask"], bool).reshape(shape)
        A = Mask(mask)
        assert abs(psnr(x, ref) - c["psnr"]) <= 1e-9, c["name"]
        assert abs(ssim(x, ref) - c["ssim"]) <= 1e-9, c["name"]
        assert abs(cons(ref[mask], A, x) - c["cons"]) <= 1e-9, c["name"]


def test_cons_cases():
    A = BlockCS((8, 8, 1), 0.25, seed=0)
    r = np.random.default_rng(4)
    y = A.apply(r.standard_normal((8, 8, 1)))
    assert cons(y, A, A.pinv(y)) <= 1e-8
    x0 = r.standard_normal((8, 8, 1))
    assert cons(y, A, x0) == pytest.approx(sum((a - b) ** 2 for a, b in zip(A.apply(x0), y)), rel=1e-12)
    mask = np.zeros((4, 4, 1), bool)
    mask[::2] = True
    M = Mask(mask)
    img = r.uniform(size=(4, 4, 1))
    assert cons(img[mask], M, img) == 0.0


def test_mse():
    assert mse(np.zeros(4), np.full(4, 0.5)) == 0.25


def test_sign_test():
    a = np.arange(10.0)
    t = sign_test_less(a, a + 1)
    assert (t.wins, t.losses, t.ties) == (10, 0, 0)
    assert t.p_value == pytest.approx(0.5**10)
    assert t.significant(0.05)
    t2 = sign_test_less(a + 1, a)
    assert t2.p_value == 1.0 and not t2.significant()
    t3 = sign_test_less(a, a)
    assert t3.ties == 10 and t3.p_value == 1.0
    assert "NOT significant" in t3.summary()
    assert t.to_dict()["mean_delta"] == -1.0
    with pytest.raises(ValueError):
        sign_test_less(a, a[:3])
