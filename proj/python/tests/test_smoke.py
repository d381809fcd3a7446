import math

import numpy as np
import pytest

import vlut


def camera(w=64, h=48):
    return vlut.CameraIntrinsics(fx=w / 2, fy=w / 2, cx=(w - 1) / 2, cy=(h - 1) / 2, width=w, height=h)


def test_backproject_project_round_trip():
    cam = vlut.CameraIntrinsics(fx=800, fy=800, cx=960, cy=540, width=1920, height=1080)
    p = vlut.backproject(640, 512, 1.7, cam)
    assert p == pytest.approx((-0.68, -0.0595, 1.7))
    assert vlut.project(p, cam) == pytest.approx((640, 512))
    with pytest.raises(vlut.VlutError):
        vlut.backproject(10, 10, -1.0, cam)


def test_weight_worked_example():
    assert vlut.observation_weight(0.5, 1.0, 0.05, 0.49, 10.0, 0.5) == pytest.approx(35.04, rel=5e-4)
    assert vlut.snr(0.5, 0.49, 10.0, 0.5) == pytest.approx(0.5 / 0.105)


def test_table_arrays_and_serialization():
    spec = vlut.FrustumSpec(camera(), 4, 3, 5)
    lut = vlut.LookupTable(spec, 0.5, 0.3)
    assert lut.alpha.shape == (3, 5, 3, 4)
    assert np.all(lut.beta == 0.3)
    a = lut.alpha
    a[1, 2, 1, 3] = 0.75
    lut.alpha = a
    assert lut.alpha[1, 2, 1, 3] == 0.75
    # parameters are stored as float32, so bytes round-trip exactly
    back = vlut.LookupTable.deserialize(lut.serialize())
    assert back.serialize() == lut.serialize()
    assert np.allclose(back.beta, lut.beta, rtol=1e-7)
    alpha, beta = lut.sample(spec.voxel_center(0, 0, 0))
    assert alpha == pytest.approx((0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        lut.alpha = np.zeros((3, 1, 1, 1))


def test_restore_inverts_forward_model():
    cam = camera()
    lut = vlut.LookupTable(vlut.FrustumSpec(cam, 4, 3, 5), 0.5, 0.3)
    image = np.full((48, 64, 3), 0.8, dtype=np.float32)
    depth = np.full((48, 64), 1.0, dtype=np.float32)
    depth[5, 5] = np.nan
    albedo, confidence, valid = vlut.restore_image(image, depth, lut, shading=False)
    assert albedo.shape == (48, 64, 3)
    assert albedo[10, 10] == pytest.approx(1.0, rel=1e-6)
    assert math.isnan(albedo[5, 5, 0]) and valid[5, 5] == 0
    assert np.all((confidence >= 0) & (confidence <= 1))
    with pytest.raises(ValueError):
        vlut.restore_image(image[..., 0], depth, lut)


def test_simulate_calibrate_restore(tmp_path):
    assert "inair_whiteboard" in vlut.recipe_names()
    n = vlut.make_dataset("inair_whiteboard", tmp_path / "ds", seed=1, width=64, height=48)
    assert n > 30
    manifest = tmp_path / "ds" / "manifest.json"
    lut, report = vlut.calibrate(manifest, pyramid=[(8, 6, 10)], in_air=True)
    assert report["levels"][0]["dims"] == [8, 6, 10]
    assert np.all(lut.beta == 0)
    gt = vlut.ground_truth_lut(manifest, 8, 6, 10)
    seen = lut.obs_count >= 8
    rel = np.abs(lut.alpha / gt.alpha - 1)[:, seen]
    assert np.median(rel) < 0.1
    vlut.save_lut(tmp_path / "t.vlut", lut)
    assert vlut.load_lut(tmp_path / "t.vlut").serialize() == lut.serialize()


def test_cli_exit_codes(tmp_path):
    assert vlut.run_cli([]) == 2
    assert vlut.run_cli(["simulate", "--recipe", "no_such", "--seed", "1", "--out", str(tmp_path / "x")]) == 1
