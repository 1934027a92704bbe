import json

import numpy as np
import pytest

import loadid

TINY = {
    "preset": "desk",
    "seed": 4,
    "dataset": {"count": 4, "split": {"train": 2, "val": 1, "test": 1}, "duration": 2.0, "load": {"onset": [0.0, 0.5]}},
    "networks": {"common": {"units": 3, "layer_pairs": 1, "dense_width": 4, "max_epochs": 1}},
}


def test_six_story_matrices():
    M, C, K = loadid.six_story_matrices()
    assert M.shape == (6, 6)
    assert K[0, 0] == 1800.0
    assert K[5, 5] == 1300.0
    assert np.allclose(K, K.T)
    assert np.all(np.linalg.eigvalsh(K) > 0)


def test_custom_shear_chain():
    M, C, K = loadid.shear_matrices([1.0, 2.0], [3.0, 5.0], [7.0, 11.0])
    assert np.array_equal(K, [[8.0, -5.0], [-5.0, 5.0]])
    assert np.array_equal(M, np.diag([1.0, 2.0]))
    with pytest.raises(loadid.LoadidError) as err:
        loadid.shear_matrices([1.0], [-1.0], [1.0])
    assert err.value.kind == "invalid-spec"


def test_config_is_one_based_and_validated():
    cfg = loadid.config({"preset": "desk"})
    assert cfg["building"]["input_dofs"] == [6]
    assert cfg["dataset"]["measured_dofs"] == [3, 5, 6]
    assert json.loads(loadid.preset("paper"))["dataset"]["duration"] == 200
    assert "properties" in json.loads(loadid.schema())
    with pytest.raises(loadid.LoadidError) as err:
        loadid.config({"dataset": {"dt": -1}})
    assert err.value.kind == "config"
    assert "dataset.dt" in str(err.value)


def test_generate_and_filter_sequence():
    doc = json.dumps({"dataset": {"duration": 4.0, "dt": 0.02, "nsr": 0.0, "load": {"onset": [0.0, 0.5]}}, "filter": {"mu": "inf", "theta0_offset": 0.0}})
    seq = loadid.generate_sequence(doc, seed=1, index=0)
    assert seq["time"].shape == (201,)
    assert seq["noisy_accel"].shape == (201, 3)
    assert seq["measured_dofs"] == [3, 5, 6]
    assert np.array_equal(seq["noisy_accel"], seq["clean_accel"])
    again = loadid.generate_sequence(doc, seed=1, index=0)
    assert np.array_equal(seq["forces"], again["forces"])

    out = loadid.filter_sequence(doc, seed=1, index=0)
    est, truth = out["u_est"][:, 5], out["forces"][:, 5]
    assert np.linalg.norm(est[100:] - truth[100:]) / np.linalg.norm(truth[100:]) < 1e-2
    assert np.all(out["u_est"][:, :5] == 0.0)


def test_accumulated_error():
    truth = np.array([0.0, 1.0, -2.0, 1e-6, 3.0])
    E, retained = loadid.accumulated_error(2 * truth, truth, 1e-3)
    assert list(E) == [0.0, 1.0, 2.0, 2.0, 3.0]
    assert retained == [False, True, True, False, True]
    assert loadid.mse(np.array([1.0, 2.0]), np.zeros(2)) == 2.5
    with pytest.raises(loadid.LoadidError):
        loadid.accumulated_error(np.zeros(3), np.zeros(3))


def test_sha256():
    assert loadid.sha256_hex("abc").startswith("ba7816bf")


def test_tiny_compare_and_predict(tmp_path):
    levels = loadid.compare(json.dumps(TINY), str(tmp_path))
    assert len(levels) == 1
    nsr, table = levels[0]
    assert nsr == pytest.approx(0.05)
    assert table.splitlines()[0] == "case,E_final_rkf,E_final_lstm,E_final_gru,E_final_conv,mse_rkf,mse_lstm,mse_gru,mse_conv"
    assert (tmp_path / "manifest.json").exists()

    seq = loadid.generate_sequence(json.dumps(TINY), seed=4, index=0)
    pred = loadid.predict_load(str(tmp_path / "models" / "gru.bin"), seq["noisy_accel"])
    assert pred.shape == (seq["time"].shape[0], 1)
    assert np.all(np.isfinite(pred))
