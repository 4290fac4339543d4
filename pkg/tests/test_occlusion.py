import numpy as np
import pytest

from occtrack.errors import ConfigError, StreamFormatError
from occtrack.geometry import Pose
from occtrack.occlusion import OcclusionConfig, count_valid_keypoints, reid_is_valid, valid_mask
from oracles import linear_count_above


def pose_with(conf):
    conf = np.asarray(conf, dtype=float)
    return Pose(np.column_stack([np.zeros((conf.size, 2)), conf]))


def with_n_valid(n, total=15):
    return pose_with([0.9] * n + [0.1] * (total - n))


def test_all_confident():
    assert count_valid_keypoints(pose_with(np.ones(15))) == 15


def test_none_confident():
    assert count_valid_keypoints(pose_with(np.zeros(15))) == 0


@pytest.mark.parametrize("n, expected", [(15, True), (11, True), (10, False), (0, False)])
def test_gate_is_strict(n, expected):
    assert reid_is_valid(with_n_valid(n)) is expected


def test_confidence_equal_to_gamma_is_not_visible():
    assert count_valid_keypoints(pose_with([0.2] * 15)) == 0


def test_random_vectors_match_linear_scan(rng):
    cfg = OcclusionConfig()
    conf = rng.uniform(0, 1, (500, 15))
    mask = valid_mask(conf, cfg)
    for row, m in zip(conf, mask):
        n = linear_count_above(row, 0.2)
        assert count_valid_keypoints(pose_with(row), cfg) == n
        assert m == (n > 10)


def test_wrong_length_is_a_stream_error():
    with pytest.raises(StreamFormatError, match="keypoints"):
        count_valid_keypoints(pose_with(np.ones(14)))
    with pytest.raises(StreamFormatError):
        valid_mask(np.ones((2, 14)))


def test_config_validation():
    with pytest.raises(ConfigError):
        OcclusionConfig(gamma_valid=1.5)
    with pytest.raises(ConfigError):
        OcclusionConfig(theta_valid=16)


def test_nan_confidence_counts_as_invisible():
    conf = np.ones((1, 15))
    conf[0, :5] = np.nan
    assert not valid_mask(conf)[0]
