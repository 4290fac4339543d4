import numpy as np

from occtrack.geometry import Box, Pose
from occtrack.records import Detection, FrameObservations
from occtrack.simulator import keypoint_template

DIM = 8


def unit(i, dim=DIM):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


def template_pose(box, conf=1.0, n=15):
    """Template keypoints laid into ``box`` with a constant confidence."""
    t = keypoint_template(n)
    x0, y0, x1, y1 = box
    xy = np.stack([x0 + t[:, 0] * (x1 - x0), y0 + t[:, 1] * (y1 - y0)], 1)
    return Pose(np.column_stack([xy, np.full(n, float(conf))]))


def det(box, feature, conf=1.0, track_id=None, score=1.0):
    return Detection.create(Box(*box), template_pose(box, conf), feature, score=score, track_id=track_id)


def frame(i, dets, seq="s"):
    return FrameObservations(seq, i, list(dets))
