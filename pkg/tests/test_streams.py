import io
import json

import numpy as np
import pytest

from occtrack.errors import StreamFormatError
from occtrack.simulator import ScenarioConfig, generate
from occtrack.streams import format_frame, read_stream, write_stream
from occtrack.tracker import TrackerConfig, track_frames


def record(n_kp=15, dim=4, **over):
    d = {"box": [0, 0, 10, 20], "score": 0.5, "keypoints": [[1, 2, 0.5]] * n_kp, "reid": [1.0] + [0.0] * (dim - 1)}
    d.update(over)
    return {"seq": "s", "frame": 0, "detections": [d]}


def read_text(text, **kw):
    return list(read_stream(io.StringIO(text), **kw))


def test_empty_file_yields_nothing(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert list(read_stream(p)) == []


def test_parses_fields():
    (f,) = read_text(json.dumps(record()) + "\n")
    d = f.detections[0]
    assert (f.seq, f.frame) == ("s", 0)
    assert d.box.as_list() == [0, 0, 10, 20]
    assert d.score == 0.5 and len(d.pose) == 15
    assert d.track_id is None


def test_reid_is_normalised():
    (f,) = read_text(json.dumps(record(reid=[3.0, 4.0, 0.0, 0.0])))
    np.testing.assert_allclose(f.detections[0].reid, [0.6, 0.8, 0, 0])


def test_score_defaults_to_one():
    rec = record()
    del rec["detections"][0]["score"]
    assert read_text(json.dumps(rec))[0].detections[0].score == 1.0


def test_unknown_fields_ignored():
    rec = record(colour="red")
    rec["camera"] = 3
    assert len(read_text(json.dumps(rec))) == 1


def test_wrong_keypoint_count_names_the_field():
    with pytest.raises(StreamFormatError, match="keypoints") as e:
        read_text(json.dumps(record(n_kp=14)))
    assert "line 1" in str(e.value)


@pytest.mark.parametrize(
    "over, field",
    [
        ({"box": [0, 0, 10]}, "box"),
        ({"box": [10, 0, 0, 20]}, "box"),
        ({"score": 1.5}, "score"),
        ({"reid": [0.0, 0.0, 0.0, 0.0]}, "reid"),
        ({"reid": ["a", 0, 0, 0]}, "reid"),
        ({"id": "7"}, "id"),
        ({"occluded": 1}, "occluded"),
    ],
)
def test_bad_fields_are_named(over, field):
    with pytest.raises(StreamFormatError, match=f"field '{field}'"):
        read_text(json.dumps(record(**over)))


def test_error_reports_line_number():
    good = json.dumps(record())
    bad = json.dumps(record(score="x")).replace('"frame": 0', '"frame": 1')
    with pytest.raises(StreamFormatError, match="line 3"):
        read_text(good + "\n\n" + bad + "\n")


def test_invalid_json():
    with pytest.raises(StreamFormatError, match="line 1"):
        read_text("{nope\n")


def test_non_monotone_frames():
    a = json.dumps(record())
    with pytest.raises(StreamFormatError, match="frame"):
        read_text(a + "\n" + a + "\n")


def test_interleaved_sequences_are_fine():
    a, b = record(), record()
    b["seq"] = "t"
    c = record()
    c["frame"] = 1
    assert len(read_text("\n".join(json.dumps(r) for r in (a, b, c)))) == 3


def test_reid_dimension_fixed_by_first_record():
    a = record(dim=4)
    b = record(dim=5)
    b["frame"] = 1
    with pytest.raises(StreamFormatError, match="reid"):
        read_text(json.dumps(a) + "\n" + json.dumps(b))


def test_round_trip_is_byte_identical():
    det, gt = generate(ScenarioConfig(seed=4, n_frames=20, detector_fp_rate=0.5, reid_dim=16))
    tracked = list(track_frames(det, TrackerConfig(reid_dim=16)))
    for frames in (det, gt, tracked):
        buf = io.StringIO()
        write_stream(frames, buf)
        text = buf.getvalue()
        again = io.StringIO()
        write_stream(read_stream(io.StringIO(text)), again)
        assert again.getvalue() == text


def test_single_line_round_trip_preserves_values():
    line = format_frame(read_text(json.dumps(record(reid=[0.1, 0.2, 0.3, 0.4])))[0])
    (f,) = read_text(line)
    assert format_frame(f) == line


def test_canonical_key_order():
    line = format_frame(read_text(json.dumps(record()))[0])
    assert line.startswith('{"seq":"s","frame":0,"detections":[{"box":')
