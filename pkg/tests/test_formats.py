import numpy as np
import pytest

from morphforge import formats


def test_synv_round_trip_bit_exact(rng):
    for shape in [(1, 4), (7, 32), (100, 8)]:
        arr = rng.standard_normal(shape).astype(np.float32)
        out = formats.read_synv(formats.write_synv(arr))
        assert out.dtype == np.float32
        assert np.array_equal(out, arr)


def test_synv_one_dimensional_input():
    arr = np.array([1.5, -2.25, 0.0], dtype=np.float32)
    out = formats.read_synv(formats.write_synv(arr))
    assert out.shape == (1, 3)
    assert np.array_equal(out[0], arr)


def test_synv_header_fields():
    data = formats.write_synv(np.zeros((3, 5), dtype=np.float32))
    assert data[:4] == b"SYNV"
    assert int.from_bytes(data[4:6], "little") == 1
    assert int.from_bytes(data[8:12], "little") == 3
    assert int.from_bytes(data[12:16], "little") == 5


def test_synv_rejects_non_finite():
    with pytest.raises(ValueError):
        formats.write_synv(np.array([np.nan, 1.0]))


def test_synv_rejects_bad_magic():
    data = bytearray(formats.write_synv(np.zeros((1, 2), dtype=np.float32)))
    data[0] = ord("X")
    with pytest.raises(ValueError, match="magic"):
        formats.read_synv(bytes(data))


def test_synv_rejects_truncated_payload():
    data = formats.write_synv(np.zeros((2, 3), dtype=np.float32))
    with pytest.raises(ValueError, match="length"):
        formats.read_synv(data[:-4])


def test_landmark_file_round_trip(tmp_path, rng):
    pts = rng.uniform(0, 255, (68, 2))
    path = tmp_path / "lm.json"
    formats.save_landmarks(path, pts)
    assert np.allclose(formats.load_landmarks(path), pts)


def test_landmark_file_rejects_wrong_count(tmp_path):
    with pytest.raises(ValueError):
        formats.save_landmarks(tmp_path / "lm.json", np.zeros((67, 2)))


def test_pose_file_round_trip(tmp_path):
    path = tmp_path / "pose.json"
    formats.save_pose(path, 1.5, -2.0, 0.25)
    d = formats.load_pose(path)
    assert d == {"yaw": 1.5, "pitch": -2.0, "roll": 0.25}


def test_score_csvs(tmp_path):
    att = tmp_path / "attempts.csv"
    att.write_text("morph_id,slot,attempt,frs_id,score\nm1,1,1,arcface,0.8\nm1,2,1,arcface,0.7\n")
    rows = formats.read_attempt_scores(att)
    assert rows[0] == {"morph_id": "m1", "slot": 1, "attempt": 1,
                       "frs_id": "arcface", "score": 0.8}

    det = tmp_path / "det.csv"
    det.write_text("id,label,score\na,bonafide,0.9\nb,morph,0.2\n")
    bona, attack = formats.read_detection_scores(det)
    assert bona == [0.9] and attack == [0.2]

    qual = tmp_path / "q.csv"
    qual.write_text("id,subset,score\na,syn,0.4\nb,syn,0.5\nc,real,0.6\n")
    groups = formats.read_quality_scores(qual)
    assert groups == {"syn": [0.4, 0.5], "real": [0.6]}


def test_detection_scores_reject_unknown_label(tmp_path):
    det = tmp_path / "det.csv"
    det.write_text("id,label,score\na,genuine,0.9\n")
    with pytest.raises(ValueError, match="label"):
        formats.read_detection_scores(det)
