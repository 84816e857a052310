"""Tests for tag file reading and writing."""

import numpy as np
import pytest

from spdcsim.tagio import FORMAT_VERSION, MAGIC, read_tags, write_tags


def random_streams(seed, n_a=500, n_b=400):
    rng = np.random.default_rng(seed)
    tags_a = np.sort(rng.integers(0, 10**12, n_a))
    tags_b = np.sort(rng.integers(0, 10**12, n_b))
    return tags_a, tags_b


class TestRoundTrip:
    def test_binary(self, tmp_path):
        tags_a, tags_b = random_streams(1)
        path = tmp_path / "tags.bin"
        write_tags(path, tags_a, tags_b, fmt="bin")
        got_a, got_b = read_tags(path)
        assert np.array_equal(got_a, tags_a)
        assert np.array_equal(got_b, tags_b)

    def test_csv(self, tmp_path):
        tags_a, tags_b = random_streams(2, n_a=80, n_b=60)
        path = tmp_path / "tags.csv"
        write_tags(path, tags_a, tags_b, fmt="csv")
        assert path.read_text().splitlines()[0] == "detector,t_ps"
        got_a, got_b = read_tags(path)
        assert np.array_equal(got_a, tags_a)
        assert np.array_equal(got_b, tags_b)

    def test_empty_streams(self, tmp_path):
        path = tmp_path / "tags.bin"
        write_tags(path, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
        got_a, got_b = read_tags(path)
        assert got_a.size == 0
        assert got_b.size == 0

    def test_merged_file_time_sorted(self, tmp_path):
        tags_a, tags_b = random_streams(3)
        path = tmp_path / "tags.bin"
        write_tags(path, tags_a, tags_b)
        payload = path.read_bytes()[16:]
        rec = np.frombuffer(payload, dtype=np.dtype([("d", "u1"), ("t", "<u8")]))
        assert np.all(np.diff(rec["t"].astype(np.int64)) >= 0)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "tags.bin"
        write_tags(path, np.array([5]), np.array([7]))
        raw = path.read_bytes()
        assert raw[:8] == MAGIC
        assert int.from_bytes(raw[8:12], "little") == FORMAT_VERSION
        assert len(raw) == 16 + 2 * 9


class TestErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 20)
        with pytest.raises(ValueError, match="bad magic|bad csv header"):
            read_tags(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "tags.bin"
        path.write_bytes(MAGIC + (99).to_bytes(4, "little") + b"\x00" * 4)
        with pytest.raises(ValueError, match="version"):
            read_tags(path)

    def test_truncated_payload(self, tmp_path):
        tags_a, tags_b = random_streams(4, n_a=10, n_b=10)
        path = tmp_path / "tags.bin"
        write_tags(path, tags_a, tags_b)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(ValueError, match="truncated"):
            read_tags(path)

    def test_bad_csv_header(self, tmp_path):
        path = tmp_path / "tags.csv"
        path.write_text("time,det\n1,A\n")
        with pytest.raises(ValueError, match="bad csv header"):
            read_tags(path)

    def test_bad_csv_row(self, tmp_path):
        path = tmp_path / "tags.csv"
        path.write_text("detector,t_ps\nC,123\n")
        with pytest.raises(ValueError, match="bad tag row"):
            read_tags(path)

    def test_negative_tags_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="nonnegative"):
            write_tags(tmp_path / "t.bin", np.array([-5]), np.array([3]))

    def test_bad_format_name(self, tmp_path):
        with pytest.raises(ValueError, match="fmt"):
            write_tags(tmp_path / "t.xyz", np.array([1]), np.array([2]), fmt="json")
