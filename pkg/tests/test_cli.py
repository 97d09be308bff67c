import numpy as np
import pytest

from mgtpc.cli import run
from mgtpc.codec_pipeline import read_ppm, write_ppm


@pytest.fixture(scope="module")
def weights_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("w") / "tiny.mgtw"
    assert run(["init-weights", "--variant", "tiny", "--seed", "7",
                "-o", str(path)]) == 0
    return str(path)


@pytest.fixture(scope="module")
def sample_ppm(tmp_path_factory):
    rng = np.random.default_rng(5)
    path = tmp_path_factory.mktemp("img") / "in.ppm"
    write_ppm(path, rng.integers(0, 256, (12, 18, 3), dtype=np.uint8))
    return str(path)


def kv_lines(capsys):
    out = capsys.readouterr().out
    pairs = {}
    for line in out.strip().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            pairs[k] = v
    return pairs


class TestInitWeights:
    def test_reports_config(self, weights_file, capsys, tmp_path):
        out = tmp_path / "w2.mgtw"
        assert run(["init-weights", "--variant", "tiny", "--seed", "7",
                    "-o", str(out)]) == 0
        info = kv_lines(capsys)
        assert info["config"] == "tiny"
        assert info["seed"] == "7"
        with open(weights_file, "rb") as a, open(out, "rb") as b:
            assert a.read() == b.read()


class TestEncodeDecode:
    def test_round_trip(self, weights_file, sample_ppm, tmp_path, capsys):
        bit = tmp_path / "out.mgpc"
        assert run(["encode", "-i", sample_ppm, "-w", weights_file,
                    "-o", str(bit)]) == 0
        info = kv_lines(capsys)
        assert int(info["bytes"]) == bit.stat().st_size
        assert abs(float(info["bpp"]) - 8 * bit.stat().st_size / (12 * 18)) < 1e-5

        rec = tmp_path / "rec.ppm"
        assert run(["decode", "-i", str(bit), "-w", weights_file,
                    "-o", str(rec)]) == 0
        assert read_ppm(rec).shape == (12, 18, 3)

    def test_roundtrip_matches_encode_arithmetic(self, weights_file, sample_ppm,
                                                 tmp_path, capsys):
        bit = tmp_path / "out.mgpc"
        assert run(["encode", "-i", sample_ppm, "-w", weights_file,
                    "-o", str(bit)]) == 0
        enc = kv_lines(capsys)
        assert run(["roundtrip", "-i", sample_ppm, "-w", weights_file]) == 0
        rt = kv_lines(capsys)
        assert abs(float(rt["bpp"]) - float(enc["bpp"])) < 1e-6
        assert float(rt["psnr"]) > 0.0

    def test_variant_mismatch_exit_1(self, weights_file, sample_ppm, tmp_path):
        assert run(["encode", "-i", sample_ppm, "-w", weights_file,
                    "-o", str(tmp_path / "x"), "--variant", "tiny-V1"]) == 1

    def test_missing_input_exit_2(self, weights_file, tmp_path):
        assert run(["encode", "-i", str(tmp_path / "nope.ppm"),
                    "-w", weights_file, "-o", str(tmp_path / "x")]) == 2

    def test_corrupt_weights_exit_2(self, sample_ppm, tmp_path):
        bad = tmp_path / "bad.mgtw"
        bad.write_bytes(b"MGTW garbage")
        assert run(["encode", "-i", sample_ppm, "-w", str(bad),
                    "-o", str(tmp_path / "x")]) == 2


class TestInspect:
    def test_fields(self, weights_file, sample_ppm, tmp_path, capsys):
        bit = tmp_path / "out.mgpc"
        run(["encode", "-i", sample_ppm, "-w", weights_file, "-o", str(bit)])
        capsys.readouterr()
        assert run(["inspect", "-i", str(bit)]) == 0
        info = kv_lines(capsys)
        assert info["width"] == "18" and info["height"] == "12"
        assert info["config_id"] == "16"
        assert bit.stat().st_size == 18 + int(info["z_bytes"]) + int(info["y_bytes"])

    def test_truncated_exit_2(self, weights_file, sample_ppm, tmp_path, capsys):
        bit = tmp_path / "out.mgpc"
        run(["encode", "-i", sample_ppm, "-w", weights_file, "-o", str(bit)])
        cut = tmp_path / "cut.mgpc"
        cut.write_bytes(bit.read_bytes()[:-5])
        assert run(["inspect", "-i", str(cut)]) == 2
        assert "truncated" in capsys.readouterr().err


class TestMetricsCommands:
    def test_psnr_identical(self, sample_ppm, capsys):
        assert run(["metrics", "-a", sample_ppm, "-b", sample_ppm]) == 0
        assert kv_lines(capsys)["psnr"] == "100.0000"

    def test_bdrate_identical_csvs(self, tmp_path, capsys):
        csv = tmp_path / "rd.csv"
        csv.write_text("0.1,30\n0.25,33\n0.55,36\n1.1,39\n")
        assert run(["bdrate", "--anchor", str(csv), "--test", str(csv)]) == 0
        assert capsys.readouterr().out.strip() == "0.00"

    def test_bdrate_too_few_points_exit_1(self, tmp_path):
        csv = tmp_path / "rd.csv"
        csv.write_text("0.1,30\n0.25,33\n")
        assert run(["bdrate", "--anchor", str(csv), "--test", str(csv)]) == 1


class TestUsage:
    def test_no_command_exit_1(self, capsys):
        assert run([]) == 1
        capsys.readouterr()

    def test_unknown_command_exit_1(self, capsys):
        assert run(["squash"]) == 1
        capsys.readouterr()
