import numpy as np
import pytest

from mgtpc import entropy_model as em
from mgtpc.codec_pipeline import (Header, HEADER_LEN, decode_image,
                                  encode_image, estimate_rate, pad_image,
                                  read_ppm, simulate_rd_point, write_ppm)
from mgtpc.config import preset
from mgtpc.errors import ContractViolation, DecodeError
from mgtpc.transforms import analysis, hyper_analysis, hyper_synthesis, synthesis
from mgtpc.weights_io import init_weights


def rand_img(rng, h, w):
    return rng.integers(0, 256, (h, w, 3), dtype=np.uint8)


class TestHeader:
    def test_round_trip(self):
        h = Header(width=768, height=512, config_id=3, z_bytes=10, y_bytes=999)
        assert Header.parse(h.pack()) == h

    def test_length(self):
        assert len(Header(1, 1, 0, 0, 0).pack()) == HEADER_LEN

    def test_bad_magic(self):
        with pytest.raises(DecodeError, match="magic"):
            Header.parse(b"NOPE" + b"\x00" * 20)

    def test_truncated(self):
        with pytest.raises(DecodeError, match="header"):
            Header.parse(b"MGPC\x01")

    def test_oversize_dims_rejected(self):
        with pytest.raises(ContractViolation):
            Header(width=70000, height=4, config_id=0, z_bytes=0, y_bytes=0).pack()


class TestPadImage:
    def test_already_divisible(self, rng):
        img = rand_img(rng, 128, 256)
        assert pad_image(img, 128) is img

    def test_pad_amount(self, rng):
        img = rand_img(rng, 1, 1)
        out = pad_image(img, 256)
        assert out.shape == (256, 256, 3)

    def test_replicates_edges(self, rng):
        img = rand_img(rng, 3, 5)
        out = pad_image(img, 8)
        np.testing.assert_array_equal(out[:3, :5], img)
        assert np.all(out[3:, :5] == img[2:3, :])
        assert np.all(out[:3, 5:] == img[:, 4:5])


@pytest.fixture(scope="module")
def tiny_codec():
    cfg = preset("tiny")
    return init_weights(cfg, 7), cfg


class TestRoundTrip:
    def test_dims_and_bpp(self, tiny_codec, rng):
        params, cfg = tiny_codec
        img = rand_img(rng, 20, 28)
        stream = encode_image(img, params, cfg)
        rec, stats = decode_image(stream, params, cfg)
        assert rec.shape == img.shape and rec.dtype == np.uint8
        assert stats["bpp"] == 8.0 * len(stream) / (20 * 28)
        assert abs(stats["bpp"] - stats["bpp_y"] - stats["bpp_z"]
                   - 8.0 * HEADER_LEN / (20 * 28)) < 1e-12

    def test_encode_deterministic(self, tiny_codec, rng):
        params, cfg = tiny_codec
        img = rand_img(rng, 9, 13)
        assert encode_image(img, params, cfg) == encode_image(img, params, cfg)

    def test_one_pixel_image(self, tiny_codec):
        params, cfg = tiny_codec
        img = np.array([[[12, 200, 77]]], dtype=np.uint8)
        rec, _ = decode_image(encode_image(img, params, cfg), params, cfg)
        assert rec.shape == (1, 1, 3)

    def test_bypass_bitstream_oracle(self, tiny_codec, rng):
        # decoded pixels must match the in-memory forward pass that skips
        # the range coder entirely
        params, cfg = tiny_codec
        img = rand_img(rng, 24, 16)
        rec, _ = decode_image(encode_image(img, params, cfg), params, cfg)

        x = pad_image(img, cfg.pad_multiple).astype(np.float32) / np.float32(255.0)
        x = np.ascontiguousarray(x.transpose(2, 0, 1)[None])
        y = analysis(x, params, cfg)
        z = hyper_analysis(y, params, cfg)
        q_z, z_hat = em.quantize_st(z, 0.0)
        mu, _ = hyper_synthesis(z_hat, params, cfg)
        q_y, _ = em.quantize_st(y, mu)
        y_hat = (q_y + mu.astype(np.float64)).astype(np.float32)
        x_hat = synthesis(y_hat, params, cfg)
        ref = np.clip(x_hat[0].transpose(1, 2, 0).astype(np.float64), 0.0, 1.0)
        ref = np.round(ref * 255.0).astype(np.uint8)[:24, :16]
        np.testing.assert_array_equal(rec, ref)

    def test_config_mismatch(self, tiny_codec, rng):
        params, cfg = tiny_codec
        stream = encode_image(rand_img(rng, 8, 8), params, cfg)
        other = preset("tiny-V1")
        with pytest.raises(DecodeError, match="config"):
            decode_image(stream, init_weights(other, 7), other)

    def test_truncated_stream(self, tiny_codec, rng):
        params, cfg = tiny_codec
        stream = encode_image(rand_img(rng, 8, 8), params, cfg)
        with pytest.raises(DecodeError, match="truncated"):
            decode_image(stream[:-3], params, cfg)

    def test_bad_image_rejected(self, tiny_codec):
        params, cfg = tiny_codec
        with pytest.raises(ContractViolation, match="uint8"):
            encode_image(np.zeros((4, 4, 3), np.float32), params, cfg)


class TestRateAndRd:
    def test_estimate_close_to_actual(self, tiny_codec, rng):
        params, cfg = tiny_codec
        img = rand_img(rng, 32, 32)
        stream = encode_image(img, params, cfg)
        _, stats = decode_image(stream, params, cfg)
        bpp_y, bpp_z = estimate_rate(img, params, cfg)
        est = bpp_y + bpp_z
        actual = stats["bpp_y"] + stats["bpp_z"]
        assert actual <= est * 1.001 + 64 * 8 / (32 * 32)

    def test_simulate_consistency(self, tiny_codec, rng):
        params, cfg = tiny_codec
        img = rand_img(rng, 16, 16)
        point, loss = simulate_rd_point(img, params, cfg, lam=0.013)
        stream = encode_image(img, params, cfg)
        rec, stats = decode_image(stream, params, cfg)
        assert point.bpp == 8.0 * len(stream) / 256
        expected = em.rd_loss(img.astype(np.float64), rec.astype(np.float64),
                              stats["bpp_y"], stats["bpp_z"], 0.013)
        assert loss == expected


class TestPpm:
    def test_round_trip(self, tmp_path, rng):
        img = rand_img(rng, 5, 7)
        p = tmp_path / "x.ppm"
        write_ppm(p, img)
        np.testing.assert_array_equal(read_ppm(p), img)

    def test_comments_and_whitespace(self, tmp_path):
        p = tmp_path / "c.ppm"
        pixels = bytes(range(2 * 1 * 3))
        p.write_bytes(b"P6\n# a comment\n2 1\n# another\n255\n" + pixels)
        img = read_ppm(p)
        assert img.shape == (1, 2, 3)
        assert img.tobytes() == pixels

    def test_rejects_other_maxval(self, tmp_path):
        p = tmp_path / "m.ppm"
        p.write_bytes(b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00")
        with pytest.raises(ContractViolation, match="maxval"):
            read_ppm(p)

    def test_rejects_truncated(self, tmp_path):
        p = tmp_path / "t.ppm"
        p.write_bytes(b"P6\n2 2\n255\n\x00\x00\x00")
        with pytest.raises(ContractViolation, match="truncated"):
            read_ppm(p)

    def test_rejects_wrong_magic(self, tmp_path):
        p = tmp_path / "p5.ppm"
        p.write_bytes(b"P5\n1 1\n255\n\x00")
        with pytest.raises(ContractViolation, match="P6"):
            read_ppm(p)
