"""Command-line front end for the codec and metrics tools.

Exit codes: 0 success, 1 contract error, 2 I/O / stream / weight-file error.
Machine-readable output is `key=value`, one per line.
"""

import argparse
import sys

from . import codec_pipeline as cp
from . import metrics as mx
from . import weights_io as wio
from .config import PRESETS, preset
from .errors import ContractViolation, DecodeError, WeightFileError


def _load_weights(path, variant=None):
    params, cfg, seed = wio.load_file(path)
    if variant is not None:
        wanted = preset(variant)
        if wanted.config_id != cfg.config_id:
            raise ContractViolation(
                f"weight file {path} carries config {cfg.name!r} "
                f"(id {cfg.config_id}), but --variant requested {variant!r}")
    return params, cfg


def _cmd_encode(args):
    params, cfg = _load_weights(args.weights, args.variant)
    img = cp.read_ppm(args.input)
    stream = cp.encode_image(img, params, cfg)
    with open(args.output, "wb") as f:
        f.write(stream)
    print(f"bytes={len(stream)}")
    print(f"bpp={8.0 * len(stream) / (img.shape[0] * img.shape[1]):.6f}")
    return 0


def _cmd_decode(args):
    params, cfg = _load_weights(args.weights)
    with open(args.input, "rb") as f:
        stream = f.read()
    img, stats = cp.decode_image(stream, params, cfg)
    cp.write_ppm(args.output, img)
    print(f"bpp={stats['bpp']:.6f}")
    return 0


def _cmd_roundtrip(args):
    params, cfg = _load_weights(args.weights, args.variant)
    img = cp.read_ppm(args.input)
    point, loss = cp.simulate_rd_point(img, params, cfg, args.lam)
    print(f"bpp={point.bpp:.6f}")
    print(f"psnr={point.psnr:.4f}")
    print(f"loss={loss:.6f}")
    return 0


def _cmd_metrics(args):
    a = cp.read_ppm(args.image_a)
    b = cp.read_ppm(args.image_b)
    print(f"psnr={mx.psnr(a, b):.4f}")
    return 0


def _cmd_bdrate(args):
    anchor = mx.read_rd_csv(args.anchor)
    test = mx.read_rd_csv(args.test)
    print(f"{mx.bd_rate(anchor, test):.2f}")
    return 0


def _cmd_init_weights(args):
    cfg = preset(args.variant)
    params = wio.init_weights(cfg, args.seed)
    wio.save_file(args.output, params, cfg, args.seed)
    print(f"config={cfg.name}")
    print(f"seed={args.seed}")
    print(f"tensors={len(params)}")
    return 0


def _cmd_inspect(args):
    with open(args.input, "rb") as f:
        data = f.read()
    header = cp.Header.parse(data)
    expected = cp.HEADER_LEN + header.z_bytes + header.y_bytes
    if len(data) != expected:
        raise DecodeError(
            f"truncated stream: expected {expected} bytes, got {len(data)}")
    print(f"width={header.width}")
    print(f"height={header.height}")
    print(f"config_id={header.config_id}")
    print(f"z_bytes={header.z_bytes}")
    print(f"y_bytes={header.y_bytes}")
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import create_app

    app = create_app(args.weights)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgtpc", description="Learned image compression codec and RD tools")
    sub = parser.add_subparsers(dest="command", required=True)
    variants = sorted(PRESETS)

    p = sub.add_parser("encode", help="compress a PPM image to a bitstream")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-w", "--weights", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--variant", choices=variants)
    p.set_defaults(fn=_cmd_encode)

    p = sub.add_parser("decode", help="decompress a bitstream to a PPM image")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-w", "--weights", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=_cmd_decode)

    p = sub.add_parser("roundtrip", help="in-memory encode+decode with RD stats")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-w", "--weights", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0483)
    p.add_argument("--variant", choices=variants)
    p.set_defaults(fn=_cmd_roundtrip)

    p = sub.add_parser("metrics", help="PSNR between two PPM images")
    p.add_argument("-a", "--image-a", required=True)
    p.add_argument("-b", "--image-b", required=True)
    p.set_defaults(fn=_cmd_metrics)

    p = sub.add_parser("bdrate", help="BD-rate of test vs anchor RD curves")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(fn=_cmd_bdrate)

    p = sub.add_parser("init-weights", help="write a seeded weight file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=variants, default="full")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=_cmd_init_weights)

    p = sub.add_parser("inspect", help="print bitstream header fields")
    p.add_argument("-i", "--input", required=True)
    p.set_defaults(fn=_cmd_inspect)

    p = sub.add_parser("serve", help="run the HTTP codec service")
    p.add_argument("-w", "--weights", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=_cmd_serve)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; map to the contract-error code
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DecodeError, WeightFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
