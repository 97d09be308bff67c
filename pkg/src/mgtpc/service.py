"""FastAPI front end wrapping the codec for long-running / multi-client use.

Weights are loaded once at startup; images travel as binary PPM bodies and
bitstreams as raw octet streams.  The CLI remains a direct, in-process
client of the core package.
"""

import base64
import tempfile
from typing import List, Optional, Tuple

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import codec_pipeline as cp
from . import metrics as mx
from . import weights_io as wio
from .errors import ContractViolation, DecodeError, MgtpcError, WeightFileError


class HealthResponse(BaseModel):
    status: str
    config: Optional[str] = None


class RdStatsResponse(BaseModel):
    bpp: float
    psnr: float
    loss: float


class PsnrRequest(BaseModel):
    image_a: str = Field(description="base64-encoded binary PPM")
    image_b: str = Field(description="base64-encoded binary PPM")


class PsnrResponse(BaseModel):
    psnr: float


class BdRateRequest(BaseModel):
    anchor: List[Tuple[float, float]] = Field(description="(bpp, psnr) pairs")
    test: List[Tuple[float, float]]


class BdRateResponse(BaseModel):
    bd_rate_percent: float


def _ppm_from_bytes(data: bytes):
    with tempfile.NamedTemporaryFile(suffix=".ppm") as f:
        f.write(data)
        f.flush()
        return cp.read_ppm(f.name)


def _ppm_to_bytes(img) -> bytes:
    with tempfile.NamedTemporaryFile(suffix=".ppm") as f:
        cp.write_ppm(f.name, img)
        f.seek(0)
        return f.read()


def create_app(weights_path=None) -> FastAPI:
    app = FastAPI(title="mgtpc codec service")
    state = {"params": None, "cfg": None}
    if weights_path is not None:
        params, cfg, _ = wio.load_file(weights_path)
        state["params"], state["cfg"] = params, cfg

    def _require_weights():
        if state["params"] is None:
            raise ContractViolation("no weights loaded; start with a weight file")
        return state["params"], state["cfg"]

    @app.exception_handler(MgtpcError)
    async def _mgtpc_error(request: Request, exc: MgtpcError):
        status = 400 if isinstance(exc, ContractViolation) else 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health():
        cfg = state["cfg"]
        return HealthResponse(status="ok", config=cfg.name if cfg else None)

    @app.post("/encode")
    async def encode(request: Request):
        params, cfg = _require_weights()
        img = _ppm_from_bytes(await request.body())
        stream = cp.encode_image(img, params, cfg)
        n_px = img.shape[0] * img.shape[1]
        return Response(content=stream, media_type="application/octet-stream",
                        headers={"X-Bpp": f"{8.0 * len(stream) / n_px:.6f}"})

    @app.post("/decode")
    async def decode(request: Request):
        params, cfg = _require_weights()
        img, stats = cp.decode_image(await request.body(), params, cfg)
        return Response(content=_ppm_to_bytes(img), media_type="image/x-portable-pixmap",
                        headers={"X-Bpp": f"{stats['bpp']:.6f}"})

    @app.post("/roundtrip", response_model=RdStatsResponse)
    async def roundtrip(request: Request,
                        lam: float = Query(0.0483, alias="lambda", gt=0)):
        params, cfg = _require_weights()
        img = _ppm_from_bytes(await request.body())
        point, loss = cp.simulate_rd_point(img, params, cfg, lam)
        return RdStatsResponse(bpp=point.bpp, psnr=point.psnr, loss=loss)

    @app.post("/metrics/psnr", response_model=PsnrResponse)
    def metrics_psnr(req: PsnrRequest):
        a = _ppm_from_bytes(base64.b64decode(req.image_a))
        b = _ppm_from_bytes(base64.b64decode(req.image_b))
        return PsnrResponse(psnr=mx.psnr(a, b))

    @app.post("/metrics/bdrate", response_model=BdRateResponse)
    def metrics_bdrate(req: BdRateRequest):
        return BdRateResponse(bd_rate_percent=mx.bd_rate(req.anchor, req.test))

    return app
