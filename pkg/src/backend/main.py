from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field
from typing import Literal, Optional
import sys
import os
import asyncio
import logging
import math
import traceback
from concurrent.futures import ThreadPoolExecutor

from dotenv import load_dotenv

# Add parent directory to path to import the watermarking packages
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dsp.denoise import WienerParams
from watermark.channel import ChannelSpec
from watermark.embedding import DEFAULT_EPS, EmbedConfig
from watermark.errors import (
    CapacityError,
    ExtractionIntegrityError,
    FormatError,
    MissingFileError,
    WatermarkError,
)
from watermark_service import WatermarkService

load_dotenv()

logging.basicConfig(
    level=getattr(logging, os.getenv("WM_LOG", "INFO").upper(), logging.INFO),
    format='%(asctime)s - %(levelname)s - %(message)s',
)
LOG = logging.getLogger(__name__)

app = FastAPI(title="speech-watermark")

# Setup CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],  # In production, replace with specific origin
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Thread pool executor for blocking DSP work
executor = ThreadPoolExecutor(max_workers=int(os.getenv("WM_WORKERS", "4")))


class EmbedRequest(BaseModel):
    host_path: str
    payload_path: str
    out_path: str
    mode: Literal["verbatim", "symmetric"] = os.getenv("WM_DEFAULT_MODE", "symmetric")
    eps: float = Field(default=DEFAULT_EPS, gt=0)
    channel: Optional[int] = None
    encoding: Literal["float64", "pcm16"] = "float64"
    denoise: Optional[WienerParams] = None


class ExtractRequest(BaseModel):
    in_path: str
    out_path: str
    k: Optional[int] = None
    mode: Optional[Literal["verbatim", "symmetric"]] = None
    strict: bool = False
    eps: Optional[float] = None
    payload_rate: Optional[int] = None


class AttackRequest(BaseModel):
    in_path: str
    out_path: str
    spec: ChannelSpec


class EvaluateRequest(BaseModel):
    host_path: str
    payload_path: str
    json_path: str
    snr_list: list[float]
    seeds: int = Field(default=10, ge=1)
    seed: int = 0
    mode: Literal["verbatim", "symmetric"] = "symmetric"
    eps: float = Field(default=DEFAULT_EPS, gt=0)
    channel: Optional[int] = None
    plot_data_path: Optional[str] = None


class InspectRequest(BaseModel):
    in_path: str
    host_path: Optional[str] = None
    channel: Optional[int] = None


def _json_safe(value):
    # JSON has no Infinity/NaN
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


async def _run(func, *args, **kwargs):
    """Run blocking work in the pool and translate domain errors to HTTP codes."""
    loop = asyncio.get_event_loop()
    try:
        return await loop.run_in_executor(executor, lambda: func(*args, **kwargs))
    except MissingFileError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except CapacityError as e:
        raise HTTPException(status_code=422, detail={"message": str(e), "k": e.k, "k_max": e.k_max})
    except ExtractionIntegrityError as e:
        raise HTTPException(status_code=409, detail=str(e))
    except (FormatError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except (WatermarkError, OSError) as e:
        LOG.error(f"{func.__name__} failed: {e}")
        LOG.error(traceback.format_exc())
        raise HTTPException(status_code=500, detail=str(e))


@app.post("/embed")
async def embed_watermark(request: EmbedRequest):
    cfg = EmbedConfig(mode=request.mode, eps=request.eps, denoise=request.denoise)
    result = await _run(
        WatermarkService.embed_files,
        request.host_path,
        request.payload_path,
        request.out_path,
        cfg,
        channel=request.channel,
        encoding=request.encoding,
    )
    return _json_safe(result)


@app.post("/extract")
async def extract_watermark(request: ExtractRequest):
    return await _run(
        WatermarkService.extract_files,
        request.in_path,
        request.out_path,
        k=request.k,
        mode=request.mode,
        strict=request.strict,
        eps=request.eps,
        payload_rate=request.payload_rate,
    )


@app.post("/attack")
async def attack_watermark(request: AttackRequest):
    return _json_safe(await _run(WatermarkService.attack_files, request.in_path, request.out_path, request.spec))


@app.post("/evaluate")
async def evaluate_watermark(request: EvaluateRequest):
    if not request.snr_list:
        raise HTTPException(status_code=400, detail="snr_list cannot be empty")
    cfg = EmbedConfig(mode=request.mode, eps=request.eps)
    reports, summary = await _run(
        WatermarkService.evaluate_files,
        request.host_path,
        request.payload_path,
        cfg,
        request.snr_list,
        request.seeds,
        request.json_path,
        base_seed=request.seed,
        channel=request.channel,
        # trials already run inside this pool's worker thread
        workers=1,
        plot_data_path=request.plot_data_path,
    )
    return _json_safe({
        "trials": len(reports),
        "json_path": request.json_path,
        "plot_data_path": request.plot_data_path,
        "summary": summary.to_dict(orient="records"),
    })


@app.post("/inspect")
async def inspect_watermark(request: InspectRequest):
    return await _run(WatermarkService.inspect_file, request.in_path, host_path=request.host_path, channel=request.channel)


if __name__ == "__main__":

    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
