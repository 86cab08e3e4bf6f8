# app.py - FastAPI service over the compile / run / verify / tune pipeline
import json
import logging
import os
import tempfile
from typing import Any, Dict, Optional

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from agents import autotuner_agent, verifier_agent
from agents.pipeline import (DUMP_KINDS, compile_program, dump, load_input_graph, run_compiled, stats_document,
                             vector_tsv)
from lang.errors import CompileError, GraphError, GraphWeaveError
from lang.schedule_parser import parse_schedule_text
from services import analysis_utils
from services.state import EngineOptions

logger = logging.getLogger(__name__)

app = FastAPI(title="graphweave")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _text(upload: Optional[UploadFile]) -> Optional[str]:
    if upload is None:
        return None
    return upload.file.read().decode("utf-8")


def save_upload_temp(upload: UploadFile, suffix: str = "") -> str:
    """Graph loaders dispatch on the file suffix, so the upload keeps its extension."""
    ext = os.path.splitext(upload.filename or "")[1] or suffix
    tf = tempfile.NamedTemporaryFile(delete=False, suffix=ext)
    tf.write(upload.file.read())
    tf.flush()
    tf.close()
    return tf.name


def _program_name(upload: UploadFile) -> str:
    return os.path.splitext(os.path.basename(upload.filename or "program"))[0]


def _http_error(e: Exception) -> HTTPException:
    if isinstance(e, (CompileError, GraphError)):
        return HTTPException(status_code=400, detail=str(e))
    logger.exception("[App] request failed")
    return HTTPException(status_code=500, detail=str(e))


def _load_graph(graph: UploadFile, weighted: Optional[bool], symmetrize: bool):
    path = save_upload_temp(graph, suffix=".el")
    try:
        return load_input_graph(path, weighted, symmetrize)
    finally:
        os.remove(path)


def _overrides(raw: Optional[str]) -> Dict[str, Any]:
    if not raw:
        return {}
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise CompileError(f"overrides must be a JSON object: {e}")
    if not isinstance(doc, dict):
        raise CompileError("overrides must be a JSON object")
    return doc


@app.get("/health")
async def health():
    return {"status": "ok", "bucket": analysis_utils.BUCKET or None}


@app.post("/run")
async def run(program: UploadFile = File(...), graph: UploadFile = File(...),
              schedule: Optional[UploadFile] = File(None), weighted: Optional[bool] = Form(None),
              symmetrize: bool = Form(False), overrides: Optional[str] = Form(None),
              threads: int = Form(1), max_vertices: int = Form(1000)):
    try:
        compiled = compile_program(_text(program), _text(schedule), _program_name(program))
        g = _load_graph(graph, weighted, symmetrize)
        result = run_compiled(compiled, g, EngineOptions(threads=threads), _overrides(overrides))
        vectors = {name: values[:max_vertices].tolist() for name, values in result.vectors().items()}
        return JSONResponse(content={"vectors": vectors, "stats": stats_document(compiled, g, result)})
    except GraphWeaveError as e:
        raise _http_error(e)


@app.post("/run/tsv", response_class=PlainTextResponse)
async def run_tsv(program: UploadFile = File(...), graph: UploadFile = File(...), vector: str = Form(...),
                  schedule: Optional[UploadFile] = File(None), weighted: Optional[bool] = Form(None),
                  symmetrize: bool = Form(False), overrides: Optional[str] = Form(None)):
    try:
        compiled = compile_program(_text(program), _text(schedule), _program_name(program))
        g = _load_graph(graph, weighted, symmetrize)
        result = run_compiled(compiled, g, EngineOptions(), _overrides(overrides))
        return vector_tsv(result, vector)
    except GraphWeaveError as e:
        raise _http_error(e)


@app.post("/dump/{kind}", response_class=PlainTextResponse)
async def dump_kind(kind: str, program: UploadFile = File(...), schedule: Optional[UploadFile] = File(None),
                    ascii_only: bool = Form(False)):
    if kind not in DUMP_KINDS:
        raise HTTPException(status_code=404, detail=f"unknown dump '{kind}' (choose from {', '.join(DUMP_KINDS)})")
    try:
        compiled = compile_program(_text(program), _text(schedule), _program_name(program))
        return dump(compiled, kind, ascii_only)
    except GraphWeaveError as e:
        raise _http_error(e)


@app.post("/verify")
async def verify(program: UploadFile = File(...), graph: UploadFile = File(...),
                 schedule: Optional[UploadFile] = File(None), weighted: Optional[bool] = Form(None),
                 symmetrize: bool = Form(False), overrides: Optional[str] = Form(None),
                 save: bool = Form(False)):
    try:
        compiled = compile_program(_text(program), None, _program_name(program))
        g = _load_graph(graph, weighted, symmetrize)
        if schedule is not None:
            schedules = [(_program_name(schedule), parse_schedule_text(_text(schedule)))]
        else:
            schedules = verifier_agent.schedule_matrix(compiled)
        report = verifier_agent.verify(compiled, g, schedules, EngineOptions(), _overrides(overrides))
        out = report.to_dict()
        if save:
            out["stored_at"] = analysis_utils.upload_json_to_gcs(out, f"verify/{compiled.name}.json")
        return JSONResponse(content=out)
    except GraphWeaveError as e:
        raise _http_error(e)


@app.post("/tune")
async def tune(program: UploadFile = File(...), graph: UploadFile = File(...), label: str = Form(...),
               trials: int = Form(10), seed: int = Form(0), strategy: str = Form("hill"),
               space: Optional[str] = Form(None), weighted: Optional[bool] = Form(None),
               symmetrize: bool = Form(False), overrides: Optional[str] = Form(None)):
    try:
        compiled = compile_program(_text(program), None, _program_name(program))
        g = _load_graph(graph, weighted, symmetrize)
        space_obj = autotuner_agent.ScheduleSpace.from_dict(json.loads(space)) if space else None
        cfg = autotuner_agent.TuneConfig(label=label, trials=trials, seed=seed, strategy=strategy)
        result = autotuner_agent.tune(compiled, g, cfg, space_obj, EngineOptions(), _overrides(overrides))
        out = result.to_dict()
        out["stored_at"] = analysis_utils.upload_json_to_gcs(out, f"tune/{compiled.name}-{seed}.json")
        return JSONResponse(content=out)
    except json.JSONDecodeError as e:
        raise HTTPException(status_code=400, detail=f"space must be JSON: {e}")
    except GraphWeaveError as e:
        raise _http_error(e)
