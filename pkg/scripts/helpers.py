# scripts/helpers.py - shared paths and compile/run shortcuts for the test suite
import os

from agents.pipeline import compile_file, compile_program, run_compiled
from services.graph_store import Graph
from services.state import EngineOptions

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
APPS = os.path.join(ROOT, "apps")
SAMPLES = os.path.join(ROOT, "samples")

FULL_ACCEPTANCE = os.environ.get("GRAPHWEAVE_FULL_ACCEPTANCE") == "1"

HEADER = """element Vertex end
element Edge end
const edges : edgeset{Edge}(Vertex,Vertex) = load(argv[1]);
const vertices : vertexset{Vertex} = edges.getVertices();
"""


def app_path(name: str) -> str:
    return os.path.join(APPS, name)


def sample_path(name: str) -> str:
    return os.path.join(SAMPLES, name)


def read_app(name: str) -> str:
    with open(app_path(name)) as f:
        return f.read()


def compile_app(program: str, schedule=None, mode: str = "strict"):
    """apps/<program>.gt with an optional apps/<schedule>.sched."""
    sched = app_path(f"{schedule}.sched") if schedule else None
    return compile_file(app_path(f"{program}.gt"), sched, mode)


def run_app(program: str, graph: Graph, schedule=None, threads: int = 1, overrides=None, **options):
    compiled = compile_app(program, schedule)
    return run_compiled(compiled, graph, EngineOptions(threads=threads, **options), overrides)


def run_source(source: str, graph: Graph, schedule=None, overrides=None, threads: int = 1):
    compiled = compile_program(source, schedule)
    return run_compiled(compiled, graph, EngineOptions(threads=threads), overrides)
