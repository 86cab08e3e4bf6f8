# scripts/test_frontend.py
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agents.pipeline import dump
from lang import ast_nodes as A
from lang.errors import (
    AmbiguousLabel, ArityError, GtSyntaxError, GtTypeError, IllegalCharacter, LabelNotFound, MixedAccessError,
    UnknownOption, UnknownSchedulingFunction,
)
from lang.labels import Label, find_all, resolve_label
from lang.parser import parse_source
from lang.printer import format_program
from lang.schedule_parser import DEFAULT_GRAIN, Schedule, ScheduleCall, parse_schedule_text
from lang.semantics import check_semantics
from lang.tokens import TokenType, tokenize

from scripts.helpers import HEADER, compile_app, read_app


# ---------------------------------------------------------------- lexer

def test_tokenize_labels_reductions_and_comments():
    toks = tokenize("#s1# x min= y; % trailing\n// whole line\nz asyncMax= 1;")
    kinds = [(t.kind, t.value) for t in toks]
    assert kinds[0] == (TokenType.LABEL, "s1")
    assert (TokenType.OP, "min=") in kinds
    assert (TokenType.OP, "asyncMax=") in kinds
    assert all(t.value not in ("%", "//", "trailing") for t in toks)
    assert toks[-1].kind == TokenType.EOF
    assert [t.line for t in toks if t.value == "z"] == [3]


def test_empty_source_is_just_eof():
    toks = tokenize("")
    assert len(toks) == 1 and toks[0].kind == TokenType.EOF


def test_min_equals_equals_is_not_a_reduction():
    values = [t.value for t in tokenize("min == 1")]
    assert values[:2] == ["min", "=="]


def test_illegal_character_reports_line_and_column():
    with pytest.raises(IllegalCharacter) as exc:
        tokenize("element Vertex end\n  $")
    assert exc.value.line == 2 and exc.value.col == 3
    assert str(exc.value).startswith("2:3: illegal character")


# ---------------------------------------------------------------- parser

def test_parse_bfs_program():
    ir, schedule = parse_source(read_app("bfs.gt"))
    assert [d.name for d in ir.vector_decls] == ["parent"]
    assert ir.func("toFilter").output is not None
    assert len(schedule) == 0
    chains = [n for n in A.walk(A.ProgramIR((), (), ir.main)) if isinstance(n, A.EdgeSetApply)]
    assert len(chains) == 1
    chain = chains[0]
    assert chain.apply_func == "updateEdge"
    assert chain.dst_filter == "toFilter"
    assert chain.modified and chain.tracked == "parent"
    # third argument true turns deduplication off
    assert not chain.dedup


def test_syntax_error_lists_expected_tokens():
    with pytest.raises(GtSyntaxError) as exc:
        parse_source("element end")
    err = exc.value
    assert (err.line, err.col) == (1, 9)
    assert "identifier" in err.expected
    assert "(expected one of: identifier)" in str(err)


def test_unterminated_function_points_at_end_of_input():
    with pytest.raises(GtSyntaxError) as exc:
        parse_source(HEADER + "func main()\n    var x : int = 1;\n")
    assert "end of input" in str(exc.value)


def test_inline_schedule_section():
    source = HEADER + """
func noop(src : Vertex, dst : Vertex)
end
func main()
    #s1# edges.apply(noop);
end
schedule:
    program->configApplyDirection("s1", "DensePull");
"""
    ir, schedule = parse_source(source)
    assert len(schedule) == 1
    assert schedule.calls[0] == ScheduleCall("configApplyDirection", label="s1", config="DensePull")


# ---------------------------------------------------------------- scheduling language

def test_parse_tuned_schedule_file():
    schedule = parse_schedule_text(read_app("prdelta_tuned.sched"))
    funcs = [c.func for c in schedule.calls]
    assert funcs == ["fuseFields", "configApplyDirection", "configApplyParallelization",
                     "configApplyDenseVertexSet", "configApplyNumSSG"]
    dense = schedule.calls[3]
    assert (dense.config, dense.vertexset, dense.direction) == ("bitvector", "src-vertexset", "DensePull")
    ssg = schedule.calls[4]
    assert ssg.num_segments == 4 and ssg.direction == "DensePull"
    assert schedule.calls[0].fields == ("Delta", "OutDegree")


def test_schedule_text_reparses_to_the_same_calls():
    schedule = parse_schedule_text(read_app("pr_ec_fused.sched"))
    text = schedule.to_text()
    assert text.startswith("program->fuseFields(")
    assert parse_schedule_text(text) == schedule


def test_empty_schedule_renders_empty():
    assert Schedule().to_text() == ""
    assert len(Schedule().extend(parse_schedule_text('program->configApplyDirection("s1","DensePull");'))) == 1


def test_leading_schedule_keyword_is_tolerated():
    schedule = parse_schedule_text('schedule:\nprogram->configApplyNUMA("s1", "static-parallel");')
    assert schedule.calls[0].config == "static-parallel"


def test_dense_vertexset_options_in_any_order():
    a = parse_schedule_text('program->configApplyDenseVertexSet("s1", "DensePull", "dst-vertexset", "bitvector");')
    b = parse_schedule_text('program->configApplyDenseVertexSet("s1", "bitvector", "dst-vertexset", "DensePull");')
    assert a.calls == b.calls


def test_parallelization_grain_is_optional():
    call = parse_schedule_text('program->configApplyParallelization("s1", "dynamic-vertex-parallel");').calls[0]
    assert call.grain is None
    call = parse_schedule_text('program->configApplyParallelization("s1", "dynamic-vertex-parallel", 64);').calls[0]
    assert call.grain == 64
    assert DEFAULT_GRAIN == 256


@pytest.mark.parametrize("text, error", [
    ('program->configApplyMagic("s1", "x");', UnknownSchedulingFunction),
    ('program->configApplyDirection("s1", "Sideways");', UnknownOption),
    ('program->configApplyParallelization("s1", "warp-parallel");', UnknownOption),
    ('program->configApplyDirection("s1");', ArityError),
    ('program->configApplyNumSSG("s1", "fixed-vertex-count");', ArityError),
    ('program->splitForLoop("l1", "a", "b");', ArityError),
    ('program->configApplyParallelization("s1", "serial", 0);', UnknownOption),
    ('program configApplyDirection("s1", "DensePull");', GtSyntaxError),
])
def test_bad_schedule_calls(text, error):
    with pytest.raises(error):
        parse_schedule_text(text)


def test_schedule_error_carries_position():
    with pytest.raises(UnknownOption) as exc:
        parse_schedule_text('program\n    ->configApplyDirection("s1", "Sideways");')
    assert exc.value.line == 2


# ---------------------------------------------------------------- semantics

def test_unused_function_is_a_warning():
    source = HEADER + """
func unused(v : Vertex)
end
func main()
end
"""
    ir, _ = parse_source(source)
    assert check_semantics(ir) == ["function 'unused' is never used"]


def test_read_and_reduce_of_one_vector_is_rejected():
    source = HEADER + """
rank : vector{Vertex}(double) = 1.0;
func updateEdge(src : Vertex, dst : Vertex)
    rank[dst] += rank[src];
end
func main()
    #s1# edges.apply(updateEdge);
end
"""
    ir, _ = parse_source(source)
    with pytest.raises(MixedAccessError) as exc:
        check_semantics(ir)
    assert exc.value.vector == "rank" and exc.value.func == "updateEdge"


@pytest.mark.parametrize("body, fragment", [
    ("var x : int = true;", "initializer of 'x'"),
    ("break;", "break outside a loop"),
    ("var x : int = y;", "undefined name 'y'"),
    ("while 1\n    end", "while condition must be bool"),
])
def test_type_errors(body, fragment):
    ir, _ = parse_source(HEADER + f"func main()\n    {body}\nend\n")
    with pytest.raises(GtTypeError) as exc:
        check_semantics(ir)
    assert fragment in str(exc.value)


def test_duplicate_label_in_one_block():
    source = HEADER + """
func noop(src : Vertex, dst : Vertex)
end
func main()
    #s1# edges.apply(noop);
    #s1# edges.apply(noop);
end
"""
    ir, _ = parse_source(source)
    with pytest.raises(GtTypeError, match="duplicate label"):
        check_semantics(ir)


def test_all_sample_programs_check_cleanly():
    for name in ("bfs", "prdelta", "pagerank", "pr_ec", "sssp", "cc", "cc_async", "bc", "cf"):
        ir, _ = parse_source(read_app(f"{name}.gt"))
        check_semantics(ir)


@pytest.mark.parametrize("name", ["bfs", "prdelta", "pr_ec"])
def test_printed_programs_reparse(name):
    ir, _ = parse_source(read_app(f"{name}.gt"))
    text = format_program(ir)
    again, _ = parse_source(text)
    assert format_program(again) == text
    assert again.funcs == ir.funcs


def test_fused_source_shows_name_nodes():
    text = dump(compile_app("pr_ec", "pr_ec_fused"), "source")
    assert "#l3# for i in 0:maxIters" in text
    assert "#l1# namenode" in text and "#l2# namenode" in text
    parse_source(text)


# ---------------------------------------------------------------- labels

def test_scoped_labels_resolve_through_loops():
    ir, _ = parse_source(read_app("pr_ec.gt"))
    handle = resolve_label(ir, "l1:s1")
    assert A.traversal_of(handle.stmt).apply_func == "updateEdge"
    handle = resolve_label(ir, "l2:s1")
    assert A.traversal_of(handle.stmt).apply_func == "updateEdgeEigenVector"


def test_bare_label_shared_by_two_loops_is_ambiguous():
    ir, _ = parse_source(read_app("pr_ec.gt"))
    assert len(find_all(ir, "s1")) == 2
    with pytest.raises(AmbiguousLabel):
        resolve_label(ir, "s1")


def test_missing_label():
    ir, _ = parse_source(read_app("pr_ec.gt"))
    with pytest.raises(LabelNotFound) as exc:
        resolve_label(ir, "l9")
    assert str(exc.value) == "label 'l9' not found"


@given(st.lists(st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True), min_size=1, max_size=4))
def test_label_paths_round_trip(segments):
    text = ":".join(segments)
    assert str(Label.parse(text)) == text
    assert Label.parse(text).path == tuple(segments)
