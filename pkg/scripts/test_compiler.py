# scripts/test_compiler.py
import pytest

from agents.pipeline import compile_program, dump
from compiler.dependence import (
    ASYNC_REDUCTION, ATOMIC, BUFFER_MERGE, NO_SYNC, READ_ONLY, REDUCTION, WRITE_ONLY, classify_accesses,
)
from compiler.gis import BV, FVC, SR, WSP, default_plan, parse_gis_vector, parse_plan_line, render_plan
from compiler.lowering import LENIENT
from lang.errors import (
    AlreadyFused, CompileError, IncompatibleChains, IncompatibleRanges, InvalidCombination, LabelNotFound,
    MixedElementKinds, NonSiblingLoops, NotAForLoop, SplitOutOfRange, UnknownVector,
)
from lang.parser import parse_source

from scripts.helpers import HEADER, compile_app, read_app

PRDELTA_TUNED_PULL = "⟨S[SR,(FVC,num_vert/4)], B[WSP,(FVC,256)], O[dst,SR], I[src,SR,BV]⟩"
PRDELTA_TUNED_PUSH = "⟨⊥, B[WSP,(FVC,256)], O[src,SR,SA], I[dst,SR]⟩"


def _prdelta(schedule: str, mode: str = "strict"):
    return compile_program(read_app("prdelta.gt"), schedule, "prdelta", mode)


def _sync(compiled, variant: str):
    plan = compiled.lowered.plan("s1")
    return plan.sync_for(variant)


# ---------------------------------------------------------------- GIS lowering

def test_default_plan_is_serial_sparse_push():
    compiled = compile_program(read_app("prdelta.gt"), None, "prdelta")
    assert dump(compiled, "ir") == "s1: ⟨⊥, ⊥, O[src,SR,SA], I[dst,SR]⟩\n"
    stmt = compiled.lowered.plan("s1").stmt
    plan = default_plan(stmt, "s1")
    assert render_plan(plan) == "s1: ⟨⊥, ⊥, O[src,SR,SA], I[dst,SR]⟩"
    assert plan.applied_calls == () and not plan.hybrid


def test_tuned_hybrid_plan_renders_both_variants():
    compiled = compile_app("prdelta", "prdelta_tuned")
    assert dump(compiled, "ir") == f"s1: {PRDELTA_TUNED_PULL} | {PRDELTA_TUNED_PUSH}\n"
    plan = compiled.lowered.plan("s1")
    assert [v.name for v in plan.variants] == ["DensePull", "SparsePush"]
    assert compiled.lowered.layout.bucket("Delta") == "AoS(fused_struct0)"
    assert compiled.lowered.layout.bucket("Rank") == "SoA"


HYBRID = 'program->configApplyDirection("s1", "DensePull-SparsePush")' \
         '->configApplyParallelization("s1", "dynamic-vertex-parallel", 1024)'
BITVECTOR = '->configApplyDenseVertexSet("s1", "bitvector", "src-vertexset", "DensePull")'
SEGMENTS = '->configApplyNumSSG("s1", "fixed-vertex-count", 8, "DensePull")'
PUSH_1024 = "⟨⊥, B[WSP,(FVC,1024)], O[src,SR,SA], I[dst,SR]⟩"


@pytest.mark.parametrize("schedule, expected", [
    ('program->configApplyDirection("s1", "DensePull");', "s1: ⟨⊥, ⊥, O[dst,SR], I[src,SR,BA]⟩"),
    (HYBRID + ";", f"s1: ⟨⊥, B[WSP,(FVC,1024)], O[dst,SR], I[src,SR,BA]⟩ | {PUSH_1024}"),
    (HYBRID + BITVECTOR + ";", f"s1: ⟨⊥, B[WSP,(FVC,1024)], O[dst,SR], I[src,SR,BV]⟩ | {PUSH_1024}"),
    (HYBRID + BITVECTOR + SEGMENTS + ";",
     f"s1: ⟨S[SR,(FVC,num_vert/8)], B[WSP,(FVC,1024)], O[dst,SR], I[src,SR,BV]⟩ | {PUSH_1024}"),
])
def test_schedule_calls_build_up_the_plan(schedule, expected):
    assert dump(_prdelta(schedule), "ir") == expected + "\n"


def test_ascii_dump_mode():
    compiled = compile_program(read_app("prdelta.gt"), None, "prdelta")
    assert dump(compiled, "ir", ascii_only=True) == "s1: <_, _, O[src,SR,SA], I[dst,SR]>\n"


def test_dump_lines_parse_back():
    compiled = compile_app("prdelta", "prdelta_tuned")
    for ascii_only in (False, True):
        line = dump(compiled, "ir", ascii_only).strip()
        label, vectors = parse_plan_line(line)
        assert label == "s1"
        assert vectors == [v.gis for v in compiled.lowered.plan("s1").variants]


def test_parse_gis_vector_fields():
    gis = parse_gis_vector(PRDELTA_TUNED_PULL)
    assert gis.ssg.partition == FVC and gis.ssg.size == 4 and gis.ssg.parallel == SR
    assert gis.bsg.parallel == WSP and gis.bsg.size == 256
    assert gis.outer.direction == "dst" and gis.inner.filter == BV
    assert not gis.is_push


def test_parse_gis_vector_rejects_garbage():
    with pytest.raises(CompileError):
        parse_gis_vector("⟨⊥, ⊥, O[src,XX], I[dst,SR]⟩")


@pytest.mark.parametrize("config, expected", [
    ("dynamic-vertex-parallel", "⟨⊥, B[WSP,(FVC,64)], O[src,SR,SA], I[dst,SR]⟩"),
    ("static-vertex-parallel", "⟨⊥, B[SP,(FVC,64)], O[src,SR,SA], I[dst,SR]⟩"),
    ("edge-aware-dynamic-vertex-parallel", "⟨⊥, B[WSP,(EVC,64)], O[src,SR,SA], I[dst,SR]⟩"),
    ("edge-parallel", "⟨⊥, ⊥, O[src,SR,SA], I[dst,WSP]⟩"),
    ("serial", "⟨⊥, ⊥, O[src,SR,SA], I[dst,SR]⟩"),
])
def test_parallelization_options(config, expected):
    compiled = _prdelta(f'program->configApplyParallelization("s1", "{config}", 64);')
    assert str(compiled.lowered.plan("s1").variants[0].gis) == expected


def test_dense_push_filters_and_edge_aware_ssg():
    compiled = _prdelta('program->configApplyDirection("s1", "DensePush")'
                        '->configApplyNumSSG("s1", "edge-aware-vertex-count", 3)'
                        '->configApplyNUMA("s1", "dynamic-parallel");')
    gis = compiled.lowered.plan("s1").variants[0].gis
    assert gis.render() == "⟨S[WSP,(EVC,num_edges/3)], ⊥, O[src,SR,BA], I[dst,SR]⟩"


def test_bfs_pull_filters_on_the_source_side():
    compiled = compile_program(read_app("bfs.gt"), 'program->configApplyDirection("s1", "DensePull");', "bfs")
    assert dump(compiled, "ir") == "s1: ⟨⊥, ⊥, O[dst,SR], I[src,SR,BA]⟩\n"


def test_last_direction_call_wins():
    compiled = _prdelta('program->configApplyDirection("s1", "DensePull")'
                        '->configApplyDirection("s1", "DensePush");')
    plan = compiled.lowered.plan("s1")
    assert plan.direction == "DensePush"
    assert [v.name for v in plan.variants] == ["DensePush"]


def test_direction_qualified_call_only_touches_its_side():
    compiled = _prdelta('program->configApplyDirection("s1", "DensePush-SparsePush")'
                        '->configApplyParallelization("s1", "static-vertex-parallel", 16, "DensePush");')
    dense, sparse = compiled.lowered.plan("s1").variants
    assert dense.gis.bsg is not None and dense.gis.bsg.size == 16
    assert sparse.gis.bsg is None


@pytest.mark.parametrize("schedule", [
    'program->configApplyParallelization("s1", "serial", "DensePull");',
    'program->configApplyNUMA("s1", "static-parallel");',
    'program->configApplyParallelization("s1", "dynamic-vertex-parallel")'
    '->configApplyParallelization("s1", "static-vertex-parallel");',
])
def test_conflicting_calls_fail_in_strict_mode(schedule):
    with pytest.raises(InvalidCombination):
        _prdelta(schedule)


def test_lenient_mode_drops_conflicting_calls():
    compiled = _prdelta('program->configApplyNUMA("s1", "static-parallel")'
                        '->configApplyParallelization("s1", "dynamic-vertex-parallel");', LENIENT)
    assert compiled.dropped == ['configApplyNUMA("s1","static-parallel")']
    plan = compiled.lowered.plan("s1")
    assert plan.dropped_calls == ('configApplyNUMA("s1","static-parallel")',)
    assert plan.variants[0].gis.bsg is not None


def test_schedule_for_unknown_label():
    with pytest.raises(LabelNotFound):
        _prdelta('program->configApplyDirection("s9", "DensePull");')


def test_plan_lookup_of_a_loop_label():
    compiled = compile_app("pr_ec", "pr_ec")
    assert compiled.lowered.plan("l1:s1").apply_func == "updateEdge"
    with pytest.raises(CompileError, match="not an edgeset apply"):
        compiled.lowered.plan("l1")


# ---------------------------------------------------------------- dependence / synchronization

def test_classify_apply_function():
    ir, _ = parse_source(read_app("prdelta.gt"))
    classes = classify_accesses(ir.func("updateEdge"))
    assert classes["DeltaSum"].kind == REDUCTION and classes["DeltaSum"].op == "sum"
    assert classes["Delta"].kind == READ_ONLY and classes["OutDegree"].kind == READ_ONLY
    assert str(classes["DeltaSum"]) == "Reduction(sum)"


def test_bfs_claim_becomes_compare_and_swap():
    ir, _ = parse_source(read_app("bfs.gt"))
    assert classify_accesses(ir.func("updateEdge"))["parent"].kind == WRITE_ONLY
    compiled = compile_program(read_app("bfs.gt"), 'program->configApplyDirection("s1", "DensePull");', "bfs")
    sync = compiled.lowered.plan("s1").sync_for("DensePull")
    parent = sync.access("parent")
    assert parent.kind == ASYNC_REDUCTION and parent.op == "cas" and parent.expected == -1
    assert sync.for_vector("parent") == ATOMIC
    assert sync.dedup == "none"
    assert sync.early_exit


def test_modified_chain_without_opt_out_deduplicates():
    compiled = compile_program(read_app("sssp.gt"), None, "sssp")
    sync = compiled.lowered.plan("s1").sync_for("SparsePush")
    assert sync.dedup == "visited-flag-CAS"


def test_push_reduction_needs_atomics_only_when_vertex_parallel():
    serial = _sync(_prdelta(None), "SparsePush")
    assert str(serial.distance("DeltaSum")) == "⟨*,0⟩"
    assert serial.for_vector("DeltaSum") == NO_SYNC
    parallel = _sync(_prdelta('program->configApplyParallelization("s1", "dynamic-vertex-parallel");'),
                     "SparsePush")
    assert parallel.for_vector("DeltaSum") == ATOMIC
    assert parallel.for_vector("Delta") == NO_SYNC


def test_pull_reduction_stays_unsynchronized():
    sync = _sync(_prdelta('program->configApplyDirection("s1", "DensePull")'
                          '->configApplyParallelization("s1", "dynamic-vertex-parallel");'), "DensePull")
    assert str(sync.distance("DeltaSum")) == "⟨0,*⟩"
    assert sync.for_vector("DeltaSum") == NO_SYNC


def test_parallel_segments_merge_through_local_buffers():
    sync = _sync(_prdelta('program->configApplyDirection("s1", "DensePull")'
                          '->configApplyParallelization("s1", "dynamic-vertex-parallel")'
                          '->configApplyNumSSG("s1", "fixed-vertex-count", 4)'
                          '->configApplyNUMA("s1", "static-parallel");'), "DensePull")
    assert str(sync.distance("DeltaSum")) == "⟨*,*⟩"
    assert sync.for_vector("DeltaSum") == BUFFER_MERGE


def test_hybrid_variants_get_their_own_sync():
    compiled = compile_app("prdelta", "prdelta_tuned")
    assert _sync(compiled, "DensePull").for_vector("DeltaSum") == NO_SYNC
    assert _sync(compiled, "SparsePush").for_vector("DeltaSum") == ATOMIC


def test_dump_deps_format():
    compiled = _prdelta('program->configApplyParallelization("s1", "dynamic-vertex-parallel");')
    assert dump(compiled, "deps").splitlines() == [
        "s1 [SparsePush] ⟨⊥, B[WSP,(FVC,256)], O[src,SR,SA], I[dst,SR]⟩",
        "  Delta  ⟨0,0⟩  ReadOnly  NoSync",
        "  DeltaSum  ⟨*,0⟩  Reduction(sum)  AtomicReduction",
        "  OutDegree  ⟨0,0⟩  ReadOnly  NoSync",
        "  dedup=none early_exit=false",
    ]


def test_dump_plan_shows_loop_nest_and_sync():
    compiled = compile_program(read_app("bfs.gt"), 'program->configApplyDirection("s1", "DensePull");', "bfs")
    text = dump(compiled, "plan")
    assert "for dst in vertices:" in text
    assert "if not toFilter(dst): continue" in text
    assert "for src in in_neighbors(dst):" in text
    assert "parent:AtomicReduction" in text
    assert "break  # early exit" in text


# ---------------------------------------------------------------- transforms

def test_pr_ec_unfused_has_two_traversals():
    compiled = compile_app("pr_ec", "pr_ec")
    assert [p.label for p in compiled.plans] == ["l1:s1", "l2:s1"]


def test_pr_ec_fused_has_one_kernel():
    compiled = compile_app("pr_ec", "pr_ec_fused")
    assert len(compiled.plans) == 1
    plan = compiled.plans[0]
    assert plan.label == "l3:l1:s1"
    assert plan.apply_func == "fused_kernel"
    assert plan.direction == "DensePull"
    fused = compiled.lowered.ir.func("fused_kernel")
    assert len(fused.body) == 2
    group = compiled.lowered.layout.groups[0]
    assert group.name == "fused_struct0"
    assert set(group.members) == {"old_rank", "out_degree", "old_ec"}
    assert compiled.lowered.layout.bucket("new_rank") == "SoA"


def _pr_ec(schedule: str):
    return compile_program(read_app("pr_ec.gt"), schedule, "pr_ec")


@pytest.mark.parametrize("schedule, error", [
    ('program->fuseForLoop("l1", "l1", "l3");', NonSiblingLoops),
    ('program->fuseForLoop("l1:s1", "l2", "l3");', NotAForLoop),
    ('program->fuseApplyFunctions("l1:s1", "l1:s1", "k");', IncompatibleChains),
    ('program->fuseFields({"old_rank", "missing"});', UnknownVector),
    ('program->fuseFields({"old_rank"})->fuseFields({"old_rank", "new_rank"});', AlreadyFused),
])
def test_transform_errors(schedule, error):
    with pytest.raises(error):
        _pr_ec(schedule)


LITERAL_LOOPS = HEADER + """
a : vector{Vertex}(int) = 0;
b : vector{Vertex}(int) = 0;
func bumpA(src : Vertex, dst : Vertex)
    a[dst] += 1;
end
func bumpB(src : Vertex, dst : Vertex)
    b[dst] += 1;
end
func main()
    #l1# for i in 0:10
        #s1# edges.apply(bumpA);
    end
    #l2# for i in %s
        #s1# edges.apply(bumpB);
    end
end
"""


def test_split_point_outside_a_literal_range():
    with pytest.raises(SplitOutOfRange):
        compile_program(LITERAL_LOOPS % "0:10", 'program->splitForLoop("l1", "a", "b", 99);')


@pytest.mark.parametrize("second_range, fused_labels", [
    ("0:10", ["l3:l1:s1", "l3:l2:s1"]),
    ("2:12", ["l3_prologue:l1:s1", "l3:l1:s1", "l3:l2:s1", "l3_epilogue:l2:s1"]),
])
def test_fuse_loops_with_literal_ranges(second_range, fused_labels):
    compiled = compile_program(LITERAL_LOOPS % second_range, 'program->fuseForLoop("l1", "l2", "l3");')
    assert [p.label for p in compiled.plans] == fused_labels


@pytest.mark.parametrize("second_range", ["10:20", "0:maxIters"])
def test_fuse_loops_with_incompatible_ranges(second_range):
    source = (LITERAL_LOOPS % second_range).replace("a : vector", "const maxIters : int = 5;\na : vector")
    with pytest.raises(IncompatibleRanges):
        compile_program(source, 'program->fuseForLoop("l1", "l2", "l3");')


def test_fuse_fields_rejects_mixed_element_kinds():
    source = HEADER.replace("element Edge end", "element Edge end\nelement Item end") + """
a : vector{Vertex}(int) = 0;
b : vector{Item}(int) = 0;
func main()
end
"""
    with pytest.raises(MixedElementKinds):
        compile_program(source, 'program->fuseFields({"a", "b"});')


def test_split_loop_keeps_both_halves_addressable():
    compiled = _pr_ec('program->splitForLoop("l1", "l1a", "l1b", 4)'
                      '->configApplyDirection("l1:l1a:s1", "DensePull");')
    labels = [p.label for p in compiled.plans]
    assert labels == ["l1:l1a:s1", "l1:l1b:s1", "l2:s1"]
    assert compiled.lowered.plan("l1:l1a:s1").direction == "DensePull"
    assert compiled.lowered.plan("l1:l1b:s1").direction == "SparsePush"
