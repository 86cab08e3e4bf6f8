# services/executor.py
"""
Traversal engine: runs one ExecutionPlan variant as the nested loop S -> B -> O -> I.
- SparsePush: frontier ids, then out-neighbours
- DensePush: every source, membership test, then out-neighbours
- DensePull: every destination (dst filter first), then in-neighbours with a membership
  test on the source; optional early exit once a claim-once CAS succeeded
- hybrid plans pick dense iff |frontier| + sum of its out-degrees > threshold
S-parallel runs one task per segment (chunks serial inside); B-parallel runs chunk tasks;
edge-parallel splits long neighbour lists into spans. Buffered reductions are merged
after the traversal in task order.
"""

import logging
import time
from typing import Callable, Dict, List, Optional, Tuple

from compiler.dependence import BUFFER_MERGE, SyncPlan
from compiler.gis import DENSE_PULL, DENSE_PUSH, SPARSE_PUSH, SR, ExecutionPlan, Variant
from lang.errors import MissingSSGs, VectorNotFound
from services.atomics import buffer_update, claim, merge_value
from services.codegen import FunctionCompiler
from services.frontier import SA, Frontier, frontier_convert
from services.graph_store import Graph, build_bsg_chunks, build_ssgs, chunk_ids
from services.state import Counters, EngineOptions, RuntimeState, TaskContext, TraversalStats
from services.worker_pool import WorkerPool, in_worker

logger = logging.getLogger(__name__)

Adjacency = Tuple[list, list, Optional[list]]


def ssg_key(variant: Variant) -> Tuple[int, str, str]:
    ssg = variant.gis.ssg
    return ssg.size, ssg.partition, "push" if variant.gis.is_push else "pull"


class TraversalEngine:
    def __init__(self, graph: Graph, state: RuntimeState, compiler: FunctionCompiler,
                 options: Optional[EngineOptions] = None, pool: Optional[WorkerPool] = None):
        self.graph = graph
        self.state = state
        self.compiler = compiler
        self.options = options or EngineOptions()
        self.pool = pool or WorkerPool(self.options.threads)
        self.ssgs: Dict[Tuple[int, str, str], List[Adjacency]] = {}

    # ------------------------------------------------------------ setup

    def prepare(self, plans) -> None:
        """Build the segmented subgraphs every S-dimension variant needs."""
        for plan in plans:
            for variant in plan.variants:
                if variant.gis.ssg is None:
                    continue
                key = ssg_key(variant)
                if key not in self.ssgs:
                    segments = build_ssgs(self.graph, key[0], key[1], key[2])
                    self.ssgs[key] = [s.lists for s in segments]

    # ------------------------------------------------------------ entry point

    def run_edgeset_apply(self, plan: ExecutionPlan, from_frontier: Optional[Frontier] = None,
                          to_frontier: Optional[Frontier] = None) -> Optional[Frontier]:
        start = time.perf_counter_ns()
        counters = Counters()
        tracked = plan.tracked_vector
        if tracked is not None and not self.state.is_vector(tracked):
            raise VectorNotFound(f"{plan.display_label}: applyModified tracks unknown vector '{tracked}'")
        variant, sync = self.select_variant(plan, from_frontier)
        if variant.name == SPARSE_PUSH:
            output = self.traverse_sparse_push(plan, variant, sync, from_frontier, to_frontier, counters)
        elif variant.name == DENSE_PUSH:
            output = self.traverse_dense_push(plan, variant, sync, from_frontier, to_frontier, counters)
        else:
            output = self.traverse_dense_pull(plan, variant, sync, from_frontier, to_frontier, counters)
        elapsed = time.perf_counter_ns() - start
        if self.options.collect_stats:
            self.state.record_traversal(TraversalStats(plan.display_label, variant.name, counters, elapsed))
        else:
            self.state.counters.add(counters)
        return output

    def select_variant(self, plan: ExecutionPlan, frontier: Optional[Frontier]) -> Tuple[Variant, SyncPlan]:
        if not plan.hybrid:
            variant = plan.variants[0]
        else:
            active = frontier if frontier is not None else Frontier.full(self.graph.n)
            work = active.size + active.sum_out_degrees(self.graph.out_degree)
            threshold = self.options.threshold_for(self.graph.m)
            variant = plan.variants[0] if work > threshold else plan.variants[1]
            logger.debug("[Executor] %s chose %s (work %d, threshold %d)",
                         plan.display_label, variant.name, work, threshold)
        return variant, plan.sync_for(variant.name)

    # ------------------------------------------------------------ traversal modes

    def traverse_sparse_push(self, plan, variant, sync, from_frontier, to_frontier, counters) -> Optional[Frontier]:
        gis = variant.gis
        frontier = from_frontier if from_frontier is not None else Frontier.full(self.graph.n)
        frontier = self._convert(frontier, SA, counters)
        to_frontier = self._convert(to_frontier, gis.inner.filter, counters)
        ids = frontier.ids().tolist()
        kit = _Kit(self, plan, variant, sync, None, _test(to_frontier))
        src_filter = kit.src_filter
        inner = kit.push_inner

        def body(ctx, adj, lo, hi):
            offsets = adj[0]
            for pos in range(lo, hi):
                s = ids[pos]
                if src_filter is not None and not src_filter(ctx, s):
                    continue
                kit.split(inner, ctx, adj, s, offsets[s], offsets[s + 1])

        if gis.bsg is not None:
            chunks = chunk_ids(ids, self.graph.out_degree_list, gis.bsg.size, gis.bsg.partition)
        else:
            chunks = [(0, len(ids))] if ids else []
        return self._execute(kit, body, chunks, counters)

    def traverse_dense_push(self, plan, variant, sync, from_frontier, to_frontier, counters) -> Optional[Frontier]:
        gis = variant.gis
        from_frontier = self._convert(from_frontier, gis.outer.filter, counters)
        to_frontier = self._convert(to_frontier, gis.inner.filter, counters)
        from_test = _test(from_frontier)
        kit = _Kit(self, plan, variant, sync, from_test, _test(to_frontier))
        src_filter = kit.src_filter
        inner = kit.push_inner

        def body(ctx, adj, lo, hi):
            offsets = adj[0]
            examined = 0
            for s in range(lo, hi):
                examined += 1
                if from_test is not None and not from_test(s):
                    continue
                if src_filter is not None and not src_filter(ctx, s):
                    continue
                kit.split(inner, ctx, adj, s, offsets[s], offsets[s + 1])
            ctx.counters.vertices_examined += examined

        return self._execute(kit, body, self._dense_chunks(gis, "push"), counters)

    def traverse_dense_pull(self, plan, variant, sync, from_frontier, to_frontier, counters) -> Optional[Frontier]:
        gis = variant.gis
        to_frontier = self._convert(to_frontier, gis.outer.filter, counters)
        from_frontier = self._convert(from_frontier, gis.inner.filter, counters)
        to_test = _test(to_frontier)
        kit = _Kit(self, plan, variant, sync, _test(from_frontier), None)
        dst_filter = kit.dst_filter
        inner = kit.pull_inner
        tracking = kit.tracking
        emit = kit.emit

        def body(ctx, adj, lo, hi):
            offsets = adj[0]
            examined = 0
            for d in range(lo, hi):
                examined += 1
                if to_test is not None and not to_test(d):
                    continue
                if dst_filter is not None and not dst_filter(ctx, d):
                    continue
                hit = kit.split(inner, ctx, adj, d, offsets[d], offsets[d + 1])
                if tracking and hit:
                    emit(ctx, d)
            ctx.counters.vertices_examined += examined

        return self._execute(kit, body, self._dense_chunks(gis, "pull"), counters)

    # ------------------------------------------------------------ S / B dimensions

    def _dense_chunks(self, gis, direction: str) -> List[Tuple[int, int]]:
        n = self.graph.n
        if gis.bsg is None:
            return [(0, n)] if n else []
        return build_bsg_chunks((0, n), self.graph, gis.bsg.size, gis.bsg.partition, direction).ranges()

    def _segments(self, variant: Variant) -> List[Adjacency]:
        gis = variant.gis
        if gis.ssg is None:
            return [self.graph.out_lists if gis.is_push else self.graph.in_lists]
        segments = self.ssgs.get(ssg_key(variant))
        if segments is None:
            raise MissingSSGs(f"no segmented subgraphs built for {variant.gis.ssg.render_ssg()}")
        return segments

    def run_with_ssgs(self, kit: "_Kit", body: Callable, chunks, segments: List[Adjacency]) -> List[TaskContext]:
        """S[SR]: segments one after another, chunks per the B tag; S[SP|WSP]: one task per segment."""
        gis = kit.variant.gis
        buffered = kit.buffered

        def segment_task(adj):
            def run():
                ctx = TaskContext(buffered)
                for lo, hi in chunks:
                    body(ctx, adj, lo, hi)
                return ctx
            return run

        def chunk_task(adj, lo, hi):
            def run():
                ctx = TaskContext(buffered)
                body(ctx, adj, lo, hi)
                return ctx
            return run

        if gis.ssg is not None and gis.ssg.is_parallel:
            return self.pool.run(gis.ssg.parallel, [segment_task(adj) for adj in segments])
        tag = gis.bsg.parallel if gis.bsg is not None else SR
        contexts: List[TaskContext] = []
        for adj in segments:
            contexts.extend(self.pool.run(tag, [chunk_task(adj, lo, hi) for lo, hi in chunks]))
        return contexts

    def _execute(self, kit: "_Kit", body: Callable, chunks, counters: Counters) -> Optional[Frontier]:
        segments = self._segments(kit.variant)
        contexts = self.run_with_ssgs(kit, body, chunks, segments)
        if kit.variant.gis.ssg is not None:
            counters.ssg_passes += len(segments)
        out: List[int] = []
        for ctx in contexts:
            counters.add(ctx.counters)
            out.extend(ctx.out)
        if kit.buffered:
            out.extend(self._merge(kit, contexts, counters))
        if not kit.plan.stmt.modified:
            return None
        return Frontier.from_ids(self.graph.n, out)

    def _merge(self, kit: "_Kit", contexts: List[TaskContext], counters: Counters) -> List[int]:
        emitted: List[int] = []
        ctx = TaskContext()
        for vec in kit.buffered:
            op = kit.sync.access(vec).op
            for task in contexts:
                counters.merge_ops += 1
                for key, value in task.buffers[vec].items():
                    v = key[0] if isinstance(key, tuple) else key
                    cont, idx = self.state.container(vec, v)
                    if isinstance(key, tuple):
                        cont, idx = cont[idx], key[1]
                    if merge_value(cont, idx, op, value) and vec == kit.tracked:
                        kit.emit(ctx, v)
        emitted.extend(ctx.out)
        return emitted

    def _convert(self, frontier: Optional[Frontier], tag: Optional[str], counters: Counters) -> Optional[Frontier]:
        if frontier is None or tag is None or frontier.repr == tag:
            return frontier
        counters.frontier_conversions += 1
        logger.debug("[Executor] frontier %s -> %s", frontier.repr, tag)
        return frontier_convert(frontier, tag)

    # ------------------------------------------------------------ vertexset operators

    def run_vertexset_op(self, op: str, frontier: Frontier, func: Optional[str] = None):
        if op == "size":
            return frontier.size
        fn = self.compiler.compile(func).fn
        ctx = TaskContext()
        ids = frontier.ids().tolist()
        if op == "apply":
            for v in ids:
                fn(ctx, v)
            self.state.counters.add(ctx.counters)
            return None
        kept = [v for v in ids if fn(ctx, v)]
        ctx.counters.vertices_examined += len(ids)
        self.state.counters.add(ctx.counters)
        return Frontier.from_ids(self.graph.n, kept)


def _test(frontier: Optional[Frontier]):
    return frontier.member_test() if frontier is not None else None


class _Kit:
    """Compiled functions and per-edge loops for one traversal."""

    def __init__(self, engine: TraversalEngine, plan: ExecutionPlan, variant: Variant, sync: SyncPlan,
                 from_test, to_test):
        compiler = engine.compiler
        self.engine = engine
        self.plan = plan
        self.variant = variant
        self.sync = sync
        self.tracked = plan.tracked_vector
        self.tracking = self.tracked is not None
        self.buffered = tuple(vec for vec, mode in sync.entries if mode == BUFFER_MERGE)
        apply = compiler.compile(plan.apply_func, sync, self.tracked)
        self.apply = apply.fn
        self.weighted = apply.arity == 3
        self.src_filter = compiler.compile(plan.src_filter).fn if plan.src_filter else None
        self.dst_filter = compiler.compile(plan.dst_filter).fn if plan.dst_filter else None
        edge_filter = compiler.compile(plan.edge_filter) if plan.edge_filter else None
        self.edge_filter = edge_filter.fn if edge_filter else None
        self.edge_weighted = edge_filter is not None and edge_filter.arity == 3
        self.from_test = from_test
        self.to_test = to_test
        self.early_exit = sync.early_exit
        self.visited = [False] * engine.graph.n if self.tracking and plan.dedup_enabled else None
        self.edge_parallel = variant.gis.inner.parallel != SR and engine.pool.threads > 1
        self.edge_grain = max(1, variant.edge_grain)
        self.push_inner = self._push_inner()
        self.pull_inner = self._pull_inner()

    def emit(self, ctx: TaskContext, v: int):
        if self.visited is None or claim(self.visited, v):
            ctx.out.append(v)

    def split(self, inner, ctx: TaskContext, adj: Adjacency, u: int, lo: int, hi: int) -> bool:
        """Runs one neighbour list; edge-parallel plans cut long lists into spans."""
        if not self.edge_parallel or hi - lo <= self.edge_grain or in_worker():
            return inner(ctx, adj, u, lo, hi)
        grain = self.edge_grain

        def span(a, b):
            def run():
                sub = TaskContext()
                return sub, inner(sub, adj, u, a, b)
            return run

        results = self.engine.pool.run_dynamic([span(a, min(a + grain, hi)) for a in range(lo, hi, grain)])
        hit = False
        for sub, sub_hit in results:
            ctx.counters.add(sub.counters)
            ctx.out.extend(sub.out)
            hit = hit or sub_hit
        return hit

    def _push_inner(self):
        apply, weighted = self.apply, self.weighted
        to_test, dst_filter = self.to_test, self.dst_filter
        edge_filter, edge_weighted = self.edge_filter, self.edge_weighted
        tracking, emit = self.tracking, self.emit

        def inner(ctx, adj, s, lo, hi):
            _, nbrs, wts = adj
            examined = applied = 0
            hit = False
            for e in range(lo, hi):
                d = nbrs[e]
                examined += 1
                if to_test is not None and not to_test(d):
                    continue
                if dst_filter is not None and not dst_filter(ctx, d):
                    continue
                if edge_filter is not None:
                    ok = edge_filter(ctx, s, d, wts[e]) if edge_weighted else edge_filter(ctx, s, d)
                    if not ok:
                        continue
                ctx.changed = False
                if weighted:
                    apply(ctx, s, d, wts[e])
                else:
                    apply(ctx, s, d)
                applied += 1
                if ctx.changed:
                    hit = True
                    if tracking:
                        emit(ctx, d)
            ctx.counters.edges_examined += examined
            ctx.counters.edges_applied += applied
            return hit

        return inner

    def _pull_inner(self):
        apply, weighted = self.apply, self.weighted
        from_test, src_filter = self.from_test, self.src_filter
        edge_filter, edge_weighted = self.edge_filter, self.edge_weighted
        early_exit = self.early_exit

        def inner(ctx, adj, d, lo, hi):
            _, nbrs, wts = adj
            examined = applied = 0
            hit = False
            for e in range(lo, hi):
                s = nbrs[e]
                examined += 1
                if from_test is not None and not from_test(s):
                    continue
                if src_filter is not None and not src_filter(ctx, s):
                    continue
                if edge_filter is not None:
                    ok = edge_filter(ctx, s, d, wts[e]) if edge_weighted else edge_filter(ctx, s, d)
                    if not ok:
                        continue
                ctx.changed = False
                if weighted:
                    apply(ctx, s, d, wts[e])
                else:
                    apply(ctx, s, d)
                applied += 1
                if ctx.changed:
                    hit = True
                    if early_exit:
                        break
            ctx.counters.edges_examined += examined
            ctx.counters.edges_applied += applied
            return hit

        return inner


# ---------------------------------------------------------------- dump-plan

def describe_plan(plan: ExecutionPlan) -> List[str]:
    """Pseudo-code loop nest per variant, annotated with the synchronization it runs under."""
    lines = []
    for variant, sync in zip(plan.variants, plan.sync or (None,) * len(plan.variants)):
        gis = variant.gis
        lines.append(f"{plan.display_label} [{variant.name}] {gis.render()}")
        depth = 1
        if plan.hybrid:
            cond = "> threshold" if variant is plan.variants[0] else "<= threshold"
            lines.append("  " * depth + f"if |frontier| + sum_out_degrees(frontier) {cond}:")
            depth += 1
        if gis.ssg is not None:
            mode = "parallel" if gis.ssg.is_parallel else "serial"
            lines.append("  " * depth + f"for sg in SSG_list[{gis.ssg.size}]  # {gis.ssg.partition}, {mode}")
            depth += 1
        if gis.bsg is not None:
            lines.append("  " * depth + f"parallel_for chunk in {gis.bsg.partition}(grain={gis.bsg.size})"
                         f"  # {gis.bsg.parallel}")
            depth += 1
        if variant.name == SPARSE_PUSH:
            lines.append("  " * depth + "for src in frontier.ids:")
        elif variant.name == DENSE_PUSH:
            lines.append("  " * depth + "for src in vertices:")
            if plan.stmt.from_set is not None:
                lines.append("  " * (depth + 1) + f"if not frontier[src] ({gis.outer.filter}): continue")
        else:
            lines.append("  " * depth + "for dst in vertices:")
            if plan.stmt.to_set is not None:
                lines.append("  " * (depth + 1) + f"if not to_set[dst] ({gis.outer.filter}): continue")
            if plan.dst_filter:
                lines.append("  " * (depth + 1) + f"if not {plan.dst_filter}(dst): continue")
        depth += 1
        inner_var, outer_var = ("dst", "src") if gis.is_push else ("src", "dst")
        adjacency = "out_neighbors(src)" if gis.is_push else "in_neighbors(dst)"
        span = "  # edge-parallel" if gis.inner.parallel != SR else ""
        lines.append("  " * depth + f"for {inner_var} in {adjacency}:{span}")
        depth += 1
        if gis.inner.filter is not None:
            lines.append("  " * depth + f"if not member({inner_var}) ({gis.inner.filter}): continue")
        if gis.is_push and plan.dst_filter:
            lines.append("  " * depth + f"if not {plan.dst_filter}(dst): continue")
        if plan.edge_filter:
            lines.append("  " * depth + f"if not {plan.edge_filter}(src, dst): continue")
        syncs = ", ".join(f"{vec}:{mode}" for vec, mode in sync.entries) if sync else ""
        lines.append("  " * depth + f"{plan.apply_func}(src, dst)" + (f"  # {syncs}" if syncs else ""))
        if plan.stmt.modified:
            dedup = "dedup" if plan.dedup_enabled else "no dedup"
            lines.append("  " * depth + f"if changed({plan.tracked_vector}): emit({inner_var if gis.is_push else outer_var})"
                         f"  # {dedup}")
            if sync is not None and sync.early_exit:
                lines.append("  " * depth + "  break  # early exit")
    return lines
