"""Acceptance gate. Each test checks one criterion at its stated tolerance and
prints a single PASS/FAIL line, also when the assertion fails."""
import math
import time

import numpy as np
import pytest
from helpers import random_instance

from idnc_mdd.channel import ExperimentStats, SimConfig, simulate_frames, transmit_once
from idnc_mdd.cli import main as cli_main
from idnc_mdd.graph import (
    DEFAULT_ENUMERATION_BOUND,
    build_graph,
    clique_problems,
    enumerate_maximal_cliques,
    partition_layers,
)
from idnc_mdd.policies import (
    PolicyKind,
    max_delay_receivers,
    prob_max_delay_increase,
    select,
    select_clique_exact,
    select_clique_mdd,
)
from idnc_mdd.state import FeedbackMatrix, FrameState

FRAMES = 1000
M, N = 60, 30


def report(capsys, name: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture(scope="module")
def frames_at():
    """Frames per (policy, P), simulated once with no deadline and reused."""
    cache = {}

    def get(policy: PolicyKind, P: float):
        if (policy, P) not in cache:
            cache[policy, P] = simulate_frames(SimConfig(M, N, P, frames=FRAMES, policy=policy))
        return cache[policy, P]
    return get


def _stats(frames, deadline=math.inf) -> ExperimentStats:
    return ExperimentStats.from_frames(frames, deadline)


@pytest.mark.slow
def test_served_fraction_at_deadline_40(frames_at, capsys):
    mdd = _stats(frames_at(PolicyKind.MDD_GREEDY, 0.5), 40)
    sdd = _stats(frames_at(PolicyKind.SDD_GREEDY, 0.5), 40)
    ok = mdd.mean_served_fraction >= 0.97 and 0.85 <= sdd.mean_served_fraction <= 0.95
    report(capsys, "served fraction M=60 N=30 P=0.5 T=40", ok,
           f"MDD {mdd.mean_served_fraction:.4f} (need >= 0.97), "
           f"SDD {sdd.mean_served_fraction:.4f} (need in [0.85, 0.95]), {FRAMES} frames")
    assert ok


@pytest.mark.slow
def test_crossover_and_max_delay_dominance(frames_at, capsys):
    lines = []
    mdd = _stats(frames_at(PolicyKind.MDD_GREEDY, 0.5))
    sdd = _stats(frames_at(PolicyKind.SDD_GREEDY, 0.5))
    ok = mdd.mean_sum_delay <= sdd.mean_sum_delay
    lines.append(f"sum@P=0.5 MDD {mdd.mean_sum_delay:.1f} <= SDD {sdd.mean_sum_delay:.1f}")
    for P in (0.1, 0.25, 0.4, 0.5):
        a = _stats(frames_at(PolicyKind.MDD_GREEDY, P)).mean_max_delay
        b = _stats(frames_at(PolicyKind.SDD_GREEDY, P)).mean_max_delay
        ok &= a <= b
        lines.append(f"max@P={P} {a:.2f} <= {b:.2f}")
    report(capsys, "crossover and max-delay dominance", ok, "; ".join(lines))
    assert ok


def test_analytic_oracle_consistency(capsys):
    rng = np.random.default_rng(2024)
    reps = 10_000
    nontrivial = trivial = 0
    worst = 0.0
    failures = []
    while nontrivial < 50:
        Mi, Ni = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        F = FeedbackMatrix((rng.random((Mi, Ni)) < rng.uniform(0.3, 0.8)).astype(np.uint8))
        g = build_graph(F)
        if not len(g):
            continue
        p = rng.uniform(0.05, 0.9, Mi)
        d = rng.integers(0, 3, Mi)
        # the greedy policies and arbitrary maximal cliques
        kind = int(rng.integers(3))
        if kind == 0:
            clique = select(PolicyKind.MDD_GREEDY, g, d, p)
        elif kind == 1:
            clique = select(PolicyKind.SDD_GREEDY, g, d, p)
        elif len(g) <= DEFAULT_ENUMERATION_BOUND:
            cliques = enumerate_maximal_cliques(g)
            clique = cliques[int(rng.integers(len(cliques)))]
        else:
            continue
        expected = prob_max_delay_increase(clique, max_delay_receivers(d),
                                           set(F.wanting_receivers().tolist()), p)
        # degenerate states (P = 0 or 1) must match exactly; a short run suffices
        n = reps if 0.0 < expected < 1.0 else 500
        u = rng.random((n, Mi))
        hits = 0
        for k in range(n):
            st = FrameState(F.copy(), p, d)
            hits += transmit_once(st, clique, u[k])[2]
        sigma = math.sqrt(expected * (1 - expected) / n)
        err = abs(hits / n - expected)
        if sigma > 0:
            nontrivial += 1
            worst = max(worst, err / sigma)
        else:
            trivial += 1
        if err > 3 * sigma:
            failures.append((expected, hits / n))
    ok = not failures
    report(capsys, "analytic oracle (max-delay increase probability)", ok,
           f"{nontrivial} states with 0<P<1 x {reps} transmissions (+{trivial} degenerate), "
           f"worst deviation {worst:.2f} sigma, failures {failures}")
    assert ok


def test_exact_dominates_greedy(capsys):
    rng = np.random.default_rng(77)
    n = 0
    problems = []
    strict = 0
    while n < 1500:
        F, p, d = random_instance(rng, 5, 5)
        g = build_graph(F)
        if not len(g):
            continue
        n += 1
        wanting = set(F.wanting_receivers().tolist())
        top = max_delay_receivers(d)
        exact = select_clique_exact(g, d, p, PolicyKind.MDD_EXACT)
        greedy = select_clique_mdd(g, d, p)
        e = prob_max_delay_increase(exact, top, wanting, p)
        gr = prob_max_delay_increase(greedy, top, wanting, p)
        if e > gr:
            problems.append(f"instance {n}: exact {e} > greedy {gr}")
        strict += e < gr
        for name, c in (("exact", exact), ("greedy", greedy)):
            for msg in clique_problems(g, c):
                problems.append(f"instance {n} {name}: {msg}")
    ok = not problems
    report(capsys, "exact-oracle dominance and clique validity", ok,
           f"{n} instances, exact strictly better on {strict}, problems {problems[:3]}")
    assert ok


def test_invariant_suite(tmp_path, capsys):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    cases = 0
    bad = []
    while cases < 12_000:
        F, p, d = random_instance(rng, 8, 8)
        p = np.minimum(p, 0.95)
        g = build_graph(F)
        # adjacency symmetry and layer partition completeness
        if not (g.adj == g.adj.T).all() or g.adj.diagonal().any():
            bad.append("adjacency not symmetric")
        part = partition_layers(g, d)
        if sorted(v for layer in part.layers for v in layer.vertices) != g.vertices:
            bad.append("partition incomplete")
        cases += 2
        # max-delay increase probability: range and zero-iff-covered on each selected clique
        wanting = set(F.wanting_receivers().tolist())
        top = max_delay_receivers(d)
        for kind in (PolicyKind.MDD_GREEDY, PolicyKind.SDD_GREEDY):
            c = select(kind, g, d, p)
            val = prob_max_delay_increase(c, top, wanting, p)
            if not 0.0 <= val <= 1.0 or (val == 0.0) != ((top & wanting) <= c.targeted):
                bad.append(f"max-delay increase probability {val} out of contract")
            cases += 1
        # conservation and unit delay increments along a recovery run
        st = FrameState(F.copy(), p, d)
        for _ in range(30):
            g = build_graph(st.feedback)
            if not len(g):
                break
            before = st.delays.copy()
            wants_before = [st.receiver(i).wants for i in range(F.M)]
            transmit_once(st, select(PolicyKind.MDD_GREEDY, g, st.delays, st.erasure), rng.random(F.M))
            if not set(np.unique(st.delays - before)) <= {0, 1}:
                bad.append("non-unit delay increment")
            for i in range(F.M):
                r = st.receiver(i)
                if len(r.wants) + len(r.has) != F.N or not r.wants <= wants_before[i]:
                    bad.append(f"Wants/Has conservation broken at receiver {i}")
            cases += 1
    argv = ["--receivers", "10", "--packets", "8", "--frames", "5", "--seed", "11",
            "--sweep", "deadline=0:4:12"]
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        cli_main(argv + ["--output", str(path)])
    if paths[0].read_bytes() != paths[1].read_bytes():
        bad.append("CSV differs between identical runs")
    cases += 1
    elapsed = time.perf_counter() - start
    ok = not bad and cases >= 10_000 and elapsed < 60
    report(capsys, "invariant suite", ok, f"{cases} cases in {elapsed:.1f}s, violations {bad[:3]}")
    assert ok
