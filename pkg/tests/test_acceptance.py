"""Acceptance criteria, one PASS/FAIL line per check.

Run under pytest (the lines are repeated in the terminal summary) or
directly with ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest

from neuromimetic import experiments, golden
from neuromimetic.alphabet import (
    activation_entropy,
    alphabet_entropy,
    build_alphabet,
    distinct_direction_count,
    enumerate_patterns,
    nonzero_entries,
)
from neuromimetic.dqn import QNetwork, td_loss_and_grads
from neuromimetic.emulation import (
    EmulationConfig,
    brute_force_select,
    candidate_entries,
    circle_points,
    hebb_learn,
    iterate_weights,
    iterations_to_mass,
    nonnegative_scores,
    objective_matrix,
    directions_of,
    PatternTable,
)
from neuromimetic.linalg import (
    IndexSet,
    nullspace_dimension,
    solve_left,
    solve_left_invariant,
    solve_right,
    solve_right_invariant,
)
from neuromimetic.resilient import DropoutSchedule, design_gains, simulate_cascade, verify_resilience

LINES: list[str] = []


def record(label: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    LINES.append(line)
    print(line, flush=True)
    return ok


def example():
    cfg = EmulationConfig(golden.EXAMPLE_H, golden.SIMPLE_B, h=0.1)
    return cfg, build_alphabet(cfg.B, enumerate_patterns(4))


_TABLE = {}


def table1():
    if not _TABLE:
        t = time.perf_counter()
        _TABLE["result"] = experiments.reproduce_table1()
        _TABLE["seconds"] = time.perf_counter() - t
    return _TABLE["result"], _TABLE["seconds"]


# ---------------------------------------------------------------------------
# 1. partition table


def test_c1_cells_and_boundaries():
    res, _ = table1()
    rows = {d["quantity"]: d for d in res["diff"]}
    worst = max(abs(d["observed"] - d["expected"]) for q, d in rows.items() if q.startswith("boundary"))
    ok = len(res["cells"]) == 10 and all(d["ok"] for q, d in rows.items() if q.startswith("boundary"))
    assert record("C1 cells and breakpoints", ok,
                  f"{len(res['cells'])} cells, worst breakpoint error {worst:.2e} rad (tol 1e-3)")


def test_c1_multiplicities():
    res, _ = table1()
    cells = {tuple(c["d"]): c for c in res["cells"]}
    got = [cells[tuple(float(v) for v in row[2])]["alpha"] for row in golden.TABLE1]
    want = [row[3] for row in golden.TABLE1]
    assert record("C1 multiplicities", got == want, f"alpha = {tuple(got)}")


def test_c1_measures():
    res, _ = table1()
    rows = [d for d in res["diff"] if d["quantity"].startswith("p[")]
    bad = [f"{d['quantity']} {d['observed']:.5f} vs {d['expected']}" for d in rows if not d["ok"]]
    worst = max(abs(d["observed"] - d["expected"]) for d in rows)
    detail = f"worst |p - p_table| = {worst:.5f} (tol 1e-3)"
    if bad:
        detail += "; outside: " + "; ".join(bad)
    assert record("C1 cell measures", not bad, detail)


def test_c1_runtime():
    _, seconds = table1()
    assert record("C1 runtime", seconds < 10, f"{seconds:.2f} s (limit 10 s)")


# ---------------------------------------------------------------------------
# 2. entropies


def test_c2_entropies():
    res, _ = table1()
    Ha, Hact = res["alphabet_entropy"], res["activation_entropy"]
    ok = abs(Ha - golden.ALPHABET_ENTROPY) <= golden.ENTROPY_TOL and \
        abs(Hact - golden.ACTIVATION_ENTROPY) <= golden.ENTROPY_TOL
    assert record("C2 entropies", ok, f"H_alphabet = {Ha:.4f} (3.052), H_activation = {Hact:.4f} (4.746), tol 0.005")


# ---------------------------------------------------------------------------
# 3. combinatorics


def test_c3_combinatorics():
    ternary = build_alphabet(golden.SIMPLE_B, enumerate_patterns(4))
    binary = build_alphabet(golden.SIMPLE_B, enumerate_patterns(4, binary_only=True))
    counts = [distinct_direction_count(n) for n in range(1, 5)]
    census = table1()[0]["census"]
    ok = (
        len(ternary) == 25
        and len(nonzero_entries(binary)) == 8
        and counts == [5**n for n in range(1, 5)]
        and (census["used"], census["unused"], census["zero"]) == (42, 30, 9)
    )
    assert record("C3 combinatorics", ok,
                  f"{len(ternary)} ternary vectors, {len(nonzero_entries(binary))} nonzero binary, "
                  f"5^n counts {counts}, census {census['used']}/{census['unused']}/{census['zero']}")


# ---------------------------------------------------------------------------
# 4. resilient design on random systems


def test_c4_random_resilient_designs():
    t = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, pairs, failing, exhaustive = -np.inf, 0, 0, True
    for _ in range(100):
        A, B, C, I1, I2 = experiments.random_resilient_system(rng)
        rep = verify_resilience(design_gains(A, B, C, I1, I2), margin=1e-6)
        worst = max(worst, rep.worst_abscissa)
        pairs += rep.checked
        failing += len(rep.failures)
        exhaustive &= rep.exhaustive
    seconds = time.perf_counter() - t
    ok = failing == 0 and exhaustive and worst < -1e-6 and seconds < 30
    assert record("C4 resilient design", ok,
                  f"100 systems, {pairs} lattice pairs, worst abscissa {worst:.3e}, "
                  f"{failing} failures, {seconds:.2f} s (limit 30 s)")


# ---------------------------------------------------------------------------
# 5. observer decay under dropout


def test_c5_observer_decay():
    fx = {
        "A": np.array([[0.0, 1.0], [2.0, -1.0]]),
        "B": np.array([[1.0, 0.0, 1.0, 1.0], [0.0, 1.0, 1.0, -1.0]]),
        "C": np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 2.0], [2.0, -1.0]]),
    }
    I1, I2 = IndexSet.of(4, [1, 2]), IndexSet.of(4, [3, 4])
    design = design_gains(fx["A"], fx["B"], fx["C"], I1, I2)
    full = IndexSet.full(4)
    phases = [(full, full), (I1, I2), (IndexSet.of(4, [1, 2, 4]), IndexSet.of(4, [1, 3, 4])),
              (IndexSet.of(4, [1, 2, 3]), IndexSet.of(4, [2, 3, 4]))]
    sched = DropoutSchedule.cyclic(phases, 1.25, 20.0)
    e0 = np.array([-1.0, 0.5])
    a = simulate_cascade(design, sched, [1.0, -0.5], np.array([1.0, -0.5]) + e0, 0.05, 20.0)
    b = simulate_cascade(design, sched, [-3.0, 2.0], np.array([-3.0, 2.0]) + e0, 0.05, 20.0)
    ratio = np.linalg.norm(a.e[-1]) / np.linalg.norm(a.e[0])
    gap = float(np.max(np.abs(a.e - b.e)))
    ok = ratio < 1e-6 and gap <= 1e-9
    assert record("C5 observer decay", ok, f"|e(20)|/|e(0)| = {ratio:.2e} (< 1e-6), x0 independence {gap:.1e} (<= 1e-9)")


# ---------------------------------------------------------------------------
# 6. learners against the oracle


def test_c6_hebb_matches_oracle():
    cfg, alphabet = example()
    entries = candidate_entries(alphabet, cfg.H)
    table = PatternTable.from_entries(entries)
    X = circle_points(experiments.circle_grid(360))
    t = time.perf_counter()
    learned = [set(hebb_learn(cfg, x, table).selection.directions) for x in X]
    seconds = time.perf_counter() - t
    oracle = [set(brute_force_select(cfg, x, entries).directions) for x in X]
    mismatch = [k for k, (a, b) in enumerate(zip(learned, oracle)) if a != b]
    ties = sum(len(o) > 1 for o in oracle)
    ok = not mismatch and seconds < 5
    assert record("C6 Hebbian learner vs oracle", ok,
                  f"{360 - len(mismatch)}/360 winner sets equal ({ties} tie points), {seconds:.2f} s (limit 5 s)")


@pytest.fixture(scope="module")
def dqn_sweep():
    cfg, _ = example()
    t = time.perf_counter()
    sweep = experiments.dqn_sweep(cfg, points=360, seed=0, retries=3)
    sweep["seconds"] = time.perf_counter() - t
    return sweep


def test_c6_dqn_first_seed(dqn_sweep):
    frac = dqn_sweep["first_seed_hits"] / dqn_sweep["points"]
    assert record("C6 DQN first seed", frac >= 0.95,
                  f"{dqn_sweep['first_seed_hits']}/360 = {frac:.1%} in the oracle tie set (>= 95%)")


def test_c6_dqn_fallback(dqn_sweep):
    ok = dqn_sweep["final_hits"] == dqn_sweep["points"] and dqn_sweep["seconds"] < 600
    retried = sum(r["runs"] > 1 for r in dqn_sweep["records"])
    assert record("C6 DQN with 3-seed fallback", ok,
                  f"{dqn_sweep['final_hits']}/360 after re-running {retried} points, "
                  f"{dqn_sweep['seconds']:.1f} s (limit 600 s)")


# ---------------------------------------------------------------------------
# 7. convergence-rate ordering


def test_c7_convergence_ordering():
    cfg, alphabet = example()
    entries = candidate_entries(alphabet, cfg.H)
    table = PatternTable.from_entries(entries)
    rng = np.random.default_rng(7)
    thetas = experiments.circle_grid(360)[rng.choice(360, size=20, replace=False)]
    slower = 0
    for x in circle_points(thetas):
        counts = []
        for alpha in (0.0, 1.0):
            sel = hebb_learn(cfg, x, table, alpha=alpha, max_iter=100_000, record=True)
            counts.append(iterations_to_mass(sel.result.history, sel.result.winners))
        slower += counts[0] is not None and counts[1] is not None and counts[1] > counts[0]
    hand = iterate_weights([1.0, 2.0], alpha=0.0, record=True).history[2]
    hand_err = float(np.max(np.abs(hand - [0.2, 0.8])))
    ok = slower == 20 and hand_err <= 1e-12
    assert record("C7 convergence ordering", ok,
                  f"alpha=1 slower at {slower}/20 points; two-step fixture error {hand_err:.1e}")


# ---------------------------------------------------------------------------
# 8. dropout relearning


def test_c8_dropout_relearning():
    cfg, _ = example()
    t = time.perf_counter()
    rep = experiments.dropout_relearn(cfg, [1, 2, 3, 4], points=360, learner="hebb")
    seconds = time.perf_counter() - t
    same = {c: v["identical"] for c, v in rep["channels"].items()}
    ok = same == {1: True, 2: False, 3: True, 4: False} and seconds < 30
    assert record("C8 dropout relearning", ok,
                  f"identical field per dropped channel {same}, {seconds:.2f} s (limit 30 s)")


# ---------------------------------------------------------------------------
# 9. property suites


def test_c9_properties():
    rng = np.random.default_rng(99)
    worst_res, null_ok = 0.0, True
    for _ in range(50):
        n = int(rng.integers(1, 4))
        m, q = n + int(rng.integers(1, 4)), n + int(rng.integers(1, 4))
        A, B, C = rng.standard_normal((n, n)), rng.standard_normal((n, m)), rng.standard_normal((q, n))
        I1 = IndexSet.of(m, sorted(rng.choice(np.arange(1, m + 1), size=n, replace=False)))
        I2 = IndexSet.of(q, sorted(rng.choice(np.arange(1, q + 1), size=n, replace=False)))
        for sol in (solve_left(A, B), solve_right(A, C), solve_left_invariant(A, B, I1),
                    solve_right_invariant(A, C, I2)):
            worst_res = max(worst_res, sol.residual / max(1.0, np.linalg.norm(A)))
        null_ok &= nullspace_dimension(B, "left") == n * (m - n)
        null_ok &= nullspace_dimension(C, "right") == (q - n) * n

    prop_gap, dominates = 0.0, True
    for _ in range(1000):
        k = int(rng.integers(1, 12))
        p = rng.random(k) + 1e-9
        p /= p.sum()
        alpha = rng.integers(1, 10, size=k)
        q = p / alpha
        prop_gap = max(prop_gap, abs(activation_entropy(p, alpha) + float(np.sum(alpha * q * np.log2(q)))))
        dominates &= activation_entropy(p, alpha) >= alphabet_entropy(p) - 1e-12

    cfg, alphabet = example()
    entries = candidate_entries(alphabet, cfg.H)
    table = PatternTable.from_entries(entries)
    simplex_gap = 0.0
    for x in circle_points(experiments.circle_grid(36)):
        losses = objective_matrix(cfg, x, directions_of(entries))[0]
        G = nonnegative_scores(losses[table.owner], cfg.loss_kind)
        hist = iterate_weights(G, record=True).history[1:]
        simplex_gap = max(simplex_gap, float(np.max(np.abs(hist.sum(axis=1) - 1.0))))
        assert np.all(hist >= 0)

    net = QNetwork(2, 5, rng=rng)
    net.params["b1"] += 0.05
    net.params["b2"] += 0.05
    net.sync_target()
    batch = (rng.standard_normal((16, 2)), rng.integers(0, 5, 16), rng.standard_normal(16),
             rng.standard_normal((16, 2)), rng.random(16) < 0.3)
    _, grads = td_loss_and_grads(net, *batch, gamma=0.9)
    grad_err = 0.0
    for _ in range(10):
        name = net.names[int(rng.integers(6))]
        idx = tuple(int(rng.integers(s)) for s in net.params[name].shape)
        orig = net.params[name][idx]
        net.params[name][idx] = orig + 1e-5
        lp, _ = td_loss_and_grads(net, *batch, gamma=0.9)
        net.params[name][idx] = orig - 1e-5
        lm, _ = td_loss_and_grads(net, *batch, gamma=0.9)
        net.params[name][idx] = orig
        num = (lp - lm) / 2e-5
        grad_err = max(grad_err, abs(num - grads[name][idx]) / max(abs(num), abs(grads[name][idx]), 1e-8))

    ok = (worst_res <= 1e-9 and null_ok and prop_gap <= 1e-12 and dominates
          and simplex_gap <= 1e-12 and grad_err < 1e-4)
    assert record("C9 property suites", ok,
                  f"residual {worst_res:.1e}, nullities {'ok' if null_ok else 'WRONG'}, entropy formulas {prop_gap:.1e}, "
                  f"H_act >= H_alph {'ok' if dominates else 'VIOLATED'}, simplex {simplex_gap:.1e}, "
                  f"gradient rel. error {grad_err:.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
