"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the summary
lines are written straight to the terminal so they show up without ``-s``.
"""

import csv
import math
import time
import warnings

import numpy as np
import pytest

import oracles
from helpers import blocky_image
from medal.cli import main
from medal.core import METRICS, Image, RunConfig, derive_seed, transfer
from medal.descriptors import PATCH_RADIUS, detect_fast_keypoints, write_pgm
from medal.harness import experiments as ex
from medal.harness.config import parse_config
from medal.harness.data import SyntheticSpec, generate_synthetic, split
from medal.learner import (AdamConfig, adam_step, extract_features, init_weights,
                           loss_and_gradients, predict_proba)
from medal.metrics import binarize, distance, entropies, entropy, mean_distance_score
from medal.sampler import medal_select

FIXTURE_CONFIG = """\
initial_train_size = 6
imgs_per_iteration = 4
entropy_filter_size = 8
eval_sample_size = 4
hidden_layers = 8, 4
max_epochs = 300
max_iterations = 4
synthetic_clusters_per_class = 3
synthetic_points_per_cluster = 5
synthetic_dimension = 4
"""


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail=""):
        line = f"[criterion {number}] {'PASS' if ok else 'FAIL'}: {title}"
        with capsys.disabled():
            print(f"\n{line}" + (f" ({detail})" if detail else ""))
        assert ok, f"{line} {detail}"
    return emit


# -- 1 ---------------------------------------------------------------------

def test_selection_matches_brute_force(report):
    rng = np.random.default_rng(2024)
    mismatches, lib_seconds = 0, 0.0
    for trial in range(1000):
        metric = METRICS[trial % len(METRICS)]
        n = int(rng.integers(1, 201))
        n_train = int(rng.integers(1, 51))
        d = int(rng.integers(1, 17))
        n_classes = int(rng.integers(2, 6))
        ids = sorted(rng.choice(10_000, size=n, replace=False).tolist())
        ids = [ids[j] for j in rng.permutation(n)]
        feats = rng.normal(size=(n, d))
        train = rng.normal(size=(n_train, d))
        probs = rng.dirichlet(np.full(n_classes, rng.uniform(0.2, 3.0)), size=n)
        if n > 3:  # force some exact entropy ties
            dup = rng.choice(n, size=n // 4, replace=False)
            probs[dup] = probs[dup[0]]
        M = int(rng.integers(1, n + 1))
        k = int(rng.integers(1, M + 1))
        t0 = time.perf_counter()
        got = medal_select(ids, feats, probs, train, metric, M, k).selected_ids
        lib_seconds += time.perf_counter() - t0
        want = oracles.medal_select(ids, feats.tolist(), probs.tolist(), train.tolist(),
                                    metric, M, k)
        mismatches += list(got) != want
    report(1, "medal_select equals brute-force selector on 1000 instances",
           mismatches == 0 and lib_seconds < 60,
           f"{mismatches} mismatches, library time {lib_seconds:.1f}s")


# -- 2 ---------------------------------------------------------------------

def _unit_values():
    bits = lambda s: np.array([c == "1" for c in s])
    checks = [
        (entropy([0.5, 0.5]), math.log(2), 1e-12),
        (entropy([1.0, 0.0]), 0.0, 1e-12),
        (entropy([0.9, 0.1]), -(0.9 * math.log(0.9) + 0.1 * math.log(0.1)), 1e-12),
        (distance("euclidean", [0, 0], [3, 4]), 5.0, 1e-12),
        (distance("chebyshev", [1, 5], [4, 1]), 4.0, 1e-12),
        (distance("cosine", [1, 0], [0, 1]), 1.0, 1e-12),
        (distance("russellrao", bits("1100"), bits("1010")), 0.75, 1e-12),
        (distance("kulsinski", bits("1100"), bits("1010")), 5 / 6, 1e-12),
        (mean_distance_score([1, 0], [[0, 0], [2, 0]], "euclidean"), 1.0, 1e-12),
        (mean_distance_score([3, 4], [[0, 0]], "euclidean"), 5.0, 1e-12),
        (mean_distance_score([0, 2], [[0, 0], [1, 1], [2, 2]], "euclidean"),
         (4 + math.sqrt(2)) / 3, 1e-12),
    ]
    exact = [
        binarize([0.3, -1.0, 0.0]).tolist() == [True, False, False],
        not binarize(np.zeros(6)).any(),
        binarize([1e-12, 2.0]).tolist() == [True, True],
    ]
    # Adam: first scalar step, then two steps against the straight-line oracle
    s = init_weights([1, 1], seed=0)
    s.weights, s.biases = [np.zeros((1, 1))], [np.zeros(1)]
    one = adam_step(s, [np.array([[1.0]]), np.array([0.0])], AdamConfig())
    checks.append((one.weights[0][0, 0], -2e-4 / (1 + 1e-8), 1e-10))
    s.weights = [np.array([[0.5]])]
    cur = s
    for g in (0.3, -1.7):
        cur = adam_step(cur, [np.array([[g]]), np.array([0.0])], AdamConfig())
    checks.append((cur.weights[0][0, 0], oracles.adam_scalar(0.5, [0.3, -1.7])[-1], 1e-10))
    return checks, exact


def test_unit_values_and_entropy_bounds(report):
    checks, exact = _unit_values()
    bad = [(got, want) for got, want, tol in checks if abs(got - want) > tol]
    rng = np.random.default_rng(7)
    worst_low, worst_high, n_rows = 0.0, 0.0, 0
    for c in range(2, 12):
        probs = rng.dirichlet(np.full(c, rng.uniform(0.05, 5.0)), size=10_000)
        probs[:50] = np.eye(c)[rng.integers(0, c, size=50)]  # one-hot rows
        probs[50] = 1.0 / c
        e = entropies(probs)
        worst_low = min(worst_low, e.min())
        worst_high = max(worst_high, (e - math.log(c)).max())
        n_rows += len(probs)
    bounds_ok = worst_low >= 0.0 and worst_high <= 0.0 and n_rows >= 100_000
    report(2, "unit values within tolerance; entropy in [0, ln C] on 1e5 distributions",
           not bad and all(exact) and bounds_ok,
           f"{len(checks) + len(exact) - len(bad) - exact.count(False)}/{len(checks) + len(exact)}"
           f" unit values, {n_rows} distributions")


# -- 3 ---------------------------------------------------------------------

def test_gradient_check(report):
    rng = np.random.default_rng(11)
    worst = 0.0
    for net in range(50):
        depth = int(rng.integers(0, 3))
        sizes = [int(rng.integers(2, 6))] + [int(rng.integers(2, 7)) for _ in range(depth)] + [
            int(rng.integers(2, 5))]
        s = init_weights(sizes, seed=net)
        s.biases = [rng.normal(scale=0.1, size=b.shape) for b in s.biases]
        n = int(rng.integers(2, 9))
        x = rng.normal(size=(n, sizes[0]))
        y = rng.integers(0, sizes[-1], size=n)
        _, grads = loss_and_gradients(s, x, y)
        num = oracles.numeric_gradient([w.tolist() for w in s.weights],
                                       [b.tolist() for b in s.biases], x.tolist(), y.tolist())
        a = np.concatenate([g.ravel() for g in grads])
        b = np.concatenate([np.ravel(g) for g in num])
        rel = np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)
        worst = max(worst, rel)
    report(3, "backprop matches central differences on 50 networks", worst < 1e-4,
           f"worst relative error {worst:.2e}")


# -- 4 ---------------------------------------------------------------------

def test_fast_oracle_and_rotation(report):
    rng = np.random.default_rng(44)
    failures, n_kp = [], 0
    for f in range(20):
        img = blocky_image(rng, size=64)
        kps = detect_fast_keypoints(img)
        n_kp += len(kps)
        px = img.pixels
        for k in kps:
            if not oracles.segment_test(px, k.x, k.y, 20):
                failures.append(f"fixture {f}: ({k.x},{k.y}) fails the segment test")
        # every qualifying pixel inside the border is found (cap not binding here)
        if len(kps) < 500:
            expected = {(x, y) for y in range(PATCH_RADIUS, 64 - PATCH_RADIUS)
                        for x in range(PATCH_RADIUS, 64 - PATCH_RADIUS)
                        if oracles.segment_test(px, x, y, 20)}
            if expected != {(k.x, k.y) for k in kps}:
                failures.append(f"fixture {f}: detected set differs from oracle")
        w = img.width
        before = {(k.y, w - 1 - k.x, k.score) for k in kps}
        after = {(k.x, k.y, k.score) for k in detect_fast_keypoints(Image(np.rot90(px)))}
        if before != after:
            failures.append(f"fixture {f}: rot90 keypoint set differs")
    report(4, "FAST keypoints pass the segment-test oracle; rot90 equivariance exact",
           not failures, f"{n_kp} keypoints on 20 fixtures" + (f"; {failures[:3]}" if failures else ""))


# -- 5 ---------------------------------------------------------------------

def _labels_to_reach(records, target):
    return next((r.labeled_count for r in records if r.test_accuracy >= target), None)


@pytest.mark.slow
def test_label_efficiency(report):
    cfg = RunConfig()
    ds = generate_synthetic(SyntheticSpec.from_config(cfg))
    t0 = time.perf_counter()
    wins, reductions, lines = 0, [], []
    for seed in range(5):
        run = cfg.replace(master_seed=seed)
        rnd = ex.run_al_experiment(run, ds, "random").curve.records("random", seed)
        med = ex.run_al_experiment(run, ds, "medal").curve.records("medal", seed)
        pool = rnd[-1].labeled_count  # runs end with the whole pool labeled
        target = next(r for r in rnd if r.labeled_count >= 0.6 * pool).test_accuracy
        n_med, n_rnd = _labels_to_reach(med, target), _labels_to_reach(rnd, target)
        won = n_med is not None and n_med <= n_rnd
        wins += won
        reductions.append((n_rnd - n_med) / n_rnd if n_med is not None else float("nan"))
        lines.append(f"seed {seed}: target {target:.4f}, medal {n_med}, random {n_rnd}")
    minutes = (time.perf_counter() - t0) / 60
    mean_red = float(np.nanmean(reductions))
    report(5, "MedAL reaches the target with no more labels than random in >= 4/5 seeds",
           wins >= 4 and minutes < 15,
           f"{wins}/5 wins, mean label reduction {100 * mean_red:.1f}%, {minutes:.1f} min; "
           + "; ".join(lines))


# -- 6 ---------------------------------------------------------------------

def test_init_comparison(report):
    cfg = RunConfig()
    ds = generate_synthetic(SyntheticSpec.from_config(cfg))
    rows, mean = ex.compare_init(cfg, ds, 10)
    report(6, "farthest-first init mean accuracy >= random init over 10 seeds",
           mean.farthest_first_accuracy >= mean.random_accuracy,
           f"random {mean.random_accuracy:.4f}, farthest-first {mean.farthest_first_accuracy:.4f}")


# -- 7 ---------------------------------------------------------------------

def test_eval_distances_protocol(report, tmp_path):
    cfg_path = tmp_path / "fixture.cfg"
    cfg_path.write_text(FIXTURE_CONFIG)
    tables = []
    for name in ("a", "b"):
        assert main(["eval-distances", "--config", str(cfg_path), "--data", "synthetic",
                     "--out", str(tmp_path / name)]) == 0
        tables.append((tmp_path / name / "entropy_table.csv").read_bytes())
    with open(tmp_path / "a" / "entropy_table.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    pairs = [(r["metric"], int(r["layer"])) for r in rows]
    one_per_pair = sorted(pairs) == sorted((m, l) for m in METRICS for l in range(2))

    # hand recomputation of the euclidean / layer-1 row
    cfg = parse_config(FIXTURE_CONFIG)
    ds = generate_synthetic(SyntheticSpec.from_config(cfg))
    st = split(ds, (0.8, 0.2), derive_seed(0, ex.SPLIT_STREAM))
    st = transfer(st, ex.build_initial_set(cfg, ds, st, 0))
    model, _ = ex.fit_model(cfg, ds, st, 0, 0)
    pool, train = sorted(st.oracle_ids), list(st.train_ids)
    probs = predict_proba(model, ds.features[pool]).tolist()
    pf = extract_features(model, ds.features[pool], 1).tolist()
    tf = extract_features(model, ds.features[train], 1).tolist()
    picked = oracles.medal_select(pool, pf, probs, tf, "euclidean", 8, 4)
    ent = dict(zip(pool, (oracles.entropy(p) for p in probs)))
    hand = math.fsum(ent[i] for i in picked)
    got = float(next(r["entropy_sum"] for r in rows
                     if r["metric"] == "euclidean" and r["layer"] == "1"))
    ok = len(ds) == 30 and one_per_pair and tables[0] == tables[1] and abs(got - hand) <= 1e-9
    report(7, "eval-distances: one row per pair, reruns identical, euclidean row by hand",
           ok, f"{len(rows)} rows, |table - hand| = {abs(got - hand):.1e}")


# -- 8 ---------------------------------------------------------------------

def test_cli_determinism_and_audit(report, tmp_path):
    cfg_path = tmp_path / "fixture.cfg"
    cfg_path.write_text(FIXTURE_CONFIG)
    img_dir = tmp_path / "images"
    img_dir.mkdir()
    rng = np.random.default_rng(8)
    for i in range(4):
        write_pgm(img_dir / f"im{i}.pgm", blocky_image(rng, size=48))

    commands = [
        ["run", "--sampler", "medal", "--seeds", "0,1,2"],
        ["run", "--sampler", "uncertainty", "--seeds", "0"],
        ["run", "--sampler", "random", "--seeds", "0"],
        ["eval-distances"],
        ["init-compare", "--seeds", "3"],
    ]
    differing = []
    for ci, argv in enumerate(commands):
        outputs = []
        for rep in ("first", "second"):
            out = tmp_path / f"cmd{ci}-{rep}"
            assert main([*argv, "--config", str(cfg_path), "--data", "synthetic",
                         "--out", str(out)]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        if outputs[0] != outputs[1]:
            differing.append(" ".join(argv[:1]))
    orb = []
    for rep in ("first", "second"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert main(["extract-orb", str(img_dir), "--out", str(tmp_path / f"{rep}.csv")]) == 0
        orb.append((tmp_path / f"{rep}.csv").read_bytes())
    if orb[0] != orb[1]:
        differing.append("extract-orb")

    with open(tmp_path / "cmd0-first" / "medal_audit.csv", newline="") as fh:
        audit = list(csv.DictReader(fh))
    violations, acquisitions = [], 0
    for run_id in sorted({r["run_id"] for r in audit}):
        rows = [ex.AuditRow(int(r["iteration"]), int(r["example_id"]), float(r["entropy"]),
                            float(r["mean_distance"]), int(r["selected_rank"]))
                for r in audit if r["run_id"] == run_id]
        acquisitions += len({r.iteration for r in rows})
        violations += ex.check_audit(rows)
    report(8, "CLI outputs byte-identical across reruns; audit invariant holds",
           not differing and not violations and acquisitions > 0,
           f"{len(commands) + 1} commands, {acquisitions} audited acquisitions"
           + (f"; differing: {differing}" if differing else "")
           + (f"; violations: {violations[:3]}" if violations else ""))
