"""Acceptance criteria, one test per criterion, each printing a single PASS/FAIL/SKIP line.

Criteria 1-4 need the public Helpdesk and BPI'12 (W) logs. Put them under
``$PPMGCN_DATA_DIR`` (or ``./data``) as ``helpdesk.csv`` and ``bpi_12_w.csv``;
without them those criteria skip with the reason shown.
Criteria 3 and 4 train 5 runs of every variant and are marked ``slow``.
Set ``PPMGCN_ACCEPT_RUNS`` to keep their run directories between sessions.
"""
import io
import os
import time

import numpy as np
import pytest

from ppmgcn.cli import main
from ppmgcn.dfg import adjacency, laplacian, mine_dfg
from ppmgcn.eventlog import chronological_case_split, log_statistics, parse_event_log, sample_validation_split
from ppmgcn.evaluation import stage_metrics
from ppmgcn.features import build_samples, fit_feature_scaling, quarter_of, quartile_of
from ppmgcn.models import Head, Variant, build_model, load_checkpoint, save_checkpoint
from ppmgcn.nn import softmax
from ppmgcn.synthetic import log_from_traces, random_traces
from ppmgcn.training import TrainConfig, run_experiment, train_single, validation_loss

from conftest import dataset_path
from oracles import abc_log, worst_gradient_error
from test_dfg import B_BPI12W, brute_force_counts

VARIANTS = list(Variant)


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def need(capsys, n, *names):
    paths = [dataset_path(name) for name in names]
    missing = [name for name, p in zip(names, paths) if p is None]
    if missing:
        reason = f"dataset(s) {', '.join(missing)} not found under $PPMGCN_DATA_DIR or ./data"
        with capsys.disabled():
            print(f"\nCRITERION {n}: SKIP - {reason}")
        pytest.skip(reason)
    return paths


def load(name):
    return parse_event_log(dataset_path(name))


# criterion 1

STATS = {"helpdesk": (13710, 3804, 9, 3.604), "bpi12w": (72413, 9658, 6, 7.498)}


def test_criterion_1_dataset_statistics(capsys):
    paths = need(capsys, 1, "helpdesk", "bpi12w")
    problems = []
    for name, path in zip(STATS, paths):
        out = io.StringIO()
        assert main(["stats", "--data", str(path), "--csv", os.devnull], out) == 0
        s = log_statistics(parse_event_log(path))
        got = (s.n_events, s.n_cases, s.n_activity_types)
        want = STATS[name]
        if got != want[:3] or abs(s.avg_events_per_case - want[3]) > 0.001:
            problems.append(f"{name}: got {got + (round(s.avg_events_per_case, 4),)}, want {want}")
    verdict(capsys, 1, not problems, "; ".join(problems) or "both logs match the published statistics")


# criterion 2

def test_criterion_2_dfg_fidelity(capsys):
    need(capsys, 2, "bpi12w")
    log = load("bpi12w")
    b = adjacency(mine_dfg(log), binary=True)
    ok = b.shape == B_BPI12W.shape and any(
        np.array_equal(b[np.ix_(p, p)], B_BPI12W) for p in _label_orders(log.alphabet))
    verdict(capsys, 2, ok, f"binary adjacency over {log.alphabet}:\n{b}")


def _label_orders(alphabet):
    """Candidate row orders: first appearance, then by label (numerically when all labels are integers)."""
    n = len(alphabet)
    yield list(range(n))
    numeric = all(a.strip().lstrip("-").isdigit() for a in alphabet)
    yield sorted(range(n), key=lambda i: int(alphabet[i]) if numeric else alphabet[i])


# criteria 3 and 4 share one set of trained runs per dataset and head

@pytest.fixture(scope="session")
def experiments(tmp_path_factory):
    root = os.environ.get("PPMGCN_ACCEPT_RUNS") or tmp_path_factory.mktemp("accept")
    cache = {}

    def get(dataset, variant, head):
        key = (dataset, variant, head)
        if key not in cache:
            cfg = TrainConfig(variant, head, dataset=dataset)
            cache[key] = run_experiment(load(dataset), cfg, n_runs=5, out_root=root).summary
        return cache[key]

    return get


TABLE_TARGETS = [
    ("helpdesk", Variant.MLP, Head.EVENT, 0.8201, 0.03),
    ("helpdesk", Variant.GCN_LW, Head.TIME, 2.3095, 0.15),
    ("bpi12w", Variant.MLP, Head.TIME, 1.3229, 0.10),
    ("bpi12w", Variant.GCN_LB, Head.EVENT, 0.6569, 0.03),
]


@pytest.mark.slow
def test_criterion_3_quantitative(capsys, experiments):
    need(capsys, 3, "helpdesk", "bpi12w")
    lines, ok = [], True
    for dataset, variant, head, target, tol in TABLE_TARGETS:
        got = experiments(dataset, variant, head).overall
        good = abs(got - target) <= tol
        ok &= good
        lines.append(f"{dataset} {variant} {head}: {got:.4f} vs {target} ± {tol} {'ok' if good else 'OUT'}")
    verdict(capsys, 3, ok, "; ".join(lines))


@pytest.mark.slow
def test_criterion_4_stage_patterns(capsys, experiments):
    need(capsys, 4, "helpdesk", "bpi12w")
    problems = []
    q = experiments("helpdesk", Variant.MLP, Head.EVENT).quartiles
    if not np.all(np.diff(q) > 0):
        problems.append(f"helpdesk MLP event quartiles not increasing: {np.round(q, 4)}")
    for v in VARIANTS:
        q = experiments("bpi12w", v, Head.EVENT).quartiles
        if not q[3] < q[2]:
            problems.append(f"bpi12w {v} event Q4 {q[3]:.4f} not below Q3 {q[2]:.4f}")
        t = experiments("helpdesk", v, Head.TIME).quarters
        if not np.nanargmin(t) == 3:
            problems.append(f"helpdesk {v} time quarter 4 not smallest: {np.round(t, 4)}")
    verdict(capsys, 4, not problems, "; ".join(problems) or "all stage orderings hold")


# criterion 5

def test_criterion_5_property_suite(capsys, tmp_path):
    t0 = time.perf_counter()
    checks = {}
    rng = np.random.default_rng(2024)

    checks["gradients"] = max(worst_gradient_error(v, h, 100, rng) for v in Variant for h in Head) <= 1e-4

    worst = 0.0
    for _ in range(2000):
        z = rng.normal(0, 10 ** rng.uniform(-2, 5), size=int(rng.integers(1, 30)))
        worst = max(worst, abs(softmax(z).sum() - 1.0))
    checks["softmax"] = worst <= 1e-9

    ok = True
    for _ in range(200):
        traces = random_traces(rng, n_activities=int(rng.integers(1, 7)), n_cases=int(rng.integers(1, 31)))
        log = log_from_traces(traces, rng=rng)
        ok &= np.array_equal(mine_dfg(log).edge_counts, brute_force_counts(log))
    checks["dfg oracle"] = ok

    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        log = log_from_traces(random_traces(rng, n_activities=n, n_cases=10), rng=rng)
        for binary in (True, False):
            worst = max(worst, np.abs(laplacian(adjacency(mine_dfg(log), binary)).sum(axis=1)).max())
    checks["laplacian rows"] = worst <= 1e-12

    ok = True
    from datetime import datetime, timedelta, timezone
    t_start = datetime(2020, 1, 1, tzinfo=timezone.utc)
    for n in range(1, 51):
        labels = [quartile_of(p, n) for p in range(n)]
        sizes = [labels.count(k) for k in (1, 2, 3, 4)]
        ok &= labels == sorted(labels) and sum(sizes) == n
        if n >= 4:
            ok &= min(sizes) >= 1 and max(sizes) - min(sizes) <= 1
        offs = np.sort(rng.integers(0, 1000, size=n))
        offs -= offs[0]
        dur = float(offs[-1])
        qs = [quarter_of(t_start + timedelta(seconds=int(o)), t_start, dur) for o in offs]
        ok &= qs == sorted(qs) and qs[0] == 1 and (dur == 0 or qs[-1] == 4)
    checks["partitions"] = ok

    worst = 0.0
    for _ in range(200):
        k = int(rng.integers(1, 80))
        m = stage_metrics(rng.random(k), rng.integers(1, 5, k), rng.integers(1, 5, k), "mae_days")
        worst = max(worst, m.recombination_error())
    checks["recombination"] = worst <= 1e-9

    log = log_from_traces(random_traces(rng, n_activities=5, n_cases=30), rng=rng)
    train, _ = chronological_case_split(log)
    eff, val = sample_validation_split(train, 0.2, 1)
    scaling = fit_feature_scaling(eff)
    ok = True
    for variant in Variant:
        for head in Head:
            cfg = TrainConfig(variant, head, max_epochs=2, patience=2, seed=1)
            model = build_model(cfg.model_config(log.num_nodes), None if variant is Variant.MLP else mine_dfg(log),
                                1, scaling)
            trained, hist = train_single(model, build_samples(eff, scaling), build_samples(val, scaling), cfg)
            save_checkpoint(tmp_path / "c.npz", trained)
            back = load_checkpoint(tmp_path / "c.npz")
            ok &= abs(validation_loss(back.model, build_samples(val, scaling), back.end_time_target)
                      - hist.best_val_loss) <= 1e-9
    checks["checkpoint"] = ok

    summaries = []
    for _ in range(2):
        res = run_experiment(log, TrainConfig("gcn-lb", "time", max_epochs=2, patience=2, seed=9), n_runs=2)
        summaries.append(res.summary_csv())
    checks["determinism"] = summaries[0] == summaries[1]

    elapsed = time.perf_counter() - t0
    failed = [k for k, v in checks.items() if not v]
    verdict(capsys, 5, not failed and elapsed < 120,
            f"{len(checks) - len(failed)}/{len(checks)} properties hold in {elapsed:.1f} s"
            + (f"; failed: {', '.join(failed)}" if failed else ""))


# criterion 6

def test_criterion_6_synthetic_convergence(capsys):
    t0 = time.perf_counter()
    log = abc_log()
    results = []
    for variant in Variant:
        acc = run_experiment(log, TrainConfig(variant, "event", learning_rate=1e-3, max_epochs=50), 1).summary
        mae = run_experiment(log, TrainConfig(variant, "time", learning_rate=1e-3, max_epochs=50), 1).summary
        results.append((variant.value, acc.overall, mae.overall * 86400))
    elapsed = time.perf_counter() - t0
    ok = all(a >= 0.99 and m <= 6.0 for _, a, m in results) and elapsed < 60
    detail = ", ".join(f"{v} acc {a:.3f} mae {m:.2f}s" for v, a, m in results)
    verdict(capsys, 6, ok, f"{detail}; {elapsed:.1f} s")
