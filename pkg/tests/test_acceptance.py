"""Acceptance checks on the full 5 x 9 x 101 grid.

Every check records a PASS/FAIL verdict; the terminal summary prints one
line per criterion.  The grid is solved once per session, the classifier
comparisons use the default 4-fold x 25 protocol, so the whole module
takes several minutes.
"""
import csv
import io
import itertools
import json
import time
from types import SimpleNamespace

import numpy as np
import pytest

from slabselect import CLASSES, FEATURES
from slabselect.cli import main
from slabselect.dataset import FeatureGrid, generate, label_best, label_distribution, write_csv
from slabselect.evaluation import (
    CVConfig, cohen_kappa, kappa_from_confusion, repeated_stratified_kfold,
)
from slabselect.ml import KNNClassifier, LabeledDataset, load_model, make_model
from slabselect.ml.mlp import gradient_check
from slabselect.transport import SlabProblem, dsa_operator, low_order_system, particle_balance, solve, thomas_solve

from oracles import dense_solve, knn_oracle, tree_oracle

pytestmark = pytest.mark.acceptance

AGREEMENT_CASES = set(itertools.product((2, 8, 32), (16, 128, 1024), (0.0, 0.5, 0.9, 0.99)))


def rel_linf(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b))))


@pytest.fixture(scope="session")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="session")
def grid_run(workdir):
    balance = []
    agreement = {}

    def inspect(problem, outcomes):
        for name, out in outcomes.items():
            if out.converged:
                balance.append((particle_balance(problem, out.state), problem, name))
        key = (problem.sn_order, problem.num_cells, problem.scattering_ratio)
        if key in AGREEMENT_CASES:
            agreement[key] = {n: (o.converged, o.scalar_flux.copy()) for n, o in outcomes.items()}

    start = time.perf_counter()
    records = generate(FeatureGrid(), on_case=inspect)
    records = label_best(label_best(records, "sweeps"), "runtime")
    elapsed = time.perf_counter() - start
    path = workdir / "grid.csv"
    write_csv(records, path)
    return SimpleNamespace(records=records, elapsed=elapsed, balance=balance, agreement=agreement, path=path)


@pytest.fixture(scope="session")
def sweeps_dataset(grid_run):
    return LabeledDataset.from_records(grid_run.records, "sweeps")


def _evaluate_all(grid_run, workdir, label):
    js, fc = workdir / f"all_{label}.json", workdir / f"all_{label}.csv"
    code = main(["evaluate", "-d", str(grid_run.path), "--all", "--label", label,
                 "--json", str(js), "--folds-csv", str(fc)])
    return SimpleNamespace(code=code, json=js, folds=fc,
                           reports=json.loads(js.read_text())["reports"] if code == 0 else [])


@pytest.fixture(scope="session")
def sweeps_eval(grid_run, workdir):
    return _evaluate_all(grid_run, workdir, "sweeps")


@pytest.fixture(scope="session")
def rf_model(grid_run, workdir):
    path = workdir / "rf.json"
    assert main(["train", "-d", str(grid_run.path), "--model", "rf", "--label", "sweeps", "-o", str(path)]) == 0
    return path


# -- 1 -----------------------------------------------------------------------

def test_c1_dataset_shape_and_runtime(grid_run, verdict):
    n = len(grid_run.records)
    ok = n == 4545 and grid_run.elapsed <= 20 * 60
    verdict(1, ok, f"{n} rows generated in {grid_run.elapsed:.1f} s single-threaded (need 4545 rows, <= 1200 s)")


# -- 2 -----------------------------------------------------------------------

def test_c2_richardson_share(grid_run, verdict):
    rich = [r for r in grid_run.records if r.best_sweeps == "richardson"]
    zero = [r for r in grid_run.records if r.scattering_ratio == 0.0]
    ok = len(rich) == 45 and all(r.scattering_ratio == 0.0 for r in rich) and len(zero) == 45
    verdict(2, ok, f"{len(rich)} richardson sweep labels, "
                   f"{sum(r.scattering_ratio == 0.0 for r in rich)} of them at c = 0 (need exactly the 45 c = 0 cases)")


# -- 3 -----------------------------------------------------------------------

def test_c3a_solver_agreement(grid_run, verdict):
    worst, bad = 0.0, []
    for key in sorted(AGREEMENT_CASES):
        sols = grid_run.agreement.get(key)
        if sols is None or not all(c for c, _ in sols.values()):
            bad.append(key)
            continue
        for a, b in itertools.combinations(sols, 2):
            d = rel_linf(sols[a][1], sols[b][1])
            worst = max(worst, d)
            if d > 1e-3:
                bad.append((key, a, b, d))
    verdict("3a", not bad, f"max pairwise relative Linf {worst:.2e} over {len(AGREEMENT_CASES)} cases "
                           f"(need <= 1e-3); violations: {bad[:5]}")


def test_c3b_particle_balance(grid_run, verdict):
    worst = max(grid_run.balance, key=lambda t: t[0])
    over = [t for t in grid_run.balance if t[0] > 1e-3]
    verdict("3b", not over, f"max balance residual {worst[0]:.2e} over {len(grid_run.balance)} converged solves "
                            f"(need <= 1e-3); {len(over)} above")


# -- 4 -----------------------------------------------------------------------

@pytest.fixture(scope="session")
def reference_case():
    p = SlabProblem(scattering_ratio=0.99, num_cells=128, sn_order=8)
    return {s: solve(p, s) for s in ("richardson", "dsa", "nda")}


def test_c4a_accelerators_at_reference_case(reference_case, verdict):
    d, n = reference_case["dsa"], reference_case["nda"]
    ok = d.converged and n.converged and d.sweeps <= 30 and n.sweeps <= 40
    verdict("4a", ok, f"c=0.99 N=8 128 cells: dsa {d.sweeps} sweeps (<= 30), nda {n.sweeps} sweeps (<= 40)")


def test_c4b_richardson_at_reference_case(reference_case, verdict):
    r = reference_case["richardson"]
    verdict("4b", r.sweeps >= 500, f"c=0.99 N=8 128 cells: richardson {r.sweeps} sweeps (need >= 500)")


def _accelerator_violations(records, solver):
    out = []
    for r in records:
        if r.scattering_ratio < 0.5:
            continue
        if not r.converged[solver] or r.sweeps[solver] > r.sweeps["richardson"]:
            out.append((r.sn_order, r.num_cells, r.scattering_ratio, r.sweeps[solver],
                        r.sweeps["richardson"], r.converged[solver]))
    return out


def test_c4c_dsa_never_slower_than_richardson(grid_run, verdict):
    bad = _accelerator_violations(grid_run.records, "dsa")
    verdict("4c", not bad, f"dsa converged with <= richardson sweeps in every c >= 0.5 case; "
                           f"{len(bad)} violations {bad[:3]}")


def test_c4d_nda_never_slower_than_richardson(grid_run, verdict):
    bad = _accelerator_violations(grid_run.records, "nda")
    unconv = sum(1 for b in bad if not b[5])
    verdict("4d", not bad, f"nda converged with <= richardson sweeps in every c >= 0.5 case; "
                           f"{len(bad)} violations ({unconv} unconverged), e.g. {bad[:3]}")


# -- 5 -----------------------------------------------------------------------

def test_c5_classifier_quality(sweeps_eval, verdict):
    assert sweeps_eval.code == 0
    rep = {r["model"]: r for r in sweeps_eval.reports}
    rf, knn, lda = rep["rf"], rep["knn"], rep["lda"]
    checks = {
        "rf acc >= 0.90": rf["accuracy_mean"] >= 0.90,
        "rf kappa >= 0.80": rf["kappa_mean"] >= 0.80,
        "knn acc >= 0.85": knn["accuracy_mean"] >= 0.85,
        "knn kappa >= 0.70": knn["kappa_mean"] >= 0.70,
        "lda acc <= rf - 0.10": lda["accuracy_mean"] <= rf["accuracy_mean"] - 0.10,
        "rf >= knn >= lda": rf["accuracy_mean"] >= knn["accuracy_mean"] >= lda["accuracy_mean"],
        "rf ranked first": sweeps_eval.reports[0]["model"] == "rf",
    }
    summary = ", ".join(f"{k} {r['accuracy_mean']:.3f}/{r['kappa_mean']:.3f}" for k, r in rep.items())
    failed = [k for k, v in checks.items() if not v]
    verdict(5, not failed, f"4x25 CV acc/kappa: {summary}; failed checks: {failed or 'none'}")


# -- 6 -----------------------------------------------------------------------

def test_c6a_runtime_modal_label(grid_run, verdict):
    dist = label_distribution(grid_run.records, "runtime")
    modal = max(dist, key=dist.get)
    verdict("6a", modal == "dsa", f"best_by_runtime counts {dist}; modal = {modal} (need dsa)")


def test_c6b_runtime_cv_pipeline(grid_run, workdir, verdict):
    run = _evaluate_all(grid_run, workdir, "runtime")
    ok = run.code == 0 and len(run.reports) == 5
    detail = ", ".join(f"{r['model']} {r['accuracy_mean']:.3f}" for r in run.reports)
    verdict("6b", ok, f"evaluate --all --label runtime exit {run.code}: {detail}")


# -- 7 -----------------------------------------------------------------------

def test_c7_gini_importance_order(rf_model, verdict):
    model, _ = load_model(rf_model)
    imp = model.gini_importance()
    order = [FEATURES[i] for i in np.argsort(-imp)]
    detail = ", ".join(f"{FEATURES[i]} {imp[i]:.1f}" for i in range(3))
    verdict(7, order[0] == "scattering_ratio", f"mean decrease in Gini: {detail}; ranking {order}")


# -- 8 -----------------------------------------------------------------------

def test_c8a_kappa_examples(verdict):
    got = (cohen_kappa(list("ABAB"), list("ABAB")), cohen_kappa(list("AABB"), list("ABAB")),
           cohen_kappa(list("AAAB"), list("AAAA")))
    verdict("8a", got == (1.0, 0.0, 0.0), f"tabulated kappa examples -> {got} (need 1, 0, 0 exactly)")


def test_c8b_pooled_vs_per_fold(sweeps_dataset, verdict):
    rep = repeated_stratified_kfold(sweeps_dataset, lambda: make_model("knn"), CVConfig(), keep_predictions=True)
    n_test = sum(f.n_test for f in rep.folds)
    weighted_acc = sum(f.accuracy * f.n_test for f in rep.folds) / n_test
    truth = np.concatenate([sweeps_dataset.labels[f.test_index] for f in rep.folds])
    pred = np.concatenate([f.predicted for f in rep.folds])
    d_acc = abs(weighted_acc - rep.pooled_accuracy)
    d_kap = abs(cohen_kappa(truth, pred) - kappa_from_confusion(rep.confusion))
    ok = d_acc <= 1e-12 and d_kap <= 1e-12 and rep.confusion.sum() == 25 * len(sweeps_dataset)
    verdict("8b", ok, f"accuracy gap {d_acc:.1e}, kappa gap {d_kap:.1e} over {len(rep.folds)} folds (need <= 1e-12)")


# -- 9 -----------------------------------------------------------------------

def test_c9_mlp_gradient_check(verdict):
    worst = max(gradient_check(hidden_size=h, n_samples=5, seed=s) for h in (5, 8) for s in range(3))
    verdict(9, worst <= 1e-5, f"max relative analytic vs central-difference gap {worst:.2e} (need <= 1e-5)")


# -- 10 ----------------------------------------------------------------------

SWEEP_COLUMNS = ["sn_order", "num_cells", "scattering_ratio", "rich_sweeps", "dsa_sweeps", "nda_sweeps",
                 "rich_converged", "dsa_converged", "nda_converged", "best_sweeps"]


def _sweep_columns(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([r[c] for c in SWEEP_COLUMNS])
    return buf.getvalue().encode()


def test_c10a_generate_deterministic(workdir, verdict):
    paths = [workdir / f"gen_{i}.csv" for i in (1, 2)]
    codes = [main(["generate", "-o", str(p)]) for p in paths]
    same = codes == [0, 0] and _sweep_columns(paths[0]) == _sweep_columns(paths[1])
    verdict("10a", same, f"two generate runs: exit {codes}, sweep columns byte-identical = {same}")


def test_c10b_train_deterministic(grid_run, rf_model, workdir, verdict):
    again = workdir / "rf_again.json"
    code = main(["train", "-d", str(grid_run.path), "--model", "rf", "--label", "sweeps", "-o", str(again)])
    same = code == 0 and again.read_bytes() == rf_model.read_bytes()
    verdict("10b", same, f"two train --model rf runs with seed 0: byte-identical = {same}")


def test_c10c_evaluate_deterministic(grid_run, sweeps_eval, workdir, verdict):
    js, fc = workdir / "rf_eval.json", workdir / "rf_eval.csv"
    code = main(["evaluate", "-d", str(grid_run.path), "--model", "rf", "--json", str(js), "--folds-csv", str(fc)])
    first = next(r for r in sweeps_eval.reports if r["model"] == "rf")
    second = json.loads(js.read_text())["reports"][0]
    for r in (first, second):
        r.pop("modeling_seconds")

    def fold_rows(path):
        with open(path, newline="") as fh:
            return [{k: v for k, v in r.items() if k != "seconds"} for r in csv.DictReader(fh) if r["model"] == "rf"]

    same = code == 0 and first == second and fold_rows(sweeps_eval.folds) == fold_rows(fc)
    verdict("10c", same, f"rf evaluated twice with seed 0: metrics and per-fold rows identical = {same}")


# -- 11 ----------------------------------------------------------------------

def test_c11a_knn_oracle(sweeps_dataset, verdict):
    model = KNNClassifier().fit(sweeps_dataset.features, sweeps_dataset.labels)
    rng = np.random.default_rng(2024)
    Q = np.column_stack([rng.choice([2, 4, 8, 16, 32], 200), rng.choice(2 ** np.arange(2, 11), 200),
                         rng.integers(0, 101, 200) / 100 + rng.normal(0, 0.003, 200)])
    ref = knn_oracle(model.scaling.apply(sweeps_dataset.features), sweeps_dataset.labels,
                     model.scaling.apply(Q), model.k)
    mism = int(np.sum(model.predict(Q) != ref))
    verdict("11a", mism == 0, f"KNN vs brute-force distance sort on 200 queries: {mism} mismatches")


def test_c11b_tree_oracle(verdict):
    from slabselect._backend import available_backends
    from slabselect.ml.tree import DecisionTree
    mism, checked = 0, 0
    for name, kernels in sorted(available_backends().items()):
        rng = np.random.default_rng(11)
        for _ in range(300):
            n = int(rng.integers(1, 11))
            X = np.column_stack([rng.choice([2, 8, 32], n), rng.choice([4, 16, 64], n),
                                 rng.integers(0, 5, n) / 4]).astype(float)
            y = rng.integers(0, 3, n).astype(np.intp)
            rows = rng.integers(0, n, n).astype(np.intp)
            mtry = int(rng.integers(1, 4))
            keys = rng.random((2 * n - 1, 3))
            t = DecisionTree(*(np.asarray(a) for a in kernels.grow_tree(X, y, rows, len(CLASSES), mtry, 1, keys)))
            ref = tree_oracle(X, y, rows, keys, mtry)
            same = t.n_nodes == len(ref) and all(
                t.feature[i] == nd["feature"] and t.counts[i].tolist() == nd["counts"]
                and (nd["feature"] < 0 or (t.threshold[i] == nd["threshold"]
                                            and (t.left[i], t.right[i]) == (nd["left"], nd["right"])
                                            and abs(t.decrease[i] - nd["decrease"]) <= 1e-12))
                for i, nd in enumerate(ref))
            mism += not same
            checked += 1
    verdict("11b", mism == 0, f"trees vs exhaustive split enumeration on {checked} bootstrap samples of "
                              f"<= 10 points across backends {sorted(available_backends())}: {mism} mismatches")


def test_c11c_tridiagonal_oracle(verdict):
    worst = 0.0
    for c, cells in ((0.5, 16), (0.99, 128), (0.9, 1024)):
        p = SlabProblem(scattering_ratio=c, num_cells=cells)
        rhs = np.random.default_rng(cells).random(cells)
        d_hat = np.random.default_rng(int(100 * c)).normal(0, 0.1, cells + 1)
        for lower, diag, upper in (dsa_operator(p), low_order_system(p, d_hat)):
            x = thomas_solve(lower, diag, upper, rhs)
            ref = dense_solve(lower, diag, upper, rhs)
            worst = max(worst, float(np.max(np.abs(x - ref)) / np.max(np.abs(ref))))
    verdict("11c", worst <= 1e-12, f"Thomas vs dense elimination: max relative gap {worst:.1e} (need <= 1e-12)")


# -- recommender on the full data ---------------------------------------------

def test_recommend_examples(rf_model, capsys):
    assert main(["recommend", "-m", str(rf_model), "8", "128", "0.0"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "richardson"
    assert main(["recommend", "-m", str(rf_model), "8", "128", "0.9"]) == 0
    assert capsys.readouterr().out.splitlines()[0] in ("dsa", "nda")
