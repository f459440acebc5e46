import numpy as np
import pytest

from spateval import LabeledCloud, PredictionSet, ThresholdConfig


def random_instance(seed, n_points=None, n_classes=None, n_models=3, extent=20.0, clustered=False):
    """Random cloud with several models; labels are spatially scrambled."""
    rng = np.random.default_rng(seed)
    n = n_points or int(rng.integers(5, 400))
    k = n_classes or int(rng.integers(3, 9))
    pos = rng.uniform(0, extent, (n, 3))
    if clustered:
        pos = np.round(pos)  # duplicate coordinates and distance ties
    gt = rng.integers(0, k, n)
    preds = []
    for m in range(n_models):
        rate = rng.uniform(0.0, 0.5)
        pred = np.where(rng.random(n) < rate, rng.integers(0, k, n), gt)
        preds.append(PredictionSet(f"m{m}", pred))
    tau = ThresholdConfig.from_sequence(rng.uniform(0.5, 8.0, k))
    return LabeledCloud(pos, gt, k), preds, tau


@pytest.fixture
def mde_scene():
    """Four points predicted as class 0 (tau 5): two correct, errors at 1 m and 7 m."""
    positions = [
        (0.0, 0.0, 0.0),
        (100.0, 0.0, 0.0),
        (0.0, 0.0, 1.0),
        (100.0, 0.0, 7.0),
    ]
    cloud = LabeledCloud(np.array(positions), np.array([0, 0, 1, 1]), 2)
    pred = PredictionSet("m", np.array([0, 0, 0, 0]))
    return cloud, pred, ThresholdConfig({0: 5.0, 1: 5.0})


ACCEPTANCE_RESULTS = []


def record_criterion(number, title, ok, detail=""):
    ACCEPTANCE_RESULTS.append((number, title, bool(ok), detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {number}. {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
