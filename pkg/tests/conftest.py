import numpy as np
import pytest

from confcascade import Dataset, Example, RandomSource, SynthConfig, synthesize


def make_example(id, scores, admissible, answers, labels=None):
    scores = np.asarray(scores, dtype=float)
    if scores.ndim == 1:
        scores = scores[:, None]
    if labels is None:
        labels = range(len(scores))
    return Example(id, list(labels), scores, admissible, answers)


@pytest.fixture
def rng():
    return RandomSource(1234)


@pytest.fixture(scope="session")
def small_dataset():
    cfg = SynthConfig(example_count=120, candidate_count=30, layer_count=2, admissible_size=(1, 4),
                      admissible_loc=(-1.5, -2.5), rho=0.5, difficulty=1.0)
    return synthesize(cfg, 7)


@pytest.fixture(scope="session")
def three_layer_dataset():
    cfg = SynthConfig(example_count=400, candidate_count=40, layer_count=3, admissible_size=(1, 5),
                      admissible_loc=(-1.0, -1.5, -2.5), rho=0.4, difficulty=1.0)
    return synthesize(cfg, 11)


@pytest.fixture
def two_layer_toy():
    return Dataset(2, [
        make_example("a", [[0.1, 0.2], [1.0, 2.0], [3.0, 0.5]], {0, 2}, {0}),
        make_example("b", [[0.4, 0.1], [0.2, 0.9]], {1}, {1}),
    ])


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a named acceptance criterion's outcome for the end-of-run summary."""
    name = request.node.get_closest_marker("criterion").args[0]
    ACCEPTANCE.setdefault(name, "PASS")
    yield
    if getattr(request.node, "rep_call_failed", True):
        ACCEPTANCE[name] = "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call_failed = rep.failed


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
        terminalreporter.write_line(f"{ACCEPTANCE[name]}  {name}")
