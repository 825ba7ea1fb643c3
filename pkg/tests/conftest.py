import pytest

from turaco.data import load_config
from turaco.experiment import BENCHMARK_DIR
from turaco.parser import parse_file

SCALAR_BENCHMARKS = ["luminance", "huber", "blackscholes", "camera", "equake"]
SYNTHETIC = ["synthetic/skewed_complexity", "synthetic/skewed_frequency", "synthetic/analysis_imprecise"]
ALL_BENCHMARKS = SCALAR_BENCHMARKS + SYNTHETIC


def load(name):
    """(surface program, input spec, config) of a bundled benchmark."""
    prog = BENCHMARK_DIR / f"{name}.turaco"
    p = parse_file(prog)
    cfg = load_config(prog.with_suffix(".json"))
    return p, cfg.spec.check(p), cfg


@pytest.fixture
def luminance():
    return load("luminance")


@pytest.fixture
def huber():
    return load("huber")


# one pass/fail line per acceptance criterion at the end of the run
_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, label): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    n, label = m.args
    entry = _criteria.setdefault(n, {"label": label, "status": []})
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry["status"].append("SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        st = _criteria[n]["status"]
        verdict = "FAIL" if "FAIL" in st else ("SKIP" if st and all(s == "SKIP" for s in st) else "PASS")
        if not st:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"criterion {n}: {verdict}  {_criteria[n]['label']} ({len(st)} checks)")
