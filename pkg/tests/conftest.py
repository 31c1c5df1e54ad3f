import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sigconsensus.dataset_io import generate_synthetic, save_dataset  # noqa: E402


@pytest.fixture(scope="session")
def small_synth():
    return generate_synthetic(num_writers=6, n_genuine=12, n_forge=8, dim=16,
                              genuine_spread=0.4, forge_offset=0.6, seed=11)


@pytest.fixture
def synth_dir(tmp_path, small_synth):
    save_dataset(small_synth, tmp_path / "ds")
    return tmp_path / "ds"


_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        _acceptance.append(report)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    import importlib

    mod = importlib.import_module("test_acceptance")
    terminalreporter.section("acceptance criteria")
    for rep in _acceptance:
        name = rep.nodeid.split("::")[-1]
        doc = (getattr(mod, name).__doc__ or name).strip().splitlines()[0]
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        terminalreporter.write_line(f"{status}  {doc}")
