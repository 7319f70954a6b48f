import numpy as np
import pytest

from mofpca.dataset import RawTable, from_arrays, make_two_group_dataset, standardize
from mofpca.pca import compute_basis


@pytest.fixture
def diag_toy():
    """Four points on the axes; X^T X = diag(3, 1), group A on axis 0, B on axis 1."""
    a, b = np.sqrt(1.5), np.sqrt(0.5)
    x = np.array([[a, 0.0], [-a, 0.0], [0.0, b], [0.0, -b]])
    ds = standardize(RawTable(x, ["f0", "f1"]), [0, 1], [2, 3], mode="none")
    return ds, compute_basis(ds)


@pytest.fixture
def random_dataset():
    def make(n=20, d=6, seed=0, n_a=None, mode="zscore"):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, d)) @ rng.standard_normal((d, d))
        n_a = n_a if n_a is not None else n // 3
        groups = np.array(["A"] * n_a + ["B"] * (n - n_a))
        rng.shuffle(groups)
        ds = from_arrays(x, groups, "A", mode)
        return ds, compute_basis(ds)
    return make


@pytest.fixture(scope="session")
def synthetic12():
    x, groups = make_two_group_dataset(d=12, seed=0)
    ds = from_arrays(x, groups, "A")
    return ds, compute_basis(ds)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for status in ("passed", "failed", "skipped", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props and (rep.when == "call" or status != "passed"):
                verdict = "PASS" if status == "passed" else status.upper()
                lines.append((props["criterion"], f"criterion {props['criterion']}: {verdict}  {props.get('summary', '')}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
