import numpy as np
import pytest

from projreg.dual import fit_dual
from projreg.operators import RadonOperator
from projreg.projection import fit
from projreg.training import blob_images, make_adjoint_pairs, make_pairs
from projreg.variational import fit_input_side

ACCEPTANCE_LINES = []


class RadonBenchmark:
    """32x32 images, 30 angles, 300 smooth training images, 5 validation images."""

    def __init__(self):
        self.op = RadonOperator(32, 32, 30)
        self.pairs = make_pairs(self.op, blob_images(300, 32, seed=1), input_shape=(32, 32))
        self.val_u = blob_images(5, 32, seed=99)
        self.val_y = np.vstack([self.op.apply(u) for u in self.val_u])
        self._cache = {}

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def projection(self):
        return self._get("projection", lambda: fit(self.pairs))

    @property
    def dual(self):
        return self._get("dual", lambda: fit_dual(make_adjoint_pairs(self.op, self.pairs.outputs)))

    @property
    def inputs(self):
        return self._get("inputs", lambda: fit_input_side(self.pairs))

    @property
    def matrix(self):
        return self._get("matrix", self.op.matrix)


@pytest.fixture(scope="session")
def radon_benchmark():
    return RadonBenchmark()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
