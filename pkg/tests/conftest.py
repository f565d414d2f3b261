import pytest

from kdbuild import warm_up


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # Absorb JIT compilation once, up front, so nothing timed inside the
    # suite (acceptance budgets especially) pays for it.
    warm_up()
