"""Shared test setup: compile the elimination kernels once per session.

The decoding kernels are JIT-compiled on first use; warming them up here
keeps the runtime-budgeted tests measuring algorithmic time rather than
compilation.
"""

import pytest

from cachecast._kernels import warm_up


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels() -> None:
    warm_up()
