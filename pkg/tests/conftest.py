import time

import pytest

import hstab.weight_rings as wr
from hstab import corpus

SESSION_T0 = time.monotonic()


@pytest.fixture(scope="session")
def polytopes():
    """Name -> polytope for the whole bundled corpus."""
    return {name: corpus.load_corpus(name) for name in corpus.CORPUS_NAMES}


@pytest.fixture(scope="session")
def reflexive_polytopes(polytopes):
    return polytopes  # every corpus entry is reflexive; asserted in tests


@pytest.fixture(scope="session")
def tables64(polytopes):
    """Degree-64 toric weight tables, shared across the acceptance tests.

    Tables materialize degrees on first use, so handing out one table per
    polytope costs nothing until a degree is queried."""
    return {name: wr.weight_table_toric(P, 64) for name, P in polytopes.items()}


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.monotonic() - SESSION_T0
    print(f"\nfull suite wall-clock: {elapsed:.1f} s (budget 300 s)")
