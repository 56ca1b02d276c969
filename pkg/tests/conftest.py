"""Shared fixtures: synthetic datasets and small random-data helpers."""

import numpy as np
import pytest

from relanom.dataset import Dataset
from relanom.synth import LABEL_ANOMALOUS, scraping_analogue, wifi_analogue


@pytest.fixture(scope="session")
def scraping():
    data, labels = scraping_analogue(1000, seed=0)
    return data, labels == LABEL_ANOMALOUS


@pytest.fixture(scope="session")
def wifi():
    data, labels = wifi_analogue(1000, seed=0)
    return data, labels == LABEL_ANOMALOUS


def random_dataset(n: int, d: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(n, d)))


def oracle_paths(s: np.ndarray, sources):
    """Min-sum and max-product path costs by enumerating simple paths.

    Returns (dist, prod) where dist[i] minimizes the sum of -ln s over
    paths from i to any source and prod[i] maximizes the product of
    similarities over the same paths.  Depth-first search with a visited
    bitmask; feasible for n <= 8.
    """
    n = s.shape[0]
    weights = -np.log(s)
    dist = np.full(n, np.inf)
    prod = np.zeros(n)
    source_set = set(int(i) for i in sources)

    def dfs(node, visited, cost, gain):
        if node in source_set:
            dist[start] = min(dist[start], cost)
            prod[start] = max(prod[start], gain)
            return
        for nxt in range(n):
            if nxt != node and not visited & (1 << nxt):
                dfs(nxt, visited | (1 << nxt), cost + weights[node, nxt], gain * s[node, nxt])

    for start in range(n):
        if start in source_set:
            dist[start], prod[start] = 0.0, 1.0
            continue
        dfs(start, 1 << start, 0.0, 1.0)
    return dist, prod


@pytest.fixture
def small_data():
    return random_dataset(12, 2, seed=7)
