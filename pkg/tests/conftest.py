from __future__ import annotations

from collections.abc import Sequence

import pytest

from ihh.model import Arc, Commodity, Instance, Network


def build(
    num_nodes: int,
    arcs: Sequence[tuple[int, int, float, float]],
    commodities: Sequence[tuple[int, int, float]] = (),
) -> Instance:
    """Instance from (tail, head, cost, capacity) and (origin, destination, demand) tuples."""
    network = Network(num_nodes, [Arc(i, t, h, c, u) for i, (t, h, c, u) in enumerate(arcs)])
    return Instance(network, tuple(Commodity(i, s, t, d) for i, (s, t, d) in enumerate(commodities)))


@pytest.fixture
def bottleneck() -> Instance:
    """Two commodities 0->3 whose cheap path (arcs 0, 1) fits only one of them.

    Cheap path 0->1->3 costs 2 per unit, detour 0->2->3 costs 10 per unit,
    every arc has capacity 10, demands are 6 and 7.
    """
    return build(
        4,
        [(0, 1, 1.0, 10.0), (1, 3, 1.0, 10.0), (0, 2, 5.0, 10.0), (2, 3, 5.0, 10.0)],
        [(0, 3, 6.0), (0, 3, 7.0)],
    )


@pytest.fixture
def line3() -> Instance:
    """Line graph 0->1->2 with arcs a=0 (0->1) and b=1 (1->2)."""
    return build(3, [(0, 1, 10.0, 100.0), (1, 2, 20.0, 100.0)], [(0, 2, 5.0)])
