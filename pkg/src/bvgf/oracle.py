"""Amplitude-weighted Wick oracle: graph classes against raw half-edge matchings."""
from __future__ import annotations

from fractions import Fraction

from .action import AmplitudeContext, graph_amplitude
from .graphs import enumerate_graphs, wick_sum_oracle
from .superpoly import SuperPolynomial


def class_sum(ctx: AmplitudeContext, n: int, k: int) -> SuperPolynomial:
    """Sum over all (possibly disconnected) classes of A(g) / |Aut g|."""
    total = SuperPolynomial(ctx.base_space, {})
    for g in enumerate_graphs(n, k, allow_tadpoles=True, connected_only=False):
        total = total + graph_amplitude(ctx, g).scale(Fraction(1, g.aut_order))
    return total


def matching_sum(ctx: AmplitudeContext, n: int, k: int) -> SuperPolynomial:
    # many matchings give the same labelled multigraph; evaluate each one once
    cache: dict = {}

    def amp(g):
        key = (g.edges, g.legs)
        if key not in cache:
            cache[key] = graph_amplitude(ctx, g)
        return cache[key]

    out = wick_sum_oracle(n, k, amp, max_trivalent=max(n, 1))
    return out if isinstance(out, SuperPolynomial) else SuperPolynomial(ctx.base_space, {})


def amplitude_oracle(ctx: AmplitudeContext, n: int, k: int) -> bool:
    return class_sum(ctx, n, k) == matching_sum(ctx, n, k)
