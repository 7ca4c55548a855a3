"""Slow, transparent reference computations shared by several test modules."""

from collections import defaultdict

import numpy as np

from idsrecon.bcjr import gamma
from idsrecon.trellis import StageIndex, TrellisState, branches_into


def path_sum(spec, priors):
    """Sum over all trellis paths of the product of branch metrics.

    Walks ``branches_into`` stage by stage with plain dictionaries; within a
    B stage the insertion branches are applied in ascending pointer order.
    """
    vals = {TrellisState(0): 1.0}
    for i in range(1, spec.n_stages):
        t = StageIndex(i).t
        new = defaultdict(float)
        brs = branches_into(spec, i)
        ins = sorted((b for b in brs if b.kind == "insert"), key=lambda b: b.from_state.pointer)
        for b in brs:
            if b.kind != "insert":
                new[b.to_state] += vals.get(b.from_state, 0.0) * gamma(b, priors[t - 1], spec)
        for b in ins:
            new[b.to_state] += new[b.from_state] * gamma(b, priors[t - 1], spec)
        vals = new
    return vals.get(TrellisState(spec.M), 0.0)


def one_hot(x, q):
    return np.eye(q)[np.asarray(x)]
