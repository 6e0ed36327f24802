import itertools

import numpy as np
import pytest

from svdgp import GenConfig, generate
from svdgp import instance as instance_mod


@pytest.fixture
def small_instance():
    return generate(GenConfig(n=6, m=2, seed=11))


def all_tours(inst):
    tail = (inst.destination,) if inst.depot_mode == instance_mod.SPLIT else ()
    return [(0, *p, *tail) for p in itertools.permutations(inst.targets)]


def oracle_inputs(inst):
    """Plain lists for the enumeration oracles (inf where c2 is undefined)."""
    c2 = np.where(np.isnan(inst.c2), np.inf, inst.c2)
    supp = {i: list(inst.supplementals[i]) for i in inst.targets}
    return inst.c1.tolist(), c2.tolist(), supp


def padded(inst, s):
    return s.omega + (0,) * (inst.tour_size - inst.n - 1)
