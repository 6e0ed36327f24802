import math

import numpy as np
import pytest

from svdgp import geometry
from svdgp import instance as im
from svdgp.instance import GenConfig, InstanceFormatError, InstanceValidationError, generate


@pytest.mark.parametrize("mode", [im.SPLIT, im.MERGED])
def test_generator_layout(mode):
    cfg = GenConfig(n=5, m=3, radius=4.0, seed=2, depot_mode=mode)
    inst = generate(cfg)
    t = 7 if mode == im.SPLIT else 6
    assert inst.tour_size == t and inst.num_vertices == t + 15
    assert inst.supplementals[2] == (t + 3, t + 4, t + 5)
    assert (inst.poses[0].x, inst.poses[0].y) == (5.0, 5.0)
    if mode == im.SPLIT:
        assert (inst.poses[6].x, inst.poses[6].y) == (95.0, 95.0)
        assert inst.forced_edges == ((6, 0),)
        assert inst.c1[6, 0] == 0.0
    else:
        assert inst.forced_edges == ()
    for i in inst.targets:
        for s in inst.supplementals[i]:
            d = math.dist((inst.poses[i].x, inst.poses[i].y), (inst.poses[s].x, inst.poses[s].y))
            assert d <= 4.0 + 1e-9
            assert 0 <= inst.poses[s].x <= 100 and 0 <= inst.poses[s].y <= 100
    assert inst.c1[1, 3] == geometry.cost(inst.poses[1], inst.poses[3], 5.0)


def test_generator_deterministic():
    a = generate(GenConfig(n=6, m=2, seed=9))
    b = generate(GenConfig(n=6, m=2, seed=9))
    c = generate(GenConfig(n=6, m=2, seed=10))
    assert a == b and a != c
    assert im.dumps(a) == im.dumps(b)


def test_e2_structure(small_instance):
    inst = small_instance
    s1, s2 = inst.supplementals[1], inst.supplementals[2]
    assert inst.in_e2(1, s1[0]) and inst.in_e2(s1[0], s1[1]) and inst.in_e2(s1[0], 3)
    assert not inst.in_e2(1, s2[0])
    assert not inst.in_e2(s1[0], s2[0])
    assert not inst.in_e2(3, s1[0])
    with pytest.raises(KeyError):
        inst.cost2(2, s1[0])
    assert inst.role(0) == "source" and inst.role(7) == "destination"
    assert inst.role(s1[0]) == "supplemental-of:1" and inst.owner(s1[0]) == 1


@pytest.mark.parametrize("explicit", [False, True])
def test_round_trip(small_instance, explicit, tmp_path):
    path = tmp_path / "inst.txt"
    im.save(small_instance, path, explicit_costs=explicit)
    back = im.load(path)
    assert back == small_instance
    np.testing.assert_array_equal(back.c1, small_instance.c1)
    np.testing.assert_array_equal(np.isnan(back.c2), np.isnan(small_instance.c2))


def test_matrix_only_round_trip():
    rng = np.random.default_rng(0)
    t, m, n = 4, 2, 3
    v = t + n * m
    c1 = rng.random((t, t))
    c2 = rng.random((v, v))
    c2[:t, :t] = c1
    inst = im.from_matrices(c1, c2, m)
    back = im.loads(im.dumps(inst))
    assert back == inst
    assert back.poses is None


def test_missing_supplementals_message():
    text = """n: 2
m: 2
depot_mode: merged
turn_radius: 1
[vertices]
0 depot 0 0 0
1 target 1 0 0
2 target 0 1 0
3 supplemental-of:1 1 1 0
4 supplemental-of:1 2 1 0
5 supplemental-of:2 2 2 0
"""
    with pytest.raises(ValueError, match="target 2 lists 1 supplemental"):
        im.loads(text)


def test_format_errors_carry_line():
    with pytest.raises(InstanceFormatError) as err:
        im.loads("n: two\nm: 2\n")
    assert err.value.line == 1


def test_validation_rejects_negative_costs(small_instance):
    c1 = small_instance.c1.copy()
    c1[1, 2] = -1.0
    c2 = small_instance.c2.copy()
    c2[1, 2] = -1.0
    with pytest.raises(InstanceValidationError):
        im.Instance(n=6, m=2, supplementals=small_instance.supplementals, c1=c1, c2=c2,
                    depot_mode=im.SPLIT)


@pytest.mark.parametrize("kw", [dict(n=1, m=2), dict(n=3, m=0), dict(n=3, m=1, radius=0),
                                dict(n=3, m=1, depot_mode="loop")])
def test_bad_config(kw):
    with pytest.raises(ValueError):
        GenConfig(**kw)


def test_arrays_read_only(small_instance):
    with pytest.raises(ValueError):
        small_instance.c1[0, 1] = 3.0
