import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from annofuse.model import dumps_dataset
from annofuse.pipeline import evaluate_policy, evaluate_source
from annofuse.rng import Xoshiro256, derive_seed, fnv1a64, splitmix64
from annofuse.simulate import (SceneConfig, SimulationError, SourceProfile, gen_scene,
                               simulate_dataset)

ORDER = ["S", "L", "M"]


def test_splitmix_known_vector():
    state, out = splitmix64(0)
    assert out == 0xE220A8397B1DCDAF
    assert splitmix64(state)[1] == 0x6E789E6AA1B965F4


def test_xoshiro_reference_state():
    g = Xoshiro256(0)
    g.s = [1, 2, 3, 4]
    assert [g.next_u64() for _ in range(4)] == [11520, 0, 1509978240, 1215971899390074240]


def numpy_xoshiro(seed, n):
    """Independent uint64-array implementation of the same generator."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed)
        s = []
        for _ in range(4):
            z = z + np.uint64(0x9E3779B97F4A7C15)
            x = z
            x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            s.append(x ^ (x >> np.uint64(31)))
        rotl = lambda v, k: (v << np.uint64(k)) | (v >> np.uint64(64 - k))
        out = []
        for _ in range(n):
            out.append(int(rotl(s[1] * np.uint64(5), 7) * np.uint64(9)))
            t = s[1] << np.uint64(17)
            s[2] ^= s[0]
            s[3] ^= s[1]
            s[1] ^= s[2]
            s[0] ^= s[3]
            s[2] ^= t
            s[3] = rotl(s[3], 45)
    return out


@given(st.integers(0, 2 ** 64 - 1))
@settings(max_examples=30)
def test_xoshiro_matches_numpy(seed):
    g = Xoshiro256(seed)
    assert [g.next_u64() for _ in range(20)] == numpy_xoshiro(seed, 20)


def test_fnv_and_derivation():
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C
    assert derive_seed(1, "source", "M", 3) != derive_seed(1, "source", "S", 3)
    assert derive_seed(1, "scene", 0) == derive_seed(1, "scene", 0)


def test_distribution_moments():
    g = Xoshiro256(42)
    u = [g.uniform() for _ in range(20000)]
    assert 0 <= min(u) and max(u) < 1 and abs(np.mean(u) - 0.5) < 0.01
    z = [g.normal() for _ in range(20000)]
    assert abs(np.mean(z)) < 0.03 and abs(np.std(z) - 1) < 0.03
    for lam in (0.25, 4.0, 1200.0):
        k = [g.poisson(lam) for _ in range(4000)]
        assert abs(np.mean(k) - lam) < 4 * math.sqrt(lam / 4000)
    ints = [g.integers(2, 5) for _ in range(4000)]
    assert set(ints) == {2, 3, 4, 5}


SMALL = SceneConfig(n_images=30, poles_per_image=(0, 6), min_separation=60, seed=3)


def test_scene_separation_and_bounds():
    ds = gen_scene(SMALL)
    assert len(ds.images) == 30
    for img in ds.images:
        pts = [(a.u, a.v) for a in img.reference]
        assert len(pts) <= 6
        for i, p in enumerate(pts):
            assert 0 <= p[0] < img.width and 0 <= p[1] < img.height
            for q in pts[i + 1:]:
                assert math.dist(p, q) >= 60


def test_zero_poles():
    ds = gen_scene(SceneConfig(n_images=5, poles_per_image=(0, 0)))
    assert all(len(img.reference) == 0 for img in ds.images)


def test_infeasible_separation():
    with pytest.raises(SimulationError):
        gen_scene(SceneConfig(n_images=1, poles_per_image=(500, 500), min_separation=100))


def test_determinism_and_jobs():
    profiles = {"M": SourceProfile(0.4, 0.3, 5), "S": SourceProfile(0.85, 2, 1.5)}
    a = dumps_dataset(simulate_dataset(SMALL, profiles, seed=9))
    assert a == dumps_dataset(simulate_dataset(SMALL, profiles, seed=9))
    assert a == dumps_dataset(simulate_dataset(SMALL, profiles, seed=9, jobs=4))
    assert a != dumps_dataset(simulate_dataset(SMALL, profiles, seed=10))


def test_source_streams_independent_of_other_sources():
    one = simulate_dataset(SMALL, {"S": SourceProfile(0.8, 1, 2)}, seed=5)
    two = simulate_dataset(SMALL, {"M": SourceProfile(0.3, 1, 2), "S": SourceProfile(0.8, 1, 2)}, seed=5)
    for a, b in zip(one.images, two.images):
        assert a.annotation_set("S") == b.annotation_set("S")


def test_noiseless_perfect_source():
    ds = simulate_dataset(SMALL, {"S": SourceProfile(1.0)}, seed=1)
    for img in ds.images:
        assert [(a.u, a.v) for a in img.annotation_set("S")] == [(a.u, a.v) for a in img.reference]
    r = evaluate_source(ds, "S", 20)
    assert r.fp == 0 and r.fn == 0 and r.mae_x == 0


def test_zero_recall():
    ds = simulate_dataset(SMALL, {"S": SourceProfile(0.0)}, seed=1)
    assert all(len(img.annotation_set("S")) == 0 for img in ds.images)


def test_profile_validation():
    with pytest.raises(SimulationError):
        SourceProfile(1.5)
    with pytest.raises(SimulationError):
        SourceProfile(0.5, -1)


def test_union_recall_bound_and_intersection():
    scene = SceneConfig(n_images=300, poles_per_image=(3, 6), min_separation=100, seed=11)
    recalls = {"M": 0.4, "S": 0.85, "L": 0.26}
    ds = simulate_dataset(scene, {k: SourceProfile(r, 0.0, 2.0) for k, r in recalls.items()}, seed=11)
    union = evaluate_policy(ds, "atleast(1)", ORDER, 20, 20)
    n = union.tp + union.fn
    expected = 1 - (0.6 * 0.15 * 0.74)
    se = math.sqrt(expected * (1 - expected) / n)
    assert abs(union.recall - expected) <= 3 * se
    singles = {k: evaluate_source(ds, k, 20) for k in recalls}
    assert union.recall >= max(r.recall for r in singles.values())
    inter = evaluate_policy(ds, "atleast(3)", ORDER, 20, 20)
    assert inter.number <= min(r.number for r in singles.values())
