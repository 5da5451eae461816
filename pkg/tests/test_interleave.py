"""Correspondences, interleaving oracles and interleaving-distance bounds."""

import math

import numpy as np
import pytest

from gammalink import (
    Kernel,
    ambient_from_clouds,
    build_forest,
    line,
    space_from_points,
)
from gammalink.interleave import (
    Correspondence,
    _clusters_at_u,
    _containment_map,
    _mass_deficit_at,
    _max_mass_deficit,
    _probe_times,
    ball_correspondence,
    check_interleaving,
    check_measured_interleaving,
    check_multiparam_interleaving,
    closest_point_correspondence,
    correspondence_from_json_dict,
    dci_exact_tiny,
    dci_upper,
)
from gammalink.linkage import sample_kernel_linkage
from gammalink.persistence import bottleneck, diagram
from gammalink.space import ValidationError

from oracles import random_kernel, random_line, random_space


def identity(n):
    return Correspondence(pairs=tuple((i, i) for i in range(n)), n_x=n, n_y=n)


def full_relation(nx, ny):
    return Correspondence(
        pairs=tuple((i, j) for i in range(nx) for j in range(ny)),
        n_x=nx, n_y=ny)


def disk_jitter(rng, shape, radius):
    v = rng.normal(size=shape)
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    scale = radius * rng.uniform(0.0, 1.0, size=(shape[0], 1)) ** 0.5
    return v / np.maximum(norms, 1e-12) * scale


# ---------------------------------------------------------------------------
# correspondences


def test_correspondence_requires_surjective_projections():
    with pytest.raises(ValidationError):
        Correspondence(pairs=((0, 0),), n_x=2, n_y=1)
    with pytest.raises(ValidationError):
        Correspondence(pairs=((0, 0), (1, 0)), n_x=2, n_y=2)
    with pytest.raises(ValidationError):
        Correspondence(pairs=((0, 2),), n_x=1, n_y=2)


def test_correspondence_images_and_transpose():
    corr = Correspondence(pairs=((0, 0), (0, 1), (1, 1)), n_x=2, n_y=2)
    assert corr.image([0]) == frozenset({0, 1})
    assert corr.preimage([1]) == frozenset({0, 1})
    t = corr.transpose()
    assert t.pairs == ((0, 0), (1, 0), (1, 1))
    assert t.transpose().image([0]) == corr.image([0])


def test_correspondence_json_round_trip():
    corr = Correspondence(pairs=((1, 0), (0, 1), (0, 0)), n_x=2, n_y=2)
    obj = corr.to_json_dict()
    assert obj == {"n_x": 2, "n_y": 2, "pairs": [[0, 0], [0, 1], [1, 0]]}
    back = correspondence_from_json_dict(obj)
    assert set(back.pairs) == set(corr.pairs)


def test_closest_point_correspondence_identity_copies():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, size=(6, 2))
    corr = closest_point_correspondence(ambient_from_clouds(pts, pts))
    assert all((i, i) in corr.pairs for i in range(6))


def test_closest_point_correspondence_single_target():
    pair = ambient_from_clouds(np.array([[0.0], [2.0]]), np.array([[1.0]]))
    corr = closest_point_correspondence(pair)
    assert set(corr.pairs) == {(0, 0), (1, 0)}


def test_closest_point_correspondence_keeps_ties():
    pair = ambient_from_clouds(np.array([[0.0]]), np.array([[-1.0], [1.0]]))
    corr = closest_point_correspondence(pair)
    assert set(corr.pairs) == {(0, 0), (0, 1)}


def test_ball_correspondence_radius_controls_pairs():
    a = np.array([[0.0], [1.0]])
    b = np.array([[0.1], [1.1]])
    pair = ambient_from_clouds(a, b)
    near = ball_correspondence(pair, 0.15)
    assert set(near.pairs) == {(0, 0), (1, 1)}
    wide = ball_correspondence(pair, 1.2)
    assert set(wide.pairs) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    with pytest.raises(ValidationError):
        ball_correspondence(pair, 0.05)  # below the Hausdorff distance


# ---------------------------------------------------------------------------
# one-parameter interleaving


def test_every_forest_self_interleaves_at_zero():
    rng = np.random.default_rng(101)
    for _ in range(30):
        sp = random_space(rng, 8)
        f = build_forest(sp, random_kernel(rng), random_line(rng))
        ok, witness = check_interleaving(f, f, identity(f.n_points), 0.0)
        assert ok is True and witness is None


def test_interleaving_rejects_mixed_orientations(uniform_kernel):
    sp = space_from_points(np.array([[0.0], [1.0]]))
    f1 = build_forest(sp, uniform_kernel, line(2.0, 1.0))
    f2 = build_forest(sp, uniform_kernel, line(2.0, 1.0, param="s"))
    with pytest.raises(ValidationError):
        check_interleaving(f1, f2, identity(2), 0.5)


def test_interleaving_rejects_bad_inputs(uniform_kernel):
    sp = space_from_points(np.array([[0.0], [1.0]]))
    f = build_forest(sp, uniform_kernel, line(2.0, 1.0))
    with pytest.raises(ValidationError):
        check_interleaving(f, f, identity(3), 0.0)
    with pytest.raises(ValidationError):
        check_interleaving(f, f, identity(2), -0.1)


def test_jittered_spaces_interleave_at_twice_the_jitter(uniform_kernel):
    rng = np.random.default_rng(103)
    for _ in range(10):
        n = int(rng.integers(4, 9))
        pts = rng.uniform(-1.0, 1.0, size=(n, 2))
        moved = pts + disk_jitter(rng, pts.shape, 0.009)
        f1 = build_forest(space_from_points(pts), uniform_kernel, line(1.0, 1.0))
        f2 = build_forest(space_from_points(moved), uniform_kernel, line(1.0, 1.0))
        corr = closest_point_correspondence(ambient_from_clouds(pts, moved))
        ok, witness = check_interleaving(f1, f2, corr, 0.02)
        assert ok, witness


def test_single_cluster_birth_gap_needs_matching_shift(uniform_kernel):
    sp = space_from_points(np.array([[0.0]]))
    f1 = build_forest(sp, uniform_kernel, line(1.0, 1.0))
    f2 = build_forest(sp, uniform_kernel, line(1.0, 0.7))
    ok, witness = check_interleaving(f1, f2, identity(1), 0.1)
    assert ok is False
    assert witness["direction"] == "left"
    assert 0.7 < witness["r"] <= 1.0
    assert witness["cluster"] == [0]
    assert check_interleaving(f1, f2, identity(1), 0.3)[0] is True


def test_covariant_endpoint_gap_is_enforced(uniform_kernel):
    sp = space_from_points(np.array([[0.0]]))
    f1 = build_forest(sp, uniform_kernel, line(1.0, 0.5, param="s"))
    f2 = build_forest(sp, uniform_kernel, line(0.7, 0.5, param="s"))
    ok, witness = check_interleaving(f1, f2, identity(1), 0.1)
    assert ok is False and witness["direction"] == "endpoint"
    assert check_interleaving(f1, f2, identity(1), 0.35)[0] is True


# ---------------------------------------------------------------------------
# measured interleaving


def test_measured_self_interleaving_at_zero(two_point_space, two_point_curve,
                                            uniform_kernel):
    f = build_forest(two_point_space, uniform_kernel, two_point_curve)
    ok, witness = check_measured_interleaving(
        f, f, identity(2), 0.0, 0.0,
        two_point_space.weights, two_point_space.weights)
    assert ok is True and witness is None


@pytest.fixture
def reweighted_pair(uniform_kernel):
    """Same geometry and curve, weights moved by total variation 0.03; every
    point's weight stays above the curve's threshold cap so the two forests
    coincide exactly."""
    pts = np.array([[0.0, 0.0], [1.1, 0.0], [0.0, 1.3], [1.15, 1.35]])
    w1 = np.array([0.3, 0.3, 0.2, 0.2])
    w2 = np.array([0.32, 0.28, 0.21, 0.19])
    curve = line(2.0, 0.15)
    f1 = build_forest(space_from_points(pts, weights=w1), uniform_kernel, curve)
    f2 = build_forest(space_from_points(pts, weights=w2), uniform_kernel, curve)
    return f1, f2, w1, w2


def test_mass_slack_absorbs_weight_perturbation(reweighted_pair):
    f1, f2, w1, w2 = reweighted_pair
    assert [(nd.death, nd.birth) for nd in f1.nodes] == \
           [(nd.death, nd.birth) for nd in f2.nodes]
    ok, witness = check_measured_interleaving(f1, f2, identity(4), 0.0, 0.05, w1, w2)
    assert ok is True and witness is None


def test_mass_deficit_reported_when_slack_too_small(reweighted_pair):
    f1, f2, w1, w2 = reweighted_pair
    ok, witness = check_measured_interleaving(f1, f2, identity(4), 0.0, 0.02, w1, w2)
    assert ok is False
    assert witness["mass_deficit"] == pytest.approx(0.03, abs=1e-12)


def test_group_deficit_equals_full_subset_enumeration(uniform_kernel):
    """The per-target-group reduction must agree with maximizing the mass
    deficit over every subset of source clusters."""
    rng = np.random.default_rng(107)
    for _ in range(15):
        n = int(rng.integers(4, 9))
        pts = rng.uniform(-1.0, 1.0, size=(n, 2))
        moved = pts + disk_jitter(rng, pts.shape, 0.05)
        w1 = rng.dirichlet(np.ones(n))
        w2 = rng.dirichlet(np.ones(n))
        curve = line(1.2, 1.0)
        f1 = build_forest(space_from_points(pts, weights=w1), uniform_kernel, curve)
        f2 = build_forest(space_from_points(moved, weights=w2), uniform_kernel, curve)
        corr = ball_correspondence(ambient_from_clouds(pts, moved), 0.2)
        eps = 0.25
        for u in _probe_times(f1, f2, eps):
            sources = _clusters_at_u(f1, u)
            targets = _clusters_at_u(f2, u - eps)
            if not sources or targets is None:
                continue
            ok, assign = _containment_map(sources, targets, corr)
            if not ok:
                continue
            got = _mass_deficit_at(sources, targets, assign, corr, w1, w2)
            want = 0.0
            for bits in range(1, 1 << len(sources)):
                chosen = [c for i, c in enumerate(sources) if bits >> i & 1]
                mass = sum(w1[p] for c in chosen for p in c)
                image = corr.image(frozenset().union(*chosen))
                want = max(want, mass - sum(w2[j] for j in image))
            assert got == pytest.approx(want, abs=1e-12)


def test_large_collection_deficit_matches_brute_force():
    rng = np.random.default_rng(109)
    for _ in range(3):
        c, t = 13, 6
        masses = rng.uniform(0.01, 0.2, size=c).tolist()
        images = [frozenset(rng.choice(t, size=rng.integers(1, 4), replace=False))
                  for _ in range(c)]
        yw = rng.uniform(0.01, 0.2, size=t)
        got = _max_mass_deficit(masses, images, yw)
        want = 0.0
        for bits in range(1, 1 << c):
            tot, cover = 0.0, set()
            for i in range(c):
                if bits >> i & 1:
                    tot += masses[i]
                    cover |= images[i]
            want = max(want, tot - sum(yw[j] for j in cover))
        assert got == pytest.approx(want, abs=1e-7)


# ---------------------------------------------------------------------------
# multiparameter grids


def small_grids():
    s = np.arange(0.05, 1.0 + 1e-9, 0.05)
    t = np.arange(0.0, 1.0 + 1e-9, 0.05)
    k = np.arange(0.05, 0.5 + 1e-9, 0.05)
    return s, t, k


def test_identical_grids_interleave_at_zero(uniform_kernel):
    rng = np.random.default_rng(113)
    sp = space_from_points(rng.uniform(-1, 1, size=(6, 2)))
    s, t, k = small_grids()
    labels = sample_kernel_linkage(sp, uniform_kernel, s, t, k)
    assert check_multiparam_interleaving(
        labels, (s, t, k), labels, (s, t, k), identity(6), (0.0, 0.0, 0.0))


def test_jittered_grids_interleave_at_doubled_shift(uniform_kernel):
    rng = np.random.default_rng(127)
    pts = rng.uniform(-1.0, 1.0, size=(8, 2))
    moved = pts + disk_jitter(rng, pts.shape, 0.045)
    s, t, k = small_grids()
    lx = sample_kernel_linkage(space_from_points(pts), uniform_kernel, s, t, k)
    ly = sample_kernel_linkage(space_from_points(moved), uniform_kernel, s, t, k)
    assert check_multiparam_interleaving(
        lx, (s, t, k), ly, (s, t, k), identity(8), (0.1, 0.1, 0.05), m=0.05)


def test_different_spaces_fail_at_zero_shift(uniform_kernel):
    tight = space_from_points(np.array([[0.0], [0.1], [2.0], [2.1]]))
    spread = space_from_points(np.array([[0.0], [0.9], [2.0], [2.9]]))
    s, t, k = small_grids()
    lx = sample_kernel_linkage(tight, uniform_kernel, s, t, k)
    ly = sample_kernel_linkage(spread, uniform_kernel, s, t, k)
    assert not check_multiparam_interleaving(
        lx, (s, t, k), ly, (s, t, k), identity(4), (0.0, 0.0, 0.0))


def test_misaligned_grids_are_rejected(uniform_kernel):
    sp = space_from_points(np.array([[0.0], [0.5], [1.0], [1.6]]))
    s = np.arange(0.07, 0.631, 0.07)
    t = np.arange(0.0, 0.631, 0.07)
    k = np.arange(0.07, 0.22, 0.07)
    labels = sample_kernel_linkage(sp, uniform_kernel, s, t, k)
    with pytest.raises(ValidationError):
        check_multiparam_interleaving(
            labels, (s, t, k), labels, (s, t, k), identity(4), (0.1, 0.0, 0.0))
    with pytest.raises(ValidationError):
        check_multiparam_interleaving(
            labels, (s, t, k), labels, (s, t, k), identity(5), (0.0, 0.0, 0.0))


def test_grid_pass_transfers_to_line_slices(uniform_kernel):
    """When sampled three-parameter clusterings interleave at a uniform shift,
    the one-parameter restrictions along a line interleave at that shift
    divided by the line's slowest coordinate speed."""
    rng = np.random.default_rng(131)
    s = np.arange(0.1, 1.6 + 1e-9, 0.1)
    t = np.arange(0.0, 1.6 + 1e-9, 0.1)
    k = np.arange(0.1, 1.0 + 1e-9, 0.1)
    eps = 0.2
    done = 0
    for _ in range(20):
        n = int(rng.integers(4, 9))
        pts = rng.uniform(-1.0, 1.0, size=(n, 2))
        moved = pts + disk_jitter(rng, pts.shape, 0.09)
        spx, spy = space_from_points(pts), space_from_points(moved)
        lx = sample_kernel_linkage(spx, uniform_kernel, s, t, k)
        ly = sample_kernel_linkage(spy, uniform_kernel, s, t, k)
        ident = identity(n)
        if not check_multiparam_interleaving(
                lx, (s, t, k), ly, (s, t, k), ident, (eps, eps, eps), m=eps):
            continue
        x = float(rng.uniform(0.5, 1.5))
        y = float(rng.uniform(0.5, 1.0))
        speed = min(x / y, 1.0)
        f1 = build_forest(spx, uniform_kernel, line(x, y))
        f2 = build_forest(spy, uniform_kernel, line(x, y))
        ok, witness = check_measured_interleaving(
            f1, f2, ident, eps / speed, eps)
        assert ok, witness
        done += 1
    assert done >= 15


# ---------------------------------------------------------------------------
# interleaving-distance estimates


def test_shift_search_zero_for_identical(two_point_space, two_point_curve,
                                         uniform_kernel):
    f = build_forest(two_point_space, uniform_kernel, two_point_curve)
    assert dci_upper(f, f, identity(2)) == 0.0


def test_shift_search_recovers_birth_gap(uniform_kernel):
    sp = space_from_points(np.array([[0.0]]))
    f1 = build_forest(sp, uniform_kernel, line(1.0, 0.5))
    f2 = build_forest(sp, uniform_kernel, line(1.0, 0.8))
    assert dci_upper(f1, f2, identity(1)) == pytest.approx(0.3, abs=1e-6)


def test_diagram_distance_below_shift_bound():
    rng = np.random.default_rng(137)
    for _ in range(15):
        sp1 = random_space(rng, 5)
        sp2 = random_space(rng, 5)
        kern = random_kernel(rng)
        curve = line(float(rng.uniform(0.8, 2.0)), float(rng.uniform(0.4, 1.0)))
        f1 = build_forest(sp1, kern, curve)
        f2 = build_forest(sp2, kern, curve)
        ub = dci_upper(f1, f2, full_relation(f1.n_points, f2.n_points))
        assert bottleneck(diagram(f1), diagram(f2)) <= ub + 1e-9


def two_point_forest(sep, kernel, x=2.0, y=0.6):
    sp = space_from_points(np.array([[0.0], [sep]]))
    return build_forest(sp, kernel, line(x, y))


def test_exhaustive_distance_zero_for_identical(uniform_kernel):
    f = two_point_forest(1.0, uniform_kernel)
    assert dci_exact_tiny(f, f) == 0.0


def test_exhaustive_distance_sees_merge_shift(uniform_kernel):
    # merge values 0.6*(1 - 1.0/2) = 0.3 and 0.6*(1 - 1.2/2) = 0.24
    f1 = two_point_forest(1.0, uniform_kernel)
    f2 = two_point_forest(1.2, uniform_kernel)
    assert dci_exact_tiny(f1, f2) == pytest.approx(0.06, abs=2e-6)


def test_exhaustive_distance_rejects_large_instances(uniform_kernel):
    sp = space_from_points(np.arange(4.0).reshape(-1, 1))
    f = build_forest(sp, uniform_kernel, line(5.0, 1.0))
    with pytest.raises(ValidationError):
        dci_exact_tiny(f, f)


def test_diagram_distance_below_exhaustive_distance():
    rng = np.random.default_rng(139)
    for _ in range(12):
        sp1 = random_space(rng, 2)
        sp2 = random_space(rng, 3)
        kern = random_kernel(rng)
        curve = line(float(rng.uniform(0.8, 2.0)), float(rng.uniform(0.4, 1.0)))
        f1 = build_forest(sp1, kern, curve)
        f2 = build_forest(sp2, kern, curve)
        d = dci_exact_tiny(f1, f2)
        assert bottleneck(diagram(f1), diagram(f2)) <= d + 1e-9


def test_exhaustive_distance_is_a_pseudometric():
    rng = np.random.default_rng(149)
    for _ in range(30):
        kern = random_kernel(rng)
        curve = line(float(rng.uniform(0.8, 2.0)), float(rng.uniform(0.4, 1.0)))
        fs = [build_forest(random_space(rng, 2), kern, curve) for _ in range(3)]
        dab = dci_exact_tiny(fs[0], fs[1])
        dba = dci_exact_tiny(fs[1], fs[0])
        assert dab == pytest.approx(dba, abs=2e-6)
        dac = dci_exact_tiny(fs[0], fs[2])
        dbc = dci_exact_tiny(fs[1], fs[2])
        assert dac <= dab + dbc + 3e-6
        assert dci_exact_tiny(fs[0], fs[0]) == 0.0
