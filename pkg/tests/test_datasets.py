"""Seeded dataset generators, jitter perturbations, and CSV round trips."""

import numpy as np
import pytest

from gammalink import ghp_upper_bound, space_from_points
from gammalink.datasets import (
    THREE_GAUSSIANS_MEANS,
    THREE_GAUSSIANS_WEIGHTS,
    TRI_BUMPS_HALFWIDTHS,
    TRI_BUMPS_HEIGHTS,
    TRI_BUMPS_PEAKS,
    DatasetSpec,
    dataset_spec_from_json_dict,
    generate,
    jitter,
    read_matrix_csv,
    read_points_csv,
    write_matrix_csv,
    write_points_csv,
)
from gammalink.density1d import analytic_contour_pd, mixture_of_triangles
from gammalink.space import ValidationError


def test_three_gaussians_shape_and_weights():
    space, coords = generate(DatasetSpec("three-gaussians", 500, 7))
    assert coords.shape == (500, 2)
    assert space.dist.shape == (500, 500)
    assert np.all(space.weights == 1.0 / 500)


def test_three_gaussians_component_fractions():
    _, coords = generate(DatasetSpec("three-gaussians", 1200, 3))
    means = np.asarray(THREE_GAUSSIANS_MEANS)
    nearest = np.argmin(
        np.linalg.norm(coords[:, None, :] - means[None], axis=2), axis=1)
    for i, w in enumerate(THREE_GAUSSIANS_WEIGHTS):
        assert abs(np.mean(nearest == i) - w) < 0.05


def test_single_point_dataset():
    space, coords = generate(DatasetSpec("three-gaussians", 1, 0))
    assert coords.shape == (1, 2)
    assert space.weights.tolist() == [1.0]


def test_generation_is_deterministic():
    for preset in ("three-gaussians", "tri-bumps-1d", "multi-density"):
        spec = DatasetSpec(preset, 120, 42)
        _, c1 = generate(spec)
        _, c2 = generate(spec)
        assert c1.tobytes() == c2.tobytes()
        _, c3 = generate(DatasetSpec(preset, 120, 43))
        assert c1.tobytes() != c3.tobytes()


def test_unknown_preset_and_bad_sizes():
    with pytest.raises(ValidationError):
        generate(DatasetSpec("no-such-preset", 10, 1))
    with pytest.raises(ValidationError):
        generate(DatasetSpec("three-gaussians", 0, 1))
    with pytest.raises(ValidationError):
        generate(DatasetSpec("three-gaussians", 10, 1,
                             {"weights": (0.5, 0.5, 0.5)}))


def test_tri_bumps_matches_its_analytic_diagram():
    f = mixture_of_triangles(TRI_BUMPS_PEAKS, TRI_BUMPS_HEIGHTS,
                             TRI_BUMPS_HALFWIDTHS)
    pts = analytic_contour_pd(f).points
    assert len(pts) == 2
    assert pts[0] == (0.0, 0.4)
    assert pts[1][1] == pytest.approx(0.2, abs=1e-12)
    assert 0.0 < pts[1][0] < 0.2
    _, coords = generate(DatasetSpec("tri-bumps-1d", 300, 11))
    assert coords.shape == (300, 1)
    assert coords.min() >= f.xs[0] - 1e-9
    assert coords.max() <= f.xs[-1] + 1e-9


def test_multi_density_preset_generates_plane_points():
    space, coords = generate(DatasetSpec("multi-density", 400, 5))
    assert coords.shape == (400, 2)
    assert space.dist.shape == (400, 400)


def test_dataset_spec_json_round_trip():
    spec = DatasetSpec("tri-bumps-1d", 50, 9, {"heights": [0.4, 0.2]})
    obj = spec.to_json_dict()
    assert dataset_spec_from_json_dict(obj) == spec


# ---------------------------------------------------------------------------
# jitter


def test_jitter_zero_radius_is_exact_copy():
    space, coords = generate(DatasetSpec("three-gaussians", 40, 2))
    pair = jitter(space, coords, 0.0, seed=1)
    assert ghp_upper_bound(pair) == 0.0


def test_jitter_displacements_bounded_by_radius():
    coords = np.array([[0.0], [1.0]])
    space = space_from_points(coords)
    for seed in range(5):
        pair = jitter(space, coords, 0.1, seed=seed)
        moved = np.diagonal(pair.cross())
        assert np.all(moved <= 0.1 + 1e-12)


def test_jitter_certifies_ghp_bound():
    space, coords = generate(DatasetSpec("three-gaussians", 300, 7))
    pair = jitter(space, coords, 0.05, seed=13)
    assert ghp_upper_bound(pair) <= 0.05 + 1e-12


def test_jitter_is_deterministic_and_validates():
    space, coords = generate(DatasetSpec("three-gaussians", 30, 4))
    p1 = jitter(space, coords, 0.2, seed=8)
    p2 = jitter(space, coords, 0.2, seed=8)
    assert p1.dist.tobytes() == p2.dist.tobytes()
    with pytest.raises(ValidationError):
        jitter(space, coords, -0.1, seed=8)


# ---------------------------------------------------------------------------
# CSV formats


def test_points_csv_round_trip_without_weights(tmp_path):
    rng = np.random.default_rng(21)
    coords = rng.uniform(-5, 5, size=(17, 3))
    path = tmp_path / "pts.csv"
    write_points_csv(path, coords)
    back, weights = read_points_csv(path)
    assert weights is None
    assert np.array_equal(back, coords)


def test_points_csv_round_trip_with_weights(tmp_path):
    rng = np.random.default_rng(22)
    coords = rng.uniform(-5, 5, size=(9, 2))
    w = rng.dirichlet(np.ones(9))
    path = tmp_path / "ptsw.csv"
    write_points_csv(path, coords, w)
    back, weights = read_points_csv(path)
    assert np.array_equal(back, coords)
    assert np.array_equal(weights, w)


def test_points_csv_rejects_bad_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ValidationError):
        read_points_csv(empty)
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,2.0\n3.0,oops\n")
    with pytest.raises(ValidationError):
        read_points_csv(bad)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(ValidationError):
        read_points_csv(ragged)


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(23)
    pts = rng.uniform(0, 1, size=(6, 2))
    diff = pts[:, None] - pts[None]
    dist = np.sqrt((diff ** 2).sum(-1))
    dist = np.maximum(dist, dist.T)
    path = tmp_path / "m.csv"
    write_matrix_csv(path, dist)
    assert np.array_equal(read_matrix_csv(path), dist)


def test_matrix_csv_rejects_non_square(tmp_path):
    path = tmp_path / "rect.csv"
    path.write_text("0.0,1.0\n")
    with pytest.raises(ValidationError):
        read_matrix_csv(path)
