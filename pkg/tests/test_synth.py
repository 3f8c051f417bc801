import numpy as np
import pytest

from depthkit.geometry import CameraIntrinsics, global_to_camera, project_points
from depthkit.io import FormatError
from depthkit.lidar_depth import round_half_away
from depthkit.synth import Rect, SceneSpec, load_scene, pose_chain, render_scene, sample_lidar

from .conftest import BASELINE, FOCAL, SCENES

INTR = CameraIntrinsics(focal=FOCAL, height=40, width=64, baseline=BASELINE)
FB = FOCAL * BASELINE


def test_full_frame_plane_constant_disparity():
    scene = render_scene(SceneSpec(background_depth=30.0), INTR)
    assert np.all(scene.gt_disparity == pytest.approx(FB / 30.0, rel=1e-15))
    assert np.all(scene.gt_depth.values == 30.0) and scene.gt_depth.valid.all()


def test_unit_disparity_is_one_pixel_shift():
    scene = render_scene(SceneSpec(background_depth=FB), INTR)
    assert np.all(scene.gt_disparity == 1.0)
    np.testing.assert_array_equal(scene.right[:, :-1], scene.left[:, 1:])
    # left column 0 would match right column -1
    assert scene.occluded[:, 0].all() and not scene.occluded[:, 1:].any()


def test_two_plane_disparity_step():
    z1, z2 = 10.0, 40.0
    spec = SceneSpec(rects=(Rect(z1, 10, 20, 30, 40, 3),), background_depth=z2)
    scene = render_scene(spec, INTR)
    step = scene.gt_disparity[20, 20] - scene.gt_disparity[20, 19]
    assert step == pytest.approx(FB * (1 / z1 - 1 / z2), rel=1e-12)
    assert scene.labels[20, 20] == 1 and scene.labels[20, 19] == 0


def test_occlusion_behind_near_rect():
    # near rect at 20 m over columns [40, 60): d_near = FB/20, d_far = FB/40.
    # In the right view the rect covers u' in [40 - d_near, 60 - d_near); a
    # background pixel x is hidden when x - d_far falls there.
    spec = SceneSpec(rects=(Rect(20.0, 10, 40, 30, 60, 3),), background_depth=40.0)
    scene = render_scene(spec, INTR)
    d_near, d_far = FB / 20.0, FB / 40.0
    xs = np.arange(INTR.width)
    match = round_half_away(xs - d_far)
    hidden_bg = (match >= round_half_away(40 - d_near)) & (match < round_half_away(60 - d_near))
    outside = match < 0
    expected = (hidden_bg | outside) & ((xs < 40) | (xs >= 60))
    expected |= (xs >= 40) & (xs < 60) & (round_half_away(xs - d_near) < 0)
    np.testing.assert_array_equal(scene.occluded[20], expected)
    assert expected[27:40].all() and not expected[60:].any()
    # rows without the rect only lose the out-of-frame strip
    np.testing.assert_array_equal(scene.occluded[5], outside)


def test_seeded_determinism():
    spec = SceneSpec(rects=(Rect(12.0, 5, 5, 20, 30, 9),), noise_sigma=0.02, lidar_count=300, seed=4, pose_seed=1)
    a, b = render_scene(spec, INTR), render_scene(spec, INTR)
    np.testing.assert_array_equal(a.left, b.left)
    np.testing.assert_array_equal(a.right, b.right)
    np.testing.assert_array_equal(sample_lidar(spec, INTR), sample_lidar(spec, INTR))


def test_identity_chain_and_empty_cloud():
    spec = SceneSpec(background_depth=20.0, lidar_count=50)
    pts = sample_lidar(spec, INTR)
    assert np.all(pts[:, 2] == 20.0)
    assert sample_lidar(spec, INTR, count=0).shape == (0, 3)


@pytest.mark.parametrize("sampling", ["image", "surface"])
def test_lidar_roundtrip_hits_gt(sampling):
    spec = SceneSpec(
        rects=(Rect(8.0, 5, 10, 25, 30, 1), Rect(15.0, 15, 25, 35, 60, 2)),
        background_depth=50.0,
        lidar_count=2000,
        lidar_sampling=sampling,
        pose_seed=7,
    )
    body, cam = pose_chain(spec)
    pts = sample_lidar(spec, INTR, (body, cam))
    u, v, z, ok = project_points(INTR, global_to_camera(body, cam, pts))
    assert ok.all()
    col = round_half_away(u).astype(int)
    row = round_half_away(v).astype(int)
    inside = (col >= 0) & (col < INTR.width) & (row >= 0) & (row < INTR.height)
    assert inside.all()
    gt = render_scene(spec, INTR).gt_depth.values
    np.testing.assert_allclose(z, gt[row, col], atol=1e-6)


def test_surface_sampling_thins_near_surfaces():
    spec = SceneSpec(rects=(Rect(5.0, 0, 0, 40, 32, 1),), background_depth=50.0, lidar_count=4000, lidar_sampling="surface")
    z = sample_lidar(spec, INTR)[:, 2]
    assert np.mean(z < 10) < 0.05


def test_spec_validation():
    with pytest.raises(ValueError):
        SceneSpec(background_depth=0)
    with pytest.raises(ValueError):
        SceneSpec(lidar_sampling="grid")
    with pytest.raises(ValueError):
        render_scene(SceneSpec(rects=(Rect(5.0, 0, 0, 41, 10),)), INTR)


def test_shipped_scene_files_parse():
    for path in sorted(SCENES.glob("*.txt")):
        spec = load_scene(path)
        assert spec.intrinsics is not None
        spec.validate(spec.intrinsics)


def test_scene_file_errors(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("rect 5 0 0 10\n")
    with pytest.raises(FormatError, match=":1:"):
        load_scene(p)
    p.write_text("colour red\n")
    with pytest.raises(FormatError, match="unknown key"):
        load_scene(p)
    p.write_text("focal 500\nheight 10\nwidth 10\nbaseline 0.5\nrect 5 0 0 20 5\n")
    with pytest.raises(FormatError):
        load_scene(p)
