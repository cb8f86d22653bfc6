import math

import pytest

import h2rbox


def test_rbox_iou_matches_polygon_value():
    a = h2rbox.RBox(0, 0, 2, 2, 0)
    b = h2rbox.RBox(0, 0, 2, 2, math.pi / 4)
    assert h2rbox.rbox_iou(a, b) == pytest.approx(0.7071067811865476, abs=1e-12)
    assert h2rbox.monte_carlo_iou(a, b, 200_000, 1) == pytest.approx(0.7071, abs=5e-3)


def test_geometry_helpers():
    hb = h2rbox.circumscribed_hbox(h2rbox.RBox(0, 0, 4, 2, math.radians(30)))
    assert hb.w == pytest.approx(4.464101615137754)
    assert hb.h == pytest.approx(3.732050807568877)
    sym = h2rbox.symmetric_rbox(h2rbox.RBox(0, 0, 4, 2, math.radians(30)))
    assert sym.theta == pytest.approx(math.radians(-30))
    rotated = h2rbox.rotate_rbox(h2rbox.RBox(1, 0, 4, 2, 0), math.pi / 2)
    assert (rotated.cx, rotated.cy) == pytest.approx((0, 1), abs=1e-12)


def test_constraints():
    w, h = h2rbox.circumscribed_dims(4, 2, math.radians(30))
    assert h2rbox.solve_wh_given_theta(w, h, math.radians(30)) == pytest.approx((4, 2))
    assert h2rbox.solve_wh_given_theta(4, 2, math.pi / 4) is None
    w2, h2 = h2rbox.circumscribed_dims(4, 2, math.radians(55))
    out = h2rbox.enumerate_feasible((w, h), (w2, h2), math.radians(25))
    assert out["classification"] == "UNIQUE"
    out = h2rbox.enumerate_feasible((w, h), (w2, h2), math.radians(25), "hcrc+sc")
    assert out["classification"] == "TWO_FOLD"
    with pytest.raises(ValueError):
        h2rbox.enumerate_feasible((w, h), (w2, h2), 0.4, "nope")


def test_losses():
    t = h2rbox.RBox(0, 0, 4, 2, math.radians(30))
    p = h2rbox.RBox(0, 0, 4, 2, math.radians(10))
    assert h2rbox.l_wh_theta(t, p) == pytest.approx(0.3420201433256687)
    assert h2rbox.iou_reg_loss(h2rbox.HBox(0, 0, 2, 2), h2rbox.HBox(1, 0, 2, 2)) == pytest.approx(
        math.log(3)
    )


def test_recovery_and_evaluation():
    scene = h2rbox.generate_scene(count=20, side=500, seed=3)
    report = h2rbox.run_recovery(scene, steps=400, seed=1)
    assert report["summary"]["fraction_below_3deg"] >= 0.9
    assert len(report["objects"]) == 20
    again = h2rbox.run_recovery(scene, steps=400, seed=1)
    assert again == report
    dets = [
        {"id": o["id"], "class_id": o["class_id"], "score": 1.0, "rbox": o["pred"]}
        for o in report["objects"]
    ]
    result = h2rbox.evaluate(scene, dets)
    assert 0.0 <= result["ap"] <= 1.0
    table, csv = h2rbox.ablate(scene, steps=200)
    assert "o2o" in table.lower()
    assert csv.count("\n") >= 2


def test_unknown_config_key_is_rejected():
    scene = h2rbox.generate_scene(count=2, side=300)
    with pytest.raises(ValueError):
        h2rbox.run_recovery(scene, stepz=10)
    with pytest.raises(h2rbox.InputError):
        h2rbox.run_recovery(scene, steps=0)


def test_iou_self_check():
    assert h2rbox.check_iou(pairs=5, samples=50_000)
