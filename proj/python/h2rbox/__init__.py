"""Rotated boxes from horizontal-box supervision."""

import json

from ._h2rbox import (
    HBox,
    InputError,
    RBox,
    angle_normalize,
    check_iou,
    circumscribed_dims,
    circumscribed_hbox,
    hbox_iou,
    iou_reg_loss,
    l_wh_theta,
    l_xy,
    monte_carlo_iou,
    rbox_iou,
    rotate_rbox,
    solve_wh_given_theta,
    ss_reg_loss,
    symmetric_rbox,
)
from . import _h2rbox

__all__ = [
    "HBox",
    "InputError",
    "RBox",
    "ablate",
    "angle_normalize",
    "check_iou",
    "circumscribed_dims",
    "circumscribed_hbox",
    "enumerate_feasible",
    "evaluate",
    "generate_scene",
    "hbox_iou",
    "iou_reg_loss",
    "l_wh_theta",
    "l_xy",
    "monte_carlo_iou",
    "rbox_iou",
    "rotate_rbox",
    "run_recovery",
    "solve_wh_given_theta",
    "ss_reg_loss",
    "symmetric_rbox",
]


def enumerate_feasible(view1, view2, delta_theta, constraints="hcrc+sc+ac"):
    """Feasible (w, h, theta) for observed HBox sizes; angles in radians."""
    return json.loads(_h2rbox._enumerate_feasible(tuple(view1), tuple(view2), delta_theta, constraints))


def generate_scene(count=200, side=1000.0, seed=0, circular_fraction=0.0, placement="disc"):
    return json.loads(_h2rbox._generate_scene(count, side, seed, circular_fraction, placement))


def run_recovery(scene, **config):
    """Scene dict as from generate_scene; config keys mirror RecoveryConfig."""
    return json.loads(_h2rbox._run_recovery(json.dumps(scene), json.dumps(config)))


def evaluate(scene, detections, s2=False):
    return json.loads(_h2rbox._evaluate(json.dumps(scene), json.dumps(detections), s2))


def ablate(scene, **config):
    """Returns (fixed-width table, csv)."""
    return _h2rbox._ablate(json.dumps(scene), json.dumps(config))
