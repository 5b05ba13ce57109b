"""
Depth from a stereo pair
========================

Block matching with normalised cross-correlation over the obstacle pixels,
then Z = f T / d for the largest disparity with enough support.
"""

import time

import numpy as np

from navperception.media_io import CameraRig
from navperception.obstacle import detect_obstacles
from navperception.stereo import compute_disparity, nearest_obstacle_distance, rgb_to_gray
from navperception.synth import Obstacle, SceneSpec, render_stereo_scene

rig = CameraRig(focal_px=300.0, baseline_mm=40.85)
ft = rig.focal_px * rig.baseline_mm

for d in (5, 10, 15, 20, 25):
    scene = render_stereo_scene(SceneSpec(rig, obstacles=(
        Obstacle((200, 40, 40), 110, 130, 66, 61, ft / d),)))
    t0 = time.perf_counter()
    mask = detect_obstacles(scene.left)
    disp = compute_disparity(rgb_to_gray(scene.left), rgb_to_gray(scene.right), mask)
    z = nearest_obstacle_distance(disp, rig)
    dt = time.perf_counter() - t0
    values, counts = np.unique(disp[disp > 0], return_counts=True)
    print(f"true d={d:2d} Z={ft / d:7.2f} mm  found {dict(zip(values.tolist(), counts.tolist()))}"
          f"  Z={z:7.2f} mm  ({dt:.2f} s)")

# one pixel of disparity is worth a lot of depth far away
for d in (5, 6, 24, 25):
    print(f"d={d:2d} -> {ft / d:7.1f} mm")
