"""
Obstacle avoidance decisions
============================

An obstacle approaches the robot; the controller goes straight, then
turns away from the obstructed side, then stops.
"""

from navperception.media_io import CameraRig
from navperception.nav_policy import command_code, decide
from navperception.obstacle import detect_obstacles
from navperception.stereo import compute_disparity, nearest_obstacle_distance, rgb_to_gray
from navperception.synth import Obstacle, SceneSpec, render_stereo_scene

rig = CameraRig(focal_px=300.0, baseline_mm=40.85)
ft = rig.focal_px * rig.baseline_mm

# a tall box that sits a little right of centre
for d in (8, 12, 16, 18, 19, 21, 23):
    box = Obstacle((200, 40, 40), 80, 150, 100, 130, ft / d)
    scene = render_stereo_scene(SceneSpec(rig, obstacles=(box,), seed=d))
    mask = detect_obstacles(scene.left)
    disp = compute_disparity(rgb_to_gray(scene.left), rgb_to_gray(scene.right), mask)
    decision = decide(nearest_obstacle_distance(disp, rig), mask)
    left, right = decision.side_means
    print(f"D={decision.distance_mm:7.1f} mm  sides L={left:6.1f} R={right:6.1f}  "
          f"{decision.action!s:<10} code={command_code(decision.action)}")
