"""
Ground-colour obstacle mask
===========================

Anything whose hue or brightness is rare in the strip of floor right in
front of the robot is flagged as an obstacle.
"""

import numpy as np

from navperception.media_io import CameraRig
from navperception.obstacle import RegionSpec, build_reference_histograms, detect_obstacles, rgb_to_hsv
from navperception.synth import Obstacle, SceneSpec, render_stereo_scene

rig = CameraRig(focal_px=300.0, baseline_mm=40.85)

# a green floor with one magenta box and one blue box on it; a red box
# would be missed, since smoothing spills the floor's hue count into the
# neighbouring red bin
spec = SceneSpec(rig, floor_color=(50, 110, 60), obstacles=(
    Obstacle((200, 40, 180), 60, 40, 50, 70, 1200.0),
    Obstacle((40, 50, 190), 100, 200, 60, 50, 900.0),
))
scene = render_stereo_scene(spec)

# the reference histograms come from the bottom rows of the frame
hist = build_reference_histograms(rgb_to_hsv(scene.left), RegionSpec())
print("hue histogram  ", np.round(hist.hue_bins, 1), "threshold", round(hist.hue_threshold, 2))
print("value histogram", np.round(hist.val_bins, 1), "threshold", round(hist.val_threshold, 2))

mask = detect_obstacles(scene.left)
truth = scene.obstacle_mask
print("flagged pixels:", int(mask.sum()), "true obstacle pixels:", int(truth.sum()))
print("agreement: %.4f" % (mask == truth).mean())

# a coarse ASCII view, one character per 10x10 block
for row in mask[::10]:
    print("".join("#" if v else "." for v in row[::10]))
