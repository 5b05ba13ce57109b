"""Obstacle detection, stereo ranging and isolated-word command recognition
for a vision-guided wheelchair or small robot."""

__version__ = "0.1.0"
