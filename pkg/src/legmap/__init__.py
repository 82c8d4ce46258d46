"""Contact-aided LiDAR-inertial-kinematic odometry and robot-centric elevation
mapping for legged robots, with foothold rewards, a synthetic sensor
simulator, and trajectory/map evaluation tools."""

__version__ = "0.1.0"
