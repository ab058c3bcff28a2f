import numpy as np

from isac_nd.geometry import BeamSpec, NodeLayout


def layout_of(*points, side=2.0) -> NodeLayout:
    return NodeLayout(np.array(points, dtype=float), side)


def omni() -> BeamSpec:
    return BeamSpec(2 * np.pi)
