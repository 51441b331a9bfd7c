import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from charfol.svg import MARGIN, SIZE, Canvas, _split_periodic, portrait

NS = "{http://www.w3.org/2000/svg}"


def test_canvas_maps_corners_with_y_up():
    cv = Canvas(((-1.0, 1.0), (-1.0, 1.0)))
    px, py = cv.xy([[-1.0, -1.0], [1.0, 1.0]])
    assert px.tolist() == [MARGIN, SIZE - MARGIN]
    assert py.tolist() == [SIZE - MARGIN, MARGIN]


def test_split_periodic_breaks_at_wrap():
    pts = np.array([[0.3, 0.0], [0.45, 0.0], [-0.45, 0.0], [-0.3, 0.0]])
    pieces = _split_periodic(pts, ((-0.5, 0.5), (-0.5, 0.5)), (True, False))
    assert [len(p) for p in pieces] == [2, 2]


def test_split_non_periodic_is_noop():
    pts = np.array([[0.3, 0.0], [-0.45, 0.0]])
    assert len(_split_periodic(pts, ((-0.5, 0.5),) * 2, (False, False))) == 1


def test_portrait_is_valid_svg():
    leaf = np.column_stack([np.linspace(-1, 1, 20), np.zeros(20)])
    crit = [((0.0, 0.0), "sink"), ((0.5, 0.5), "source"), ((-0.5, 0.5), "saddle"),
            ((0.2, -0.3), "rank_one", (0.0, 1.0))]
    svg = portrait(((-1, 1), (-1, 1)), leaves=[leaf], critical_points=crit, curves=[leaf], orbits=[leaf],
                   title="a < b & c")
    root = ET.fromstring(svg)
    assert root.tag == NS + "svg"
    assert root.get("width") == str(SIZE)
    classes = [el.get("class") for el in root.iter()]
    for c in ("leaf", "orbit", "critical_curve", "sink", "source", "saddle", "rank_one"):
        assert c in classes
    assert "a &lt; b &amp; c" in svg


def test_portrait_deterministic():
    leaf = np.column_stack([np.linspace(0, 1, 5), np.linspace(0, 1, 5) ** 2])
    a = portrait(((0, 1), (0, 1)), leaves=[leaf])
    b = portrait(((0, 1), (0, 1)), leaves=[leaf.copy()])
    assert a == b


def test_non_finite_points_dropped():
    leaf = np.array([[0.0, 0.0], [np.nan, 0.1], [0.5, 0.5]])
    svg = portrait(((0, 1), (0, 1)), leaves=[leaf])
    pts = re.search(r'points="([^"]+)"', svg).group(1).split()
    assert len(pts) == 2
