#!/usr/bin/env python3
"""Writes the network JSON files used by configs/."""

import json
import math
import pathlib
import sys

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent.parent / "configs" / "geometry")


def circle(n, r, cx=0.0, cy=0.0):
    pts = [[cx + r * math.cos(2 * math.pi * i / n), cy + r * math.sin(2 * math.pi * i / n)] for i in range(n)]
    return {"vertices": pts, "multiplicity": 1, "start": "free", "end": "free", "closed": True}


def segment(a, b, edges, start="free", end="free", mult=1):
    pts = [[a[0] + (b[0] - a[0]) * i / edges, a[1] + (b[1] - a[1]) * i / edges] for i in range(edges + 1)]
    return {"vertices": pts, "multiplicity": mult, "start": start, "end": end}


def deg(d):
    return [math.cos(math.radians(d)), math.sin(math.radians(d))]


def network(curves, boundary=(), junctions=()):
    return {"curves": list(curves), "boundary_points": list(boundary), "junctions": list(junctions)}


def triple(a, b, c, p):
    curves, bps = [], []
    for pt, name in zip((a, b, c), "ABC"):
        curves.append(segment(p, pt, 4, {"junction": "P"}, {"fixed": name}))
        bps.append({"id": name, "point": pt})
    return network(curves, bps, [{"id": "P", "point": p}])


def half_line(p, far, edges):
    return network([segment(p, far, edges, {"fixed": "G"}, {"fixed": "F"})],
                   [{"id": "G", "point": p}, {"id": "F", "point": far}])


def bumped_half_line():
    pts = [[3.0 * i / 300, 0.3 * math.sin(math.pi * i / 300)] for i in range(301)]
    k = {"vertices": pts, "multiplicity": 1, "start": {"fixed": "G"}, "end": {"fixed": "F"}}
    return network([k], [{"id": "G", "point": [0.0, 0.0]}, {"id": "F", "point": [3.0, 0.0]}])


def dragged(p0, p1, far, edges):
    k = segment(p0, far, edges, {"moving": "G"}, {"fixed": "F"})
    return network([k], [{"id": "G", "trajectory": [[0.0, *p0], [1.0, *p1]]}, {"id": "F", "point": far}])


def two_rays():
    return network([segment([0.0, 0.0], [1.0, 0.0], 100), segment([0.0, 0.0], deg(60), 100)])


FILES = {
    "circle_r1.json": network([circle(628, 1.0)]),
    "circle_r2.json": network([circle(1257, 2.0)]),
    "triple_acute.json": triple(deg(90), deg(210), deg(330), [0.3, 0.2]),
    "triple_obtuse.json": triple(deg(150), deg(180), deg(210), [-0.7, 0.0]),
    "line.json": network([segment([-2.0, 0.0], [2.0, 0.0], 2000)]),
    "half_line.json": half_line([0.0, 0.0], [2.0, 0.0], 1000),
    "bumped_half_line.json": bumped_half_line(),
    "dragged_endpoint.json": dragged([0.5, 0.0], [0.0, 0.0], [3.0, 0.0], 250),
    "dragged_segment.json": dragged([0.0, 0.0], [-1.0, 0.0], [2.0, 0.0], 40),
    "wedge_line.json": network([segment([-1.0, 0.0], [1.0, 0.0], 200)]),
    "wedge_half_line.json": half_line([0.0, 0.0], [1.0, 0.0], 100),
    "wedge_two_rays.json": two_rays(),
}

OUT.mkdir(parents=True, exist_ok=True)
for name, net in FILES.items():
    (OUT / name).write_text(json.dumps(net) + "\n")
