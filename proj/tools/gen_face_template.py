#!/usr/bin/env python3
"""Writes data/canonical_face_v1.txt, the neutral-face template shipped with the engine.

The layout follows the 468+10 facemesh indexing for the handful of landmarks the
engine reads (eye corners, lids, iris centers, nose, chin, temples, mouth, brows).
The remaining points are spread over a frontal ellipsoid so every index exists.
Coordinates are in normalized image space (x right, y down, z depth).
"""
import math
import sys

COUNT = 478


def to_image(u, v, w):
    return (0.5 + 0.15 * u, 0.5 + 0.15 * v, 0.15 * w)


def main(path):
    pts = [None] * COUNT
    groups = {}

    def put(idx, u, v, w):
        assert pts[idx] is None, idx
        pts[idx] = to_image(u, v, w)

    # eyes: (outer, inner, upper, lower, iris, iris ring) per side, mirrored in u
    for side, sgn, ids in (("right", -1, (33, 133, 159, 145, 468, (469, 470, 471, 472))),
                           ("left", 1, (263, 362, 386, 374, 473, (474, 475, 476, 477)))):
        outer, inner, upper, lower, iris, ring = ids
        put(outer, sgn * 0.62, -0.25, 0.10)
        put(inner, sgn * 0.22, -0.25, 0.05)
        put(upper, sgn * 0.42, -0.33, 0.02)
        put(lower, sgn * 0.42, -0.18, 0.04)
        put(iris, sgn * 0.42, -0.25, 0.075)
        for k, (du, dv) in enumerate(((0.07, 0.0), (0.0, -0.07), (-0.07, 0.0), (0.0, 0.07))):
            put(ring[k], sgn * 0.42 + du, -0.25 + dv, 0.075)
        groups["iris_" + side] = [iris, *ring]
        groups["upper_lid_" + side] = [upper]

    put(1, 0.0, 0.15, -0.45)      # nose tip
    put(6, 0.0, -0.25, -0.15)     # nose bridge
    put(152, 0.0, 0.95, -0.05)    # chin
    put(10, 0.0, -0.90, -0.05)    # forehead
    put(127, -0.95, -0.20, 0.45)  # temples
    put(356, 0.95, -0.20, 0.45)
    put(61, -0.35, 0.55, -0.10)   # mouth corners
    put(291, 0.35, 0.55, -0.10)
    put(13, 0.0, 0.50, -0.20)     # lips
    put(14, 0.0, 0.62, -0.20)
    brow_r = (70, 63, 105, 66, 107)
    brow_l = (300, 293, 334, 296, 336)
    for k in range(5):
        u = 0.75 - 0.1375 * k
        v = -0.50 - 0.04 * math.sin(math.pi * k / 4.0)
        put(brow_r[k], -u, v, 0.0)
        put(brow_l[k], u, v, 0.0)
    groups["brow_right"] = list(brow_r)
    groups["brow_left"] = list(brow_l)
    groups["mouth_corner_right"] = [61]
    groups["mouth_corner_left"] = [291]
    groups["upper_lip"] = [13]
    groups["lower_lip"] = [14]
    groups["jaw"] = [152]

    # fill the rest on a frontal ellipsoid (golden-angle spiral over the face disk)
    free = [i for i in range(COUNT) if pts[i] is None]
    golden = math.pi * (3.0 - math.sqrt(5.0))
    for k, idx in enumerate(free):
        r = math.sqrt((k + 0.5) / len(free))
        a = k * golden
        u = 0.92 * r * math.cos(a)
        v = 1.0 * r * math.sin(a)
        w = 0.45 - 0.45 * math.sqrt(max(0.0, 1.0 - r * r))
        pts[idx] = to_image(u, v, w)

    with open(path, "w") as f:
        f.write("FPFT 1\n")
        f.write(f"landmark_count {COUNT}\n")
        f.write("anchors 1 6 10 33 263 127 152 356\n")
        f.write("eye right outer=33 inner=133 upper=159 lower=145 iris=468\n")
        f.write("eye left outer=263 inner=362 upper=386 lower=374 iris=473\n")
        for name in sorted(groups):
            f.write("group " + name + " " + " ".join(str(i) for i in groups[name]) + "\n")
        f.write("points\n")
        for x, y, z in pts:
            f.write(f"{x:.6f} {y:.6f} {z:.6f}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/canonical_face_v1.txt")
