#!/usr/bin/env python3
# Copyright Contributors to the ogs Project
# SPDX-License-Identifier: Apache-2.0
"""Convert a COLMAP text model (cameras.txt + images.txt) to an ogs camera file.

Only undistorted models are accepted: SIMPLE_PINHOLE and PINHOLE.
"""

import argparse
import sys
from pathlib import Path


def read_records(path):
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                yield line.split()


def read_intrinsics(path):
    cams = {}
    for rec in read_records(path):
        cam_id, model, w, h = rec[0], rec[1], int(rec[2]), int(rec[3])
        p = [float(v) for v in rec[4:]]
        if model == "SIMPLE_PINHOLE":
            fx = fy = p[0]
            cx, cy = p[1], p[2]
        elif model == "PINHOLE":
            fx, fy, cx, cy = p[:4]
        else:
            raise ValueError(f"camera {cam_id}: model {model} has distortion; undistort first")
        cams[cam_id] = (w, h, fx, fy, cx, cy)
    return cams


def quat_to_matrix(w, x, y, z):
    n = (w * w + x * x + y * y + z * z) ** 0.5
    w, x, y, z = w / n, x / n, y / n, z / n
    return [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]


def convert(model_dir, out):
    intr = read_intrinsics(model_dir / "cameras.txt")
    out.write("# id width height model fx fy cx cy r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz\n")
    # images.txt alternates pose lines and 2D point lines; the latter may be empty.
    with open(model_dir / "images.txt", encoding="utf-8") as f:
        lines = [l.rstrip("\n") for l in f if not l.startswith("#")]
    for pose in lines[0::2]:
        rec = pose.split()
        if not rec:
            continue
        qw, qx, qy, qz, tx, ty, tz = (float(v) for v in rec[1:8])
        w, h, fx, fy, cx, cy = intr[rec[8]]
        name = Path(rec[9]).stem
        r = quat_to_matrix(qw, qx, qy, qz)
        vals = [fx, fy, cx, cy] + [v for row in r for v in row] + [tx, ty, tz]
        out.write(f"{name} {w} {h} pinhole " + " ".join(repr(v) for v in vals) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("model_dir", type=Path, help="directory with cameras.txt and images.txt")
    ap.add_argument("-o", "--out", type=Path, help="output camera file (default: stdout)")
    args = ap.parse_args()
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8") as f:
                convert(args.model_dir, f)
        else:
            convert(args.model_dir, sys.stdout)
    except (OSError, ValueError, KeyError, IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
