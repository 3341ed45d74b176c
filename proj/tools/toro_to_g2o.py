#!/usr/bin/env python3
"""Convert a TORO 3D graph (EDGE3 / VERTEX3 records) to g2o SE3:QUAT records.

TORO stores x y z roll pitch yaw with R = Rz(yaw) Ry(pitch) Rx(roll) and the
21 upper-triangular information entries in the same (translation, rotation)
order that EDGE_SE3:QUAT uses, so the information block is copied verbatim.

    python3 tools/toro_to_g2o.py sphere2500.toro tests/data/sphere2500.g2o
"""

import argparse
import sys

from scipy.spatial.transform import Rotation


def pose_fields(values):
    x, y, z, roll, pitch, yaw = (float(v) for v in values)
    qx, qy, qz, qw = Rotation.from_euler("ZYX", [yaw, pitch, roll]).as_quat()
    return [x, y, z, qx, qy, qz, qw]


def fmt(values):
    return " ".join(repr(float(v)) if isinstance(v, float) else str(v) for v in values)


def convert(lines):
    out = []
    for lineno, line in enumerate(lines, 1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] == "VERTEX3":
            if len(tok) != 8:
                raise ValueError(f"line {lineno}: VERTEX3 needs 7 fields")
            out.append(f"VERTEX_SE3:QUAT {tok[1]} {fmt(pose_fields(tok[2:8]))}")
        elif tok[0] == "EDGE3":
            if len(tok) != 30:
                raise ValueError(f"line {lineno}: EDGE3 needs 29 fields")
            info = [float(v) for v in tok[9:30]]
            out.append(f"EDGE_SE3:QUAT {tok[1]} {tok[2]} {fmt(pose_fields(tok[3:9]))} {fmt(info)}")
        else:
            raise ValueError(f"line {lineno}: unknown record {tok[0]}")
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input")
    ap.add_argument("output")
    args = ap.parse_args()
    with open(args.input) as f:
        records = convert(f)
    with open(args.output, "w") as f:
        f.write("\n".join(records) + "\n")
    print(f"wrote {len(records)} records to {args.output}", file=sys.stderr)


if __name__ == "__main__":
    main()
