#!/usr/bin/env python3
"""Write assets/manifest.json: per-mesh vertex and triangle counts, surface
area, and the wrench jaw-flat centroid. Parses OFF files on its own so the
numbers do not come from the C++ loader."""

import argparse
import json
import pathlib

import numpy as np


def read_off(path):
    lines = []
    for raw in path.read_text().splitlines():
        raw = raw.split("#", 1)[0].strip()
        if raw:
            lines.append(raw)
    if not lines[0].startswith("OFF"):
        raise ValueError(f"{path}: missing OFF header")
    head = lines[0].split()[1:]
    pos = 1
    if not head:
        head = lines[1].split()
        pos = 2
    nv, nf = int(head[0]), int(head[1])
    verts = np.array([[float(x) for x in lines[pos + i].split()[:3]] for i in range(nv)])
    tris = []
    for i in range(nf):
        idx = [int(x) for x in lines[pos + nv + i].split()]
        n = idx[0]
        poly = idx[1 : n + 1]
        for k in range(1, n - 1):
            tris.append((poly[0], poly[k], poly[k + 1]))
    return verts, np.array(tris, dtype=int)


def triangle_data(verts, tris):
    a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    cross = np.cross(b - a, c - a)
    norm = np.linalg.norm(cross, axis=1)
    return 0.5 * norm, cross / norm[:, None], (a + b + c) / 3.0


def jaw_flat_centroid(verts, tris, x_plane, tol=1e-9):
    """Area-weighted centroid of the triangles on the plane x = x_plane whose
    normal is +x (the left jaw flat, facing into the mouth)."""
    area, normal, centre = triangle_data(verts, tris)
    on = (np.abs(verts[tris][:, :, 0] - x_plane).max(axis=1) < tol) & (normal[:, 0] > 1 - 1e-9)
    if not on.any():
        raise ValueError("no jaw-flat triangles found")
    w = area[on]
    return (centre[on] * w[:, None]).sum(axis=0) / w.sum(), float(w.sum())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--assets", default=str(pathlib.Path(__file__).resolve().parent.parent / "assets"))
    args = ap.parse_args()
    root = pathlib.Path(args.assets)
    meshes = {}
    for path in sorted(root.glob("*.off")):
        verts, tris = read_off(path)
        area, _, _ = triangle_data(verts, tris)
        meshes[path.stem] = {
            "vertices": int(len(verts)),
            "triangles": int(len(tris)),
            "surface_area_m2": float(area.sum()),
        }
    out = {"schema": "multiscope.assets/1", "meshes": meshes}
    if "wrench" in meshes:
        verts, tris = read_off(root / "wrench.off")
        c, a = jaw_flat_centroid(verts, tris, -0.00635)
        out["wrench_jaw_flat"] = {"centroid_m": [float(x) for x in c], "area_m2": a}
    (root / "manifest.json").write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {root / 'manifest.json'} ({len(meshes)} meshes)")


if __name__ == "__main__":
    main()
