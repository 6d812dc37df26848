#!/usr/bin/env python3
"""Regenerates the scenario configs under configs/.

Camera extrinsics follow CameraModel::look_at (x right, y down, z forward,
world +z up), written out explicitly so the JSON files are self-contained.
"""
import json
import math
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent / "configs"


def look_at(cam_id, position, target, focal, width, height):
    position = np.asarray(position, dtype=float)
    forward = np.asarray(target, dtype=float) - position
    forward /= np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    if abs(forward @ up) > 0.999:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    rot = np.stack([right, down, forward])
    t = -rot @ position
    return {
        "id": cam_id,
        "K": [focal, focal, width / 2, height / 2],
        "R": [float(v) for v in rot.reshape(-1)],
        "t": [float(v) for v in t],
        "width": width,
        "height": height,
    }


def person(identity, waypoints, dims=(0.6, 0.6, 1.7), yaw=0.0, category="person"):
    return {
        "identity": identity,
        "category": category,
        "dims": list(dims),
        "yaw": yaw,
        "waypoints": [[float(t), float(x), float(y), float(z)] for t, x, y, z in waypoints],
    }


def two_rooms():
    # Two 8 m x 6 m rooms separated by a wall at x = 9; two cameras per room.
    cams = [
        look_at(1, (0.2, 0.2, 3.0), (4.0, 3.0, 0.8), 220.0, 320, 192),
        look_at(2, (7.8, 5.8, 3.0), (4.0, 3.0, 0.8), 220.0, 320, 192),
        look_at(3, (10.2, 0.2, 3.0), (14.0, 3.0, 0.8), 220.0, 320, 192),
        look_at(4, (17.8, 5.8, 3.0), (14.0, 3.0, 0.8), 220.0, 320, 192),
    ]
    wall = {"x": 9.0, "y": 3.0, "z": 1.25, "w": 6.0, "l": 0.2, "h": 2.5, "yaw": 0.0}
    z = 0.85
    objects = [
        person(1, [(0.0, 2.0, 1.5, z), (4.0, 6.0, 1.5, z), (8.0, 6.0, 4.5, z), (10.0, 4.0, 4.5, z)]),
        person(2, [(0.0, 5.0, 4.8, z), (5.0, 1.5, 4.0, z), (10.0, 2.0, 2.5, z)]),
        person(3, [(0.0, 11.5, 2.0, z), (5.0, 16.0, 2.0, z), (10.0, 16.0, 4.5, z)]),
        person(4, [(0.0, 16.5, 5.0, z), (6.0, 12.0, 4.0, z), (10.0, 11.0, 1.5, z)]),
    ]
    scene = {
        "seed": 7,
        "frame_rate": 10.0,
        "duration": 10.0,
        "embedding_dim": 32,
        "strides": [8.0, 16.0],
        "visibility_grid": 32,
        "background_sigma": 0.01,
        "write_pyramids": False,
        "noise": {"sigma_center": 0.0, "sigma_dims": 0.0, "sigma_yaw": 0.0, "p_dropout": 0.0,
                  "sigma_embedding": 0.0},
        "cameras": cams,
        "occluders": [wall],
        "objects": objects,
    }
    return {"schema_version": 1, "scene": scene, "embedding_source": "oae",
            "tracker": {"schema_version": 1, "gate_radius": 2.0, "alpha_emb": 1.0, "alpha_geo": 1.0,
                        "memory_momentum": 0.9, "birth_conf": 0.3, "death_age": 5, "velocity_blend": 0.5}}


def bouncing_pair(first_id, meet_x, y_a, y_b, phase, duration, speed=2.0, amplitude=2.0):
    """Two objects on parallel lanes that meet head-on at meet_x and turn back.

    Meetings fall between frames, so constant-velocity prediction carries each
    object past the other and only appearance tells the turn from a crossing.
    """
    half = amplitude / speed
    z = 0.5
    a, b = [], []
    t = -phase
    toward = True
    while t <= duration + 2 * half:
        xa = meet_x if not toward else meet_x - amplitude
        xb = meet_x if not toward else meet_x + amplitude
        a.append((t, xa, y_a, z))
        b.append((t, xb, y_b, z))
        t += half
        toward = not toward
    dims = (0.35, 0.5, 1.0)
    return [person(first_id, a, dims, category="robot"), person(first_id + 1, b, dims, category="robot")]


def occlusion_cross():
    duration = 10.0
    cams = [
        look_at(1, (6.0, -3.0, 4.0), (6.0, 4.0, 0.5), 240.0, 320, 240),
        look_at(2, (13.0, 4.0, 4.0), (6.0, 4.0, 0.5), 240.0, 320, 240),
        look_at(3, (6.0, 11.0, 4.0), (6.0, 4.0, 0.5), 240.0, 320, 240),
    ]
    pillars = [
        {"x": 4.0, "y": 4.0, "z": 1.25, "w": 0.5, "l": 0.5, "h": 2.5, "yaw": 0.0},
        {"x": 8.0, "y": 4.0, "z": 1.25, "w": 0.5, "l": 0.5, "h": 2.5, "yaw": 0.7},
    ]
    objects = (bouncing_pair(1, 4.0, 2.0, 2.4, 0.875, duration)
               + bouncing_pair(3, 8.0, 5.8, 6.2, 0.375, duration))
    # Clip waypoint lists to start at or before 0 and end after the sequence.
    for o in objects:
        wps = o["waypoints"]
        while len(wps) > 2 and wps[1][0] <= 0.0:
            wps.pop(0)
        # start exactly at 0 by interpolating the first segment
        (t0, *p0), (t1, *p1) = wps[0], wps[1]
        if t0 < 0.0:
            s = (0.0 - t0) / (t1 - t0)
            wps[0] = [0.0] + [u + s * (v - u) for u, v in zip(p0, p1)]
    scene = {
        "seed": 7,
        "frame_rate": 4.0,
        "duration": duration,
        "embedding_dim": 32,
        "strides": [8.0, 16.0],
        "visibility_grid": 32,
        "background_sigma": 0.01,
        "write_pyramids": False,
        "noise": {"sigma_center": 0.05, "sigma_dims": 0.02, "sigma_yaw": 0.02, "p_dropout": 0.0,
                  "sigma_embedding": 0.1},
        "cameras": cams,
        "occluders": pillars,
        "objects": objects,
    }
    return {"schema_version": 1, "scene": scene, "embedding_source": "oae",
            "tracker": {"schema_version": 1, "gate_radius": 2.0, "alpha_emb": 1.0, "alpha_geo": 1.0,
                        "memory_momentum": 0.9, "birth_conf": 0.3, "death_age": 5, "velocity_blend": 0.5}}


def bench_default():
    return {"schema_version": 1, "cameras": 6, "levels": 4, "channels": 256, "queries": 900,
            "points_per_query": 13, "repetitions": 3, "base_height": 32, "base_width": 88, "fps": 30.0,
            "seed": 42}


def main():
    ROOT.mkdir(exist_ok=True)
    outputs = {
        "two_rooms.json": two_rooms(),
        "occlusion_cross.json": occlusion_cross(),
        "bench_default.json": bench_default(),
        "tracker_default.json": two_rooms()["tracker"],
    }
    for name, doc in outputs.items():
        (ROOT / name).write_text(json.dumps(doc, indent=2) + "\n")
        print("wrote", ROOT / name)


if __name__ == "__main__":
    main()
