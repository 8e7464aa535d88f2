"""Write a small demo workspace for trying every command-line subcommand.

Creates, under the output directory:

* ``sensors/``: map, pose, camera, ground cloud (CSV), pole cloud (PLY) and a mask (PNG)
* ``data.json``: simulated three-source dataset whose images point at random PPM rasters
* ``detections.json``: jittered detections around the reference poles
"""

import argparse
import json
import math
import random
from pathlib import Path

import numpy as np

from annofuse.detections import dumps_detections
from annofuse.evaluation import Detection, box_from_point
from annofuse.geometry import CameraModel, Pose
from annofuse.model import Dataset, ImageRecord, save_dataset
from annofuse.raster import write_raster
from annofuse.sensor_io import save_camera, save_cloud_csv, save_cloud_ply, save_pose
from annofuse.annotators import LabeledCloud
from annofuse.simulate import SceneConfig, simulate_dataset
from annofuse.config import DEFAULT_PROFILES


def sensors(root: Path) -> None:
    root.mkdir(parents=True, exist_ok=True)
    cam = CameraModel(400.0, 400.0, 640.0, 360.0, 1280, 720)
    pose = Pose.level((0.0, 0.0, 1.5), yaw=0.0)
    poles = [(0.0, 4.0), (2.0, 9.0), (-4.0, 12.0)]
    xs, ys = np.meshgrid(np.arange(-10, 10.01, 0.25), np.arange(0, 25.01, 0.25))
    ground = np.column_stack((xs.ravel(), ys.ravel(), np.zeros(xs.size)))
    column = [(e + dx, n + dy, 3.0 * k / 24) for e, n in poles for k in range(25)
              for dx, dy in ((-0.1, -0.1), (0.1, -0.1), (0.1, 0.1), (-0.1, 0.1))]
    (root / "map.json").write_text(json.dumps([list(p) for p in poles]) + "\n")
    save_pose(pose, root / "pose.json")
    save_camera(cam, root / "camera.json")
    save_cloud_csv(LabeledCloud(ground, ["ground"] * len(ground)), root / "ground.csv")
    save_cloud_ply(LabeledCloud(np.array(column), ["pole"] * len(column)), root / "poles.ply")
    mask = np.full((720, 1280), 2, dtype=np.uint8)
    mask[500:, :] = 0
    for u in (300, 700, 1000):
        mask[200:500, u - 5:u + 5] = 5
    write_raster(root / "mask.png", mask)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", help="output directory")
    parser.add_argument("--images", type=int, default=10, help="simulated images (default: 10)")
    parser.add_argument("--seed", type=int, default=0, help="seed (default: 0)")
    args = parser.parse_args()
    root = Path(args.out)
    sensors(root / "sensors")
    ds = simulate_dataset(SceneConfig(n_images=args.images, seed=args.seed), DEFAULT_PROFILES)
    rng = np.random.default_rng(args.seed)
    images = []
    for img in ds.images:
        name = f"{img.id}.ppm"
        write_raster(root / name, rng.integers(0, 256, (img.height, img.width, 3), dtype=np.uint8))
        images.append(ImageRecord(img.id, img.width, img.height, name, img.annotations, img.reference))
    ds = Dataset(ds.sources, tuple(images), ds.metadata)
    save_dataset(ds, root / "data.json")
    jitter = random.Random(args.seed)
    dets = []
    for img in ds.images:
        for r in img.reference:
            u = min(max(r.u + jitter.gauss(0, 30), 0.0), math.nextafter(img.width, 0))
            dets.append(Detection(img.id, box_from_point((u, r.v), 250, img.width, img.height),
                                  round(jitter.random(), 4)))
    (root / "detections.json").write_text(dumps_detections(dets))
    print(f"wrote demo workspace to {root}")


if __name__ == "__main__":
    main()
