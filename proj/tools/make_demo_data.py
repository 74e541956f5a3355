# Copyright 2026 The drivecue Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the bundled five-scene demo dataset under data/demo/."""

import csv
import json
import math
import pathlib

from PIL import Image, ImageDraw

DT = 0.5
HORIZON = 10
ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "demo"

# scene_id, history speed, history curvature, future speed, future curvature, sky colour
SCENES = [
    ("demo-001", 0.0, 0.0, 0.0, 0.0, (120, 140, 160)),
    ("demo-002", 4.0, 0.0, 4.0, 0.0, (110, 150, 200)),
    ("demo-003", 5.0, 0.0, 5.0, 0.05, (150, 160, 170)),
    ("demo-004", 6.0, 0.0, 6.0, 0.0, (90, 120, 170)),
    ("demo-005", 4.0, 0.0, 4.0, -0.06, (170, 170, 150)),
]

ANNOTATIONS = [
    ("demo-001", "a01", "w1",
     "Stop at the curb on the right side of the road right before the crosswalk.", True, False),
    ("demo-001", "a02", "w2", "Wait for the pedestrian to cross", False, True),
    ("demo-002", "a03", "w1", "Go straight when the stoplight turns green", True, False),
    ("demo-002", "a04", "w3", "Change to the left lane", False, False),
    ("demo-003", "a05", "w2", "Turn left at the intersection", True, False),
    ("demo-004", "a06", "w3", "Follow the yellow car", False, True),
    ("demo-004", "a07", "w1", "Slow down", False, False),
    ("demo-005", "a08", "w2", "Turn right after the bus passes by the parked truck", True, True),
]


def step(x, y, h, v, k):
    s = v * DT
    if abs(k) < 1e-9:
        return x + s * math.cos(h), y + s * math.sin(h), h
    h2 = h + k * s
    return x + (math.sin(h2) - math.sin(h)) / k, y - (math.cos(h2) - math.cos(h)) / k, h2


def main():
    frames_dir = ROOT / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    scenes = []
    for scene_id, hv, hk, fv, fk, colour in SCENES:
        x, y, h = 100.0, 50.0, 0.0
        history = []
        for i in range(4):
            t = round(i * DT, 3)
            history.append({"t": t, "x": round(x, 6), "y": round(y, 6), "heading": round(h, 6), "speed": hv})
            if i < 3:
                x, y, h = step(x, y, h, hv, hk)
        gt = []
        for _ in range(HORIZON):
            x, y, h = step(x, y, h, fv, fk)
            gt.append([round(x, 6), round(y, 6)])
        frames = []
        for i in range(3):
            name = f"{scene_id}_{i}.jpg"
            img = Image.new("RGB", (64, 36), colour)
            draw = ImageDraw.Draw(img)
            draw.rectangle([0, 20, 63, 35], fill=(60, 60, 60))
            draw.line([32 + i, 20, 32, 35], fill=(230, 230, 230))
            img.save(frames_dir / name, quality=80)
            frames.append({"path": f"frames/{name}", "t": round(1.0 + i * DT, 3)})
        scenes.append({"scene_id": scene_id, "frames": frames, "ego_history": history, "ground_truth": gt})

    manifest = {"header": {"version": 1, "dt_seconds": DT, "horizon": HORIZON}, "scenes": scenes}
    (ROOT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    with open(ROOT / "annotations.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scene_id", "annotation_id", "annotator_id", "text", "refs_static", "refs_dynamic", "actionable"])
        for scene_id, aid, worker, text, st, dy in ANNOTATIONS:
            w.writerow([scene_id, aid, worker, text, str(st).lower(), str(dy).lower(), "true"])

    zeros = ", ".join(["0"] * HORIZON)
    script = [
        {"match": {"stage": "trajectory", "instruction_contains": "Stop"},
         "response_text": f"Speeds: [{zeros}]\nCurvatures: [{zeros}]"},
        {"match": {"stage": "trajectory", "instruction_contains": "straight"},
         "response_text": "Speeds: [" + ", ".join(["4"] * HORIZON) + f"]\nCurvatures: [{zeros}]"},
        {"match": {"stage": "intent", "instruction_contains": "Stop"},
         "response_text": "The car will slow down and stop at the curb before the crosswalk."},
    ]
    (ROOT / "mock_script.json").write_text(json.dumps(script, indent=2) + "\n")


if __name__ == "__main__":
    main()
