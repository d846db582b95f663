# Copyright 2026 The camrefine Authors. All Rights Reserved.
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
# ==============================================================================
"""Freezes reference values for the fixture tree.

Forward passes go through onnxruntime; everything after the feature maps is
plain Python loops over float64 so that no code is shared with the library.
Run from the repository root:

    python3 tests/data/make_goldens.py

Writes tests/data/fixtures/goldens.json and tests/data/fixtures/goldens/*.npy.
"""

import json
import math
import os

import numpy as np
import onnx
import onnxruntime as ort
from PIL import Image

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")
OUT = os.path.join(ROOT, "goldens")

ERASE_THRESHOLD = 0.7
STOP_FRACTION = 0.01
MAX_ITERATIONS = 8
MIN_PATCH = 32


def load_image(rel):
    img = Image.open(os.path.join(ROOT, rel))
    return np.asarray(img.convert("RGB"), dtype=np.float32) / np.float32(255)


class Model:
    def __init__(self, name):
        path = os.path.join(ROOT, "models", name + ".onnx")
        self.session = ort.InferenceSession(path, providers=["CPUExecutionProvider"])
        graph = onnx.load(path).graph
        weights = {t.name: onnx.numpy_helper.to_array(t) for t in graph.initializer}
        self.weights = weights["fc.weight"].astype(np.float64)

    def forward(self, img):
        x = np.ascontiguousarray(img.transpose(2, 0, 1)[None], dtype=np.float32)
        feats, scores = self.session.run(["features", "scores"], {"input": x})
        return feats[0], scores[0]


def cam(model, feats, c):
    k_units, h, w = feats.shape
    out = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            s = 0.0
            for k in range(k_units):
                s += float(model.weights[c][k]) * float(feats[k][y][x])
            out[y][x] = s if s > 0.0 else 0.0
    return out


def resize(grid, oh, ow):
    ih, iw = len(grid), len(grid[0])
    out = [[0.0] * ow for _ in range(oh)]
    for y in range(oh):
        sy = y * (ih - 1) / (oh - 1) if oh > 1 else 0.0
        y0 = int(math.floor(sy))
        y1 = min(y0 + 1, ih - 1)
        fy = sy - y0
        for x in range(ow):
            sx = x * (iw - 1) / (ow - 1) if ow > 1 else 0.0
            x0 = int(math.floor(sx))
            x1 = min(x0 + 1, iw - 1)
            fx = sx - x0
            top = (1 - fx) * grid[y0][x0] + fx * grid[y0][x1]
            bot = (1 - fx) * grid[y1][x0] + fx * grid[y1][x1]
            out[y][x] = (1 - fy) * top + fy * bot
    return out


def normalize(grid):
    peak = max(max(row) for row in grid)
    if peak <= 0.0:
        return [row[:] for row in grid]
    return [[v / peak for v in row] for row in grid]


def ccm(model, img, c):
    feats, _ = model.forward(img)
    return normalize(resize(cam(model, feats, c), img.shape[0], img.shape[1]))


def iterate(model, img, c, fill):
    h, w = img.shape[:2]
    acc = [[0.0] * w for _ in range(h)]
    cur = img.copy()
    trace = []
    margin = 1.0
    for it in range(1, MAX_ITERATIONS + 1):
        m = ccm(model, cur, c)
        new = 0
        for y in range(h):
            for x in range(w):
                before = acc[y][x] > 0.0
                acc[y][x] += m[y][x]
                if acc[y][x] > 0.0 and not before:
                    new += 1
        stop = new < STOP_FRACTION * h * w or it == MAX_ITERATIONS
        erased = 0
        mask = [[0] * w for _ in range(h)]
        if not stop:
            cur = cur.copy()
            for y in range(h):
                for x in range(w):
                    margin = min(margin, abs(m[y][x] - ERASE_THRESHOLD))
                    if m[y][x] >= ERASE_THRESHOLD:
                        cur[y, x] = fill
                        mask[y][x] = 1
                        erased += 1
        trace.append({"iteration": it, "erased": erased, "newly_activated": new,
                      "mask": mask})
        if stop:
            break
    return normalize(acc), trace, margin


def center_of_mass(m):
    total = sy = sx = 0.0
    for y, row in enumerate(m):
        for x, v in enumerate(row):
            total += v
            sy += v * y
            sx += v * x
    if total <= 0.0:
        return (len(m) - 1) / 2.0, (len(m[0]) - 1) / 2.0
    return sy / total, sx / total


def split_single(h, w, center):
    r = min(max(int(math.floor(center[0] + 0.5)), MIN_PATCH), h - MIN_PATCH)
    c = min(max(int(math.floor(center[1] + 0.5)), MIN_PATCH), w - MIN_PATCH)
    return [(0, 0, r, c), (0, c, r, w - c), (r, 0, h - r, c), (r, c, h - r, w - c)]


def pipeline(model, img, c):
    h, w = img.shape[:2]
    fill = img.reshape(-1, 3).astype(np.float64).mean(axis=0).astype(np.float32)
    base = ccm(model, img, c)
    merged = [[0.0] * w for _ in range(h)]
    margin = 1.0
    for top, left, ph, pw in split_single(h, w, center_of_mass(base)):
        m, _, mg = iterate(model, img[top:top + ph, left:left + pw], c, fill)
        margin = min(margin, mg)
        for y in range(ph):
            for x in range(pw):
                merged[top + y][left + x] = max(merged[top + y][left + x], m[y][x])
    return normalize(merged), base, margin


def suite_best_miou(maps, gts):
    best = -1.0
    for k in range(1, 20):
        t = k / 20.0
        tally = {}
        for m, gt in zip(maps, gts):
            for y in range(len(gt)):
                for x in range(len(gt[0])):
                    g = int(gt[y][x])
                    if g == 255:
                        continue
                    p = 1 if m[y][x] >= t else 0
                    tally[(g, p)] = tally.get((g, p), 0) + 1
        labels = sorted({a for a, _ in tally} | {b for _, b in tally})
        ious = []
        for lab in labels:
            inter = sum(v for (g, p), v in tally.items() if g == lab and p == lab)
            union = sum(v for (g, p), v in tally.items() if g == lab or p == lab)
            ious.append(inter / union)
        score = sum(ious) / len(ious)
        if score > best:
            best = score
    return best


def save(name, grid):
    np.save(os.path.join(OUT, name + ".npy"), np.asarray(grid, dtype="<f4"))


def main():
    os.makedirs(OUT, exist_ok=True)
    two_blob = Model("two_blob")
    equal = Model("equal_weights")
    goldens = {"forward": {}, "cam": {}, "iterative": {}, "suite": {}}

    for rel in ["images/checkerboard16.png", "images/black32.png"]:
        feats, scores = two_blob.forward(load_image(rel))
        key = os.path.splitext(os.path.basename(rel))[0]
        goldens["forward"][key] = {
            "scores": [float(s) for s in scores],
            "feature_shape": list(feats.shape),
            "features": [float(v) for v in feats.reshape(-1)],
        }

    images = ["images/checkerboard16.png", "images/one_percent.png", "images/gray64.png"]
    ids = [l.strip() for l in open(os.path.join(ROOT, "two_blob", "train.txt")) if l.strip()]
    images += ["two_blob/images/%s.png" % i for i in ids]
    for rel in images:
        img = load_image(rel)
        key = os.path.splitext(os.path.basename(rel))[0]
        feats, _ = two_blob.forward(img)
        for c in range(2):
            raw = cam(two_blob, feats, c)
            save("cam_%s_%d" % (key, c), raw)
            save("ccm_%s_%d" % (key, c), normalize(resize(raw, img.shape[0], img.shape[1])))
            goldens["cam"]["%s_%d" % (key, c)] = {
                "peak": max(max(r) for r in raw),
                "feature_shape": [len(raw), len(raw[0])],
            }
    gray = load_image("images/gray64.png")
    save("ccm_gray64_equal_0", ccm(equal, gray, 0))

    for key, rel in [("blob_00", "two_blob/images/blob_00.png"),
                     ("one_percent", "images/one_percent.png")]:
        img = load_image(rel)
        fill = img.reshape(-1, 3).astype(np.float64).mean(axis=0).astype(np.float32)
        final, trace, margin = iterate(two_blob, img, 0, fill)
        save("iter_%s_final" % key, final)
        for rec in trace:
            save("iter_%s_mask_%d" % (key, rec["iteration"]), rec["mask"])
        goldens["iterative"][key] = {
            "trace": [[r["iteration"], r["erased"], r["newly_activated"]] for r in trace],
            "threshold_margin": margin,
        }

    baselines, refined, gts = [], [], []
    margin = 1.0
    for i in ids:
        img = load_image("two_blob/images/%s.png" % i)
        gt = np.asarray(Image.open(os.path.join(ROOT, "two_blob", "labels", i + ".png")))
        ref, base, mg = pipeline(two_blob, img, 0)
        margin = min(margin, mg)
        save("infer_%s_0" % i, ref)
        baselines.append(base)
        refined.append(ref)
        gts.append(gt)
    goldens["suite"] = {
        "ids": ids,
        "baseline_best_miou": suite_best_miou(baselines, gts),
        "refined_best_miou": suite_best_miou(refined, gts),
        "threshold_margin": margin,
    }

    with open(os.path.join(ROOT, "goldens.json"), "w") as f:
        json.dump(goldens, f, indent=1, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
