#!/usr/bin/env python3
"""Regenerates tests/fixtures: the procedural horse-01 image, its JPEG copy,
grounding masks named <image-digest>__<phrase>.png, the exemplar manifest and
the synthetic three-method rating corpus (ratings/table1.csv).

Usage: tools/make_fixtures.py [OUT_DIR]   (default: tests/fixtures)
"""
import hashlib
import json
import random
import struct
import sys
from pathlib import Path

from PIL import Image

W, H = 96, 96

EXEMPLARS = [
    ("add-objects", "Adding new objects within the images"),
    ("remove-objects", "Removing objects"),
    ("smile", "make it smile"),
    ("winter", "let's see it in winter"),
    ("inpaint", "Alter an object's visual appearance without affecting its structure"),
    ("background", "Change the scene's background"),
]


# Positive majority votes per metric out of 1200 images:
# (EditFaithfulness, ContentPreservation, OverallInstructionFollowing).
TABLE_COUNTS = {
    "IIIE": (612, 936, 960),
    "LEdits++": (552, 768, 888),
    "Tasvir": (480, 588, 744),
}
TABLE_IMAGES = 1200
METRICS = ("EditFaithfulness", "ContentPreservation", "OverallInstructionFollowing")
POSITIVE_PANELS = ((1, 1, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1))
NEGATIVE_PANELS = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def write_table_ratings(path):
    rng = random.Random(20240617)
    rows = ["method,image_id,metric,rater_id,score"]
    for method, counts in TABLE_COUNTS.items():
        for metric, positives in zip(METRICS, counts):
            chosen = set(rng.sample(range(TABLE_IMAGES), positives))
            for i in range(TABLE_IMAGES):
                panels = POSITIVE_PANELS if i in chosen else NEGATIVE_PANELS
                panel = panels[rng.randrange(len(panels))]
                raters = rng.sample([f"r{k:02d}" for k in range(12)], 3)
                for rater, score in zip(raters, panel):
                    rows.append(f"{method},img-{i:04d},{metric},{rater},{score}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(rows) + "\n")


def inside_ellipse(x, y, cx, cy, rx, ry):
    return ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0


def head(x, y):
    return inside_ellipse(x, y, 72, 32, 9, 7)


def horse(x, y):
    body = inside_ellipse(x, y, 46, 50, 22, 11)
    neck = 58 <= x <= 68 and 32 <= y <= 48 and (x - 58) >= (y - 32) * 0.25
    legs = any(lx <= x <= lx + 3 for lx in (30, 38, 54, 62)) and 56 <= y <= 74
    tail = 21 <= x <= 25 and 44 <= y <= 62
    return body or neck or legs or tail or head(x, y)


def pixel(x, y):
    if horse(x, y):
        shade = 8 if head(x, y) else 0
        return (120 + shade, 72 + shade, 40 + (x % 3))
    if y < 58:
        return (110 + y, 160 + y // 2, 230)
    return (50 + (x * 7 + y * 3) % 20, 140 + (x + y) % 25, 60)


def image_digest(img):
    rgb = img.convert("RGB")
    h = hashlib.sha256()
    h.update(struct.pack("<II", rgb.width, rgb.height))
    h.update(rgb.tobytes())
    return h.hexdigest()[:16]


def mask_image(pred):
    m = Image.new("L", (W, H), 0)
    m.putdata([255 if pred(x, y) else 0 for y in range(H) for x in range(W)])
    return m


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures")
    images = out / "images"
    grounding = out / "grounding"
    images.mkdir(parents=True, exist_ok=True)
    grounding.mkdir(parents=True, exist_ok=True)

    img = Image.new("RGB", (W, H))
    img.putdata([pixel(x, y) for y in range(H) for x in range(W)])
    img.save(images / "horse-01.png", optimize=False)
    img.save(images / "horse-01.jpg", quality=95, subsampling=0)

    Image.new("RGB", (1, 1), (128, 131, 126)).save(images / "gray-1x1.jpg", quality=95, subsampling=0)
    rgba = Image.new("RGBA", (2, 1))
    rgba.putdata([(255, 0, 0, 255), (0, 0, 255, 0)])
    rgba.save(images / "rgba-2x1.png")
    gray = Image.new("L", (2, 1))
    gray.putdata([17, 200])
    gray.save(images / "gray-2x1.png")

    digest = image_digest(img)
    horse_mask = mask_image(horse)
    phrases = {
        "horse": horse_mask,
        "object": horse_mask,
        "main subject": horse_mask,
        "face": mask_image(head),
    }
    for stale in grounding.glob("*.png"):
        stale.unlink()
    for phrase, m in phrases.items():
        m.save(grounding / f"{digest}__{phrase.replace(' ', '_')}.png")

    with open(out / "exemplars.jsonl", "w") as f:
        for job_id, instruction in EXEMPLARS:
            f.write(json.dumps({"id": job_id, "image_path": "images/horse-01.png", "instruction": instruction}) + "\n")
    (out / "horse-01.digest").write_text(digest + "\n")
    write_table_ratings(out / "ratings" / "table1.csv")
    print(digest)


if __name__ == "__main__":
    main()
