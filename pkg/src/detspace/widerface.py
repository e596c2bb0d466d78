"""WIDER FACE ground-truth ingestion.

The bbx_gt format repeats records of

    <relative image path>
    <face count>
    <count lines of "x y w h blur expression illumination invalid occlusion pose">

where a zero-count record is followed by exactly one all-zero face line
that is consumed and discarded. Invalid and degenerate faces are retained
at parse time; statistics consumers filter them behind an explicit flag.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .imagesize import read_image_dims

ATTR_NAMES = ("blur", "expression", "illumination", "invalid", "occlusion", "pose")
# documented code ranges per attribute
ATTR_RANGES = {
    "blur": (0, 2), "expression": (0, 1), "illumination": (0, 1),
    "invalid": (0, 1), "occlusion": (0, 2), "pose": (0, 1),
}


class GtParseError(ValueError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DimensionResolutionError(RuntimeError):
    def __init__(self, missing: list[str]):
        preview = ", ".join(missing[:5]) + ("..." if len(missing) > 5 else "")
        super().__init__(f"{len(missing)} images unresolved: {preview}")
        self.missing = list(missing)


@dataclass
class FaceBox:
    x: float
    y: float
    w: float
    h: float
    blur: int = 0
    expression: int = 0
    illumination: int = 0
    invalid: int = 0
    occlusion: int = 0
    pose: int = 0

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError(f"face box needs non-negative size, got {self.w}x{self.h}")

    @property
    def attrs(self) -> tuple[int, ...]:
        return (self.blur, self.expression, self.illumination,
                self.invalid, self.occlusion, self.pose)

    def as_row(self) -> list:
        return [self.x, self.y, self.w, self.h, *self.attrs]

    def xyxy(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.x + self.w, self.y + self.h)

    def scale(self) -> float:
        return (self.w * self.h) ** 0.5


@dataclass
class ImageAnnotation:
    path: str
    width: int | None = None
    height: int | None = None
    faces: list[FaceBox] = field(default_factory=list)

    def __post_init__(self):
        if not self.path:
            raise ValueError("image annotation needs a non-empty path")
        for name, v in (("width", self.width), ("height", self.height)):
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive when set, got {v}")


@dataclass
class FaceDataset:
    images: list[ImageAnnotation]
    split_label: str = ""

    def __post_init__(self):
        seen = set()
        for im in self.images:
            if im.path in seen:
                raise ValueError(f"duplicate image path in dataset: {im.path}")
            seen.add(im.path)

    def __len__(self) -> int:
        return len(self.images)

    @property
    def face_count(self) -> int:
        return sum(len(im.faces) for im in self.images)


def parse_widerface_gt(text: str, split_label: str = "") -> FaceDataset:
    """Parse bbx_gt file contents; errors carry 1-based line numbers."""
    lines = text.splitlines()
    images: list[ImageAnnotation] = []
    odd_attr_lines = 0
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        path = lines[i].strip()
        if i + 1 >= len(lines):
            raise GtParseError(f"record {path!r} truncated before its face count", i + 2)
        count_text = lines[i + 1].strip()
        try:
            count = int(count_text)
        except ValueError:
            raise GtParseError(f"face count is not an integer: {count_text!r}", i + 2) from None
        if count < 0:
            raise GtParseError(f"face count is negative: {count}", i + 2)
        face_lines = max(count, 1)  # zero-count records carry one discarded line
        if i + 2 + face_lines > len(lines):
            raise GtParseError(
                f"record {path!r} truncated: expected {face_lines} face lines", len(lines) + 1)
        faces = []
        for j in range(face_lines):
            ln = i + 2 + j
            fields = lines[ln].split()
            if len(fields) != 10:
                raise GtParseError(
                    f"face line has {len(fields)} fields, expected 10", ln + 1)
            try:
                vals = [int(v) for v in fields]
            except ValueError:
                raise GtParseError(f"non-integer face field in {lines[ln]!r}", ln + 1) from None
            if count == 0:
                continue  # discard the conventional all-zero line
            box = FaceBox(*vals[:4], *vals[4:])
            for name, value in zip(ATTR_NAMES, vals[4:]):
                lo, hi = ATTR_RANGES[name]
                if not lo <= value <= hi:
                    odd_attr_lines += 1
            faces.append(box)
        try:
            images.append(ImageAnnotation(path, faces=faces))
        except ValueError as exc:
            raise GtParseError(str(exc), i + 1) from None
        i += 2 + face_lines
    if odd_attr_lines:
        warnings.warn(f"{odd_attr_lines} face attribute values outside documented ranges",
                      stacklevel=2)
    try:
        return FaceDataset(images, split_label)
    except ValueError as exc:
        raise GtParseError(str(exc), 1) from None


def format_widerface_gt(dataset: FaceDataset) -> str:
    """Serialize back to bbx_gt text (round-trips with parse_widerface_gt)."""
    out = []
    for im in dataset.images:
        out.append(im.path)
        out.append(str(len(im.faces)))
        if not im.faces:
            out.append("0 0 0 0 0 0 0 0 0 0")
        for f in im.faces:
            out.append(" ".join(str(int(v)) for v in f.as_row()))
    return "\n".join(out) + "\n"


def read_sizes_csv(path) -> dict[str, tuple[int, int]]:
    """Sizes sidecar: header row then path,width,height."""
    sizes = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            return sizes
        for row in reader:
            if not row:
                continue
            sizes[row[0]] = (int(row[1]), int(row[2]))
    return sizes


def write_sizes_csv(dataset: FaceDataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["path", "width", "height"])
        for im in dataset.images:
            if im.width is not None and im.height is not None:
                writer.writerow([im.path, im.width, im.height])


def resolve_dimensions(dataset: FaceDataset, image_root=None, sizes_csv=None,
                       cache_csv=None) -> FaceDataset:
    """Populate every image's width/height from a sizes CSV and/or file probing.

    CSV entries win over file probing. Fails with the full list of
    unresolved paths; on success optionally writes a sizes sidecar to
    `cache_csv` so later runs skip the probing.
    """
    table = read_sizes_csv(sizes_csv) if sizes_csv else {}
    root = Path(image_root) if image_root else None
    resolved: list[ImageAnnotation] = []
    missing: list[str] = []
    for im in dataset.images:
        wh = table.get(im.path)
        if wh is None and im.width is not None and im.height is not None:
            wh = (im.width, im.height)
        if wh is None and root is not None:
            fp = root / im.path
            if fp.is_file():
                try:
                    with open(fp, "rb") as f:
                        wh = read_image_dims(f.read(262144))
                except ValueError:
                    wh = None
        if wh is None:
            missing.append(im.path)
            continue
        resolved.append(ImageAnnotation(im.path, wh[0], wh[1], im.faces))
    if missing:
        raise DimensionResolutionError(missing)
    out = FaceDataset(resolved, dataset.split_label)
    if cache_csv:
        write_sizes_csv(out, cache_csv)
    return out


def dataset_to_json(dataset: FaceDataset) -> str:
    obj = {
        "split": dataset.split_label,
        "images": [
            {
                "path": im.path,
                "width": im.width,
                "height": im.height,
                "faces": [f.as_row() for f in im.faces],
            }
            for im in dataset.images
        ],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def dataset_from_json(text: str) -> FaceDataset:
    obj = json.loads(text)
    images = []
    for im in obj["images"]:
        faces = [FaceBox(*row[:4], *(int(v) for v in row[4:])) for row in im["faces"]]
        images.append(ImageAnnotation(im["path"], im.get("width"), im.get("height"), faces))
    return FaceDataset(images, obj.get("split", ""))


def filter_faces(image: ImageAnnotation, include_invalid: bool = False) -> list[FaceBox]:
    """Statistics filter: drop invalid-flagged and degenerate boxes by default."""
    if include_invalid:
        return list(image.faces)
    return [f for f in image.faces if not f.invalid and f.w > 0 and f.h > 0]
