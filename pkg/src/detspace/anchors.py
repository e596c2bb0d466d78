"""Anchor tiling and adaptive positive-sample assignment.

Anchors are squares tiled on the stride-8/16/32 grids of a 640x640 training
canvas (two scales per location, 16,800 total). Assignment follows the
adaptive scheme: per ground-truth box, pool the k centre-nearest anchors of
every level, threshold their IoUs at mean + population std, require the
anchor centre inside the box, and give doubly-claimed anchors to the box
they overlap most.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arch import ANCHOR_SCALES, STRIDES

CANVAS_SIZE = 640
ATSS_TOPK = 9
_GT_CHUNK = 256  # bounds the (anchors x gts) distance matrices


@dataclass(frozen=True)
class AnchorGrid:
    centers: np.ndarray   # (N, 2) float64 cx, cy
    sides: np.ndarray     # (N,) float64
    strides: np.ndarray   # (N,) int64

    def __len__(self) -> int:
        return len(self.sides)

    @property
    def boxes(self) -> np.ndarray:
        """(N, 4) x1, y1, x2, y2."""
        half = self.sides[:, None] / 2.0
        return np.concatenate([self.centers - half, self.centers + half], axis=1)


def tile_anchors(canvas: int = CANVAS_SIZE,
                 strides: tuple[int, ...] = STRIDES,
                 scales: dict[int, tuple[int, ...]] | None = None) -> AnchorGrid:
    """Tile anchors on every stride grid; centres sit at (i + 0.5) * stride.

    Order: levels by ascending stride, locations row-major, scales ascending
    within each location.
    """
    scales = scales if scales is not None else ANCHOR_SCALES
    out_c, out_s, out_st = [], [], []
    for s in sorted(strides):
        g = canvas // s
        coord = (np.arange(g, dtype=np.float64) + 0.5) * s
        cx, cy = np.meshgrid(coord, coord)
        locs = np.stack([cx.ravel(), cy.ravel()], axis=1)
        sides = sorted(scales[s])
        out_c.append(np.repeat(locs, len(sides), axis=0))
        out_s.append(np.tile(np.asarray(sides, dtype=np.float64), len(locs)))
        out_st.append(np.full(len(locs) * len(sides), s, dtype=np.int64))
    return AnchorGrid(np.concatenate(out_c), np.concatenate(out_s), np.concatenate(out_st))


def iou(a, b) -> float:
    """Intersection over union of two x1,y1,x2,y2 boxes; zero-area gives 0."""
    ax1, ay1, ax2, ay2 = a
    bx1, by1, bx2, by2 = b
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = max(ax2 - ax1, 0.0) * max(ay2 - ay1, 0.0)
    area_b = max(bx2 - bx1, 0.0) * max(by2 - by1, 0.0)
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(A, B) IoU matrix of x1,y1,x2,y2 boxes."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    tl = np.maximum(a[:, None, :2], b[None, :, :2])
    br = np.minimum(a[:, None, 2:], b[None, :, 2:])
    wh = np.clip(br - tl, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = np.clip(a[:, 2] - a[:, 0], 0, None) * np.clip(a[:, 3] - a[:, 1], 0, None)
    area_b = np.clip(b[:, 2] - b[:, 0], 0, None) * np.clip(b[:, 3] - b[:, 1], 0, None)
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def _pairwise_iou(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """Element-wise IoU of equally shaped (..., 4) box arrays."""
    tl = np.maximum(boxes_a[..., :2], boxes_b[..., :2])
    br = np.minimum(boxes_a[..., 2:], boxes_b[..., 2:])
    wh = np.clip(br - tl, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = (np.clip(boxes_a[..., 2] - boxes_a[..., 0], 0, None)
              * np.clip(boxes_a[..., 3] - boxes_a[..., 1], 0, None))
    area_b = (np.clip(boxes_b[..., 2] - boxes_b[..., 0], 0, None)
              * np.clip(boxes_b[..., 3] - boxes_b[..., 1], 0, None))
    union = area_a + area_b - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def _topk_per_level(centers: np.ndarray, anchor_strides: np.ndarray,
                    gt_centers: np.ndarray, k: int) -> np.ndarray:
    """Candidate anchor indices, levels stacked, for one gt chunk.

    Ranking uses squared centre distance (same order as L2) with ties broken
    by anchor index.
    """
    rows = []
    for s in np.unique(anchor_strides):
        level_idx = np.flatnonzero(anchor_strides == s)
        kl = min(k, len(level_idx))
        dx = centers[level_idx, 0][:, None] - gt_centers[None, :, 0]
        dy = centers[level_idx, 1][:, None] - gt_centers[None, :, 1]
        dist = dx * dx + dy * dy
        if len(level_idx) <= 4096:
            order = np.argsort(dist, axis=0, kind="stable")[:kl]
        else:
            part = np.sort(np.argpartition(dist, kl - 1, axis=0)[:kl], axis=0)
            sub = np.take_along_axis(dist, part, axis=0)
            order = np.take_along_axis(part, np.argsort(sub, axis=0, kind="stable"), axis=0)
        rows.append(level_idx[order])
    return np.concatenate(rows, axis=0)


def atss_assign(anchor_boxes: np.ndarray, anchor_strides: np.ndarray,
                gt_boxes: np.ndarray, k: int = ATSS_TOPK) -> dict[int, np.ndarray]:
    """Map gt index -> sorted positive anchor indices.

    Candidates are the k centre-nearest anchors per stride level (clamped to
    the level size). The per-gt IoU threshold is mean + std (ddof=0) over
    the pooled candidates; positives must also have their centre inside the
    gt box (inclusive). An anchor claimed by several gts goes to the
    highest-IoU one, earlier gt on ties.
    """
    anchor_boxes = np.asarray(anchor_boxes, dtype=np.float64).reshape(-1, 4)
    anchor_strides = np.asarray(anchor_strides)
    gt_boxes = np.asarray(gt_boxes, dtype=np.float64).reshape(-1, 4)
    n, g = len(anchor_boxes), len(gt_boxes)
    if g == 0 or n == 0:
        return {}

    centers = (anchor_boxes[:, :2] + anchor_boxes[:, 2:]) / 2.0
    gt_centers = (gt_boxes[:, :2] + gt_boxes[:, 2:]) / 2.0
    cx, cy = centers[:, 0], centers[:, 1]

    best_iou = np.full(n, -np.inf)
    assigned = np.full(n, -1, dtype=np.int64)
    for start in range(0, g, _GT_CHUNK):
        stop = min(start + _GT_CHUNK, g)
        cand = _topk_per_level(centers, anchor_strides, gt_centers[start:stop], k)
        cand_ious = _pairwise_iou(anchor_boxes[cand], gt_boxes[None, start:stop, :])
        thr = cand_ious.mean(axis=0) + cand_ious.std(axis=0, ddof=0)
        for j in range(stop - start):  # ascending order: earlier gts win exact ties
            x1, y1, x2, y2 = gt_boxes[start + j]
            rows = cand[:, j]
            keep = cand_ious[:, j] >= thr[j]
            keep &= (cx[rows] >= x1) & (cx[rows] <= x2) & (cy[rows] >= y1) & (cy[rows] <= y2)
            for r, val in zip(rows[keep], cand_ious[keep, j]):
                if val > best_iou[r]:
                    best_iou[r] = val
                    assigned[r] = start + j

    out: dict[int, np.ndarray] = {}
    for j in range(g):
        pos = np.flatnonzero(assigned == j)
        if len(pos):
            out[j] = pos
    return out


def candidate_positive_counts(anchor_boxes: np.ndarray, anchor_strides: np.ndarray,
                              gt_boxes: np.ndarray, k: int = ATSS_TOPK) -> dict[int, np.ndarray]:
    """Per-gt positives before cross-gt deduplication (raw counting mode)."""
    anchor_boxes = np.asarray(anchor_boxes, dtype=np.float64).reshape(-1, 4)
    gt_boxes = np.asarray(gt_boxes, dtype=np.float64).reshape(-1, 4)
    n, g = len(anchor_boxes), len(gt_boxes)
    if g == 0 or n == 0:
        return {}
    centers = (anchor_boxes[:, :2] + anchor_boxes[:, 2:]) / 2.0
    gt_centers = (gt_boxes[:, :2] + gt_boxes[:, 2:]) / 2.0
    cx, cy = centers[:, 0], centers[:, 1]
    out: dict[int, np.ndarray] = {}
    for start in range(0, g, _GT_CHUNK):
        stop = min(start + _GT_CHUNK, g)
        cand = _topk_per_level(centers, np.asarray(anchor_strides), gt_centers[start:stop], k)
        cand_ious = _pairwise_iou(anchor_boxes[cand], gt_boxes[None, start:stop, :])
        thr = cand_ious.mean(axis=0) + cand_ious.std(axis=0, ddof=0)
        for j in range(stop - start):
            x1, y1, x2, y2 = gt_boxes[start + j]
            rows = cand[:, j]
            keep = cand_ious[:, j] >= thr[j]
            keep &= (cx[rows] >= x1) & (cx[rows] <= x2) & (cy[rows] >= y1) & (cy[rows] <= y2)
            pos = np.unique(rows[keep])
            if len(pos):
                out[start + j] = pos
    return out


def assignment_counts_by_scale(grid: AnchorGrid, assignment: dict[int, np.ndarray],
                               scales: tuple[int, ...] = (16, 32, 64, 128, 256, 512)) -> dict[int, int]:
    counts = {s: 0 for s in scales}
    for pos in assignment.values():
        for side in grid.sides[pos]:
            counts[int(side)] += 1
    return counts
