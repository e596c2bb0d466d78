"""Loop-based reimplementation of the adaptive assignment, used as an oracle.

Pure Python over lists; no shared code with detspace.anchors beyond numpy
scalars going in and out.
"""

import math


def box_iou(a, b):
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = max(a[2] - a[0], 0.0) * max(a[3] - a[1], 0.0)
    area_b = max(b[2] - b[0], 0.0) * max(b[3] - b[1], 0.0)
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def assign(anchor_boxes, anchor_strides, gt_boxes, k=9):
    """gt index -> sorted list of positive anchor indices."""
    n = len(anchor_boxes)
    g = len(gt_boxes)
    if n == 0 or g == 0:
        return {}
    centers = [((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0) for b in anchor_boxes]
    levels = sorted(set(anchor_strides))

    best_iou = [-math.inf] * n
    assigned = [-1] * n
    for j, gt in enumerate(gt_boxes):
        gcx, gcy = (gt[0] + gt[2]) / 2.0, (gt[1] + gt[3]) / 2.0
        candidates = []
        for lvl in levels:
            idxs = [i for i in range(n) if anchor_strides[i] == lvl]
            # squared centre distance, ties by index
            idxs.sort(key=lambda i: ((centers[i][0] - gcx) ** 2
                                     + (centers[i][1] - gcy) ** 2, i))
            candidates.extend(idxs[:min(k, len(idxs))])
        ious = [box_iou(anchor_boxes[i], gt) for i in candidates]
        mean = sum(ious) / len(ious)
        var = sum((v - mean) ** 2 for v in ious) / len(ious)
        thr = mean + math.sqrt(var)
        for i, v in zip(candidates, ious):
            if v < thr:
                continue
            cx, cy = centers[i]
            if not (gt[0] <= cx <= gt[2] and gt[1] <= cy <= gt[3]):
                continue
            if v > best_iou[i]:
                best_iou[i] = v
                assigned[i] = j
    out = {}
    for i, j in enumerate(assigned):
        if j >= 0:
            out.setdefault(j, []).append(i)
    return {j: sorted(v) for j, v in out.items()}
