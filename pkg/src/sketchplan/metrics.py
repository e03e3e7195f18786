"""Keypoint accuracy metrics and the drawing-style ablation harness.

mAP here is the detection-style hit rate at a pixel threshold (per role,
then averaged), not the 11-point interpolated variant; correspondence comes
from declared identity (record, symbol, role), not assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGroundTruth, UnpairedVariants
from .parse import parse_sketch
from .types import (
    ArrowSymbol,
    RasterImage,
    ROLE_CENTER,
    ROLE_END,
    ROLE_START,
)

DEFAULT_THRESHOLD_PX = 50.0


@dataclass(frozen=True)
class KeypointRecord:
    """One keypoint observation; key identity is (record, symbol, role)."""

    record: str
    symbol: str
    role: str
    u: float
    v: float

    @property
    def key(self) -> tuple:
        return (self.record, self.symbol, self.role)


@dataclass(frozen=True)
class EvalReport:
    threshold_px: float
    per_role: dict  # role -> {md, std, map, matched, total}
    md: float
    map: float
    misses: int

    def to_json(self) -> dict:
        return {
            "threshold_px": self.threshold_px,
            "per_role": self.per_role,
            "md": self.md,
            "map": self.map,
            "misses": self.misses,
        }

    @classmethod
    def from_json(cls, d) -> "EvalReport":
        return cls(d["threshold_px"], d["per_role"], d["md"], d["map"], d["misses"])

    def to_table(self) -> str:
        rows = [("role", "MD(px)", "std", "mAP", "matched", "total")]
        for role in sorted(self.per_role):
            s = self.per_role[role]
            rows.append(
                (role, f"{s['md']:.2f}", f"{s['std']:.2f}", f"{s['map']:.3f}",
                 str(s["matched"]), str(s["total"]))
            )
        rows.append(("all", f"{self.md:.2f}", "", f"{self.map:.3f}", "", ""))
        widths = [max(len(r[i]) for r in rows) for i in range(6)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        return "\n".join(lines)


def keypoint_metrics(predictions, ground_truth, threshold_px: float = DEFAULT_THRESHOLD_PX) -> EvalReport:
    """Mean pixel distance and hit rate of predictions against ground truth.

    MD averages the Euclidean distance over matched pairs; a ground-truth
    keypoint without a prediction counts as a miss (it stays in the mAP
    denominator but contributes no distance).
    """
    gt = {g.key: g for g in ground_truth}
    if not gt:
        raise EmptyGroundTruth("no ground-truth keypoints to score against")
    preds = {}
    for p in predictions:
        preds.setdefault(p.key, p)

    roles = sorted({k[2] for k in gt})
    per_role = {}
    all_d = []
    misses = 0
    for role in roles:
        dists = []
        total = 0
        for key, g in gt.items():
            if key[2] != role:
                continue
            total += 1
            p = preds.get(key)
            if p is None:
                misses += 1
                continue
            dists.append(math.hypot(p.u - g.u, p.v - g.v))
        hits = sum(1 for d in dists if d <= threshold_px)
        per_role[role] = {
            "md": float(np.mean(dists)) if dists else float("nan"),
            "std": float(np.std(dists)) if dists else float("nan"),
            "map": hits / total if total else 0.0,
            "matched": len(dists),
            "total": total,
        }
        all_d.extend(dists)
    report = EvalReport(
        threshold_px=threshold_px,
        per_role=per_role,
        md=float(np.mean(all_d)) if all_d else float("nan"),
        map=float(np.mean([s["map"] for s in per_role.values()])),
        misses=misses,
    )
    return report


def sign_test_p(wins_a: int, wins_b: int) -> float:
    """Two-sided exact binomial sign test on non-tied pairs."""
    n = wins_a + wins_b
    if n == 0:
        return 1.0
    k = min(wins_a, wins_b)
    tail = sum(math.comb(n, i) for i in range(0, k + 1)) / 2.0**n
    return min(1.0, 2.0 * tail)


@dataclass(frozen=True)
class StyleAblation:
    geometric: EvalReport
    loose: EvalReport
    pairs: int
    geometric_better: int
    loose_better: int
    ties: int
    p_value: float

    def to_json(self) -> dict:
        return {
            "geometric": self.geometric.to_json(),
            "loose": self.loose.to_json(),
            "pairs": self.pairs,
            "geometric_better": self.geometric_better,
            "loose_better": self.loose_better,
            "ties": self.ties,
            "p_value": self.p_value,
        }

    def to_table(self) -> str:
        lines = [
            "style      MD(px)   mAP",
            f"geometric  {self.geometric.md:7.2f}  {self.geometric.map:.3f}",
            f"loose      {self.loose.md:7.2f}  {self.loose.map:.3f}",
            f"paired: {self.pairs}, geometric better on {self.geometric_better}, "
            f"loose better on {self.loose_better}, ties {self.ties}, "
            f"sign test p = {self.p_value:.3g}",
        ]
        return "\n".join(lines)


def style_ablation(per_style, threshold_px: float = DEFAULT_THRESHOLD_PX) -> StyleAblation:
    """Compare parser accuracy on paired loose/geometric variants.

    ``per_style`` maps style -> (predictions, ground_truth); the two ground
    truth sets must cover the same keys (shared geometry per pair).  The
    paired comparison uses per-keypoint distance, missing predictions
    counting as infinitely bad; the sign test is exact binomial.
    """
    try:
        geo_pred, geo_gt = per_style["geometric"]
        loose_pred, loose_gt = per_style["loose"]
    except KeyError as err:
        raise UnpairedVariants(f"missing style in ablation input: {err}") from err
    geo_keys = {g.key for g in geo_gt}
    loose_keys = {g.key for g in loose_gt}
    if geo_keys != loose_keys:
        raise UnpairedVariants(
            f"{len(geo_keys ^ loose_keys)} keypoints lack a paired variant"
        )

    geo_report = keypoint_metrics(geo_pred, geo_gt, threshold_px)
    loose_report = keypoint_metrics(loose_pred, loose_gt, threshold_px)

    def dist_map(preds, gts):
        pm = {}
        for p in preds:
            pm.setdefault(p.key, p)
        out = {}
        for g in gts:
            p = pm.get(g.key)
            out[g.key] = math.hypot(p.u - g.u, p.v - g.v) if p else math.inf
        return out

    dg = dist_map(geo_pred, geo_gt)
    dl = dist_map(loose_pred, loose_gt)
    geo_better = loose_better = ties = 0
    for key in geo_keys:
        a, b = dg[key], dl[key]
        if math.isinf(a) and math.isinf(b):
            ties += 1
        elif abs(a - b) <= 1e-12:
            ties += 1
        elif a < b:
            geo_better += 1
        else:
            loose_better += 1
    return StyleAblation(
        geometric=geo_report,
        loose=loose_report,
        pairs=len(geo_keys),
        geometric_better=geo_better,
        loose_better=loose_better,
        ties=ties,
        p_value=sign_test_p(geo_better, loose_better),
    )


# ---------------------------------------------------------------------------
# dataset evaluation
# ---------------------------------------------------------------------------

def _truth_records(rec_id: str, variant_tag: str, truths) -> list:
    out = []
    for t in truths:
        sym = f"{variant_tag}/{t['symbol']}"
        if "arrow" in t:
            a = t["arrow"]
            out.append(KeypointRecord(rec_id, sym + "/arrow", ROLE_START, a["start"][0], a["start"][1]))
            out.append(KeypointRecord(rec_id, sym + "/arrow", ROLE_END, a["end"][0], a["end"][1]))
        if "circle" in t:
            c = t["circle"]
            out.append(KeypointRecord(rec_id, sym + "/circle", ROLE_CENTER, c["center"][0], c["center"][1]))
    return out


def _prediction_records(rec_id: str, variant_tag: str, truths, symbols) -> list:
    """Match parsed symbols to truth symbols by (ordinal, kind) within the
    variant; identity is known by construction, no assignment needed."""
    by_group: dict = {}
    for s in symbols.symbols:
        kind = "arrow" if isinstance(s, ArrowSymbol) else "circle"
        by_group.setdefault((s.color.ordinal, kind), []).append(s)
    out = []
    for t in truths:
        sym = f"{variant_tag}/{t['symbol']}"
        if "arrow" in t:
            cands = by_group.get((t["ordinal"], "arrow"), [])
            if cands:
                s = cands.pop(0)
                out.append(KeypointRecord(rec_id, sym + "/arrow", ROLE_START, s.start.u, s.start.v))
                out.append(KeypointRecord(rec_id, sym + "/arrow", ROLE_END, s.end.u, s.end.v))
        if "circle" in t:
            cands = by_group.get((t["ordinal"], "circle"), [])
            if cands:
                s = cands.pop(0)
                out.append(KeypointRecord(rec_id, sym + "/circle", ROLE_CENTER, s.center.u, s.center.v))
    return out


def evaluate_parser_on_manifest(manifest: dict, base_dir, tolerance: float = 100.0,
                                use_clean: bool = False, styles=None,
                                paired_only: bool = False):
    """Parse every variant in a dataset and collect per-style scoring input.

    Returns {style: (predictions, ground_truth)} restricted to ``styles``
    when given.  The pair tag keeps geometric/loose variants of the same
    perturbed geometry on the same key; ``paired_only`` drops variants whose
    counterpart style is missing (odd variant counts), which the ablation
    needs.
    """
    import os

    from .types import SymbolSet

    collected: dict = {}
    for rec in manifest["records"]:
        rec_id = rec["record_id"]
        clean = RasterImage.from_file(os.path.join(base_dir, rec["clean"])) if use_clean else None
        variants = rec["variants"]
        if paired_only:
            by_pair: dict = {}
            for var in variants:
                by_pair.setdefault(var["pair"], set()).add(var["style"])
            complete = {p for p, s in by_pair.items() if len(s) == 2}
            variants = [v for v in variants if v["pair"] in complete]
        for var in variants:
            style = var["style"]
            if styles is not None and style not in styles:
                continue
            tag = f"pair{var['pair']}"
            annotated = RasterImage.from_file(os.path.join(base_dir, var["file"]))
            try:
                symbols = parse_sketch(annotated, clean=clean, tolerance=tolerance)
            except Exception:
                symbols = SymbolSet(())
            preds, gts = collected.setdefault(style, ([], []))
            gts.extend(_truth_records(rec_id, tag, var["ground_truth"]))
            preds.extend(_prediction_records(rec_id, tag, var["ground_truth"], symbols))
    return collected
