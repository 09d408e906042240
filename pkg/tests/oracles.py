"""Independent reference implementations used to check the library.

Everything here is deliberately naive (double loops, full enumerations,
high-precision arithmetic) and shares no code with the package, so a bug
cannot hide in both paths at once.
"""

from __future__ import annotations

import math
from datetime import timedelta

import numpy as np
from mpmath import mp, mpf


def pearson_highprec(x, y, dps: int = 50) -> float:
    """Raw-moment correlation formula evaluated at `dps` decimal digits."""
    old = mp.dps
    try:
        mp.dps = dps
        n = len(x)
        xs = [mpf(float(v)) for v in x]
        ys = [mpf(float(v)) for v in y]
        sxy = mp.fsum(a * b for a, b in zip(xs, ys))
        sx = mp.fsum(xs)
        sy = mp.fsum(ys)
        sxx = mp.fsum(a * a for a in xs)
        syy = mp.fsum(b * b for b in ys)
        num = n * sxy - sx * sy
        den = mp.sqrt(n * sxx - sx * sx) * mp.sqrt(n * syy - sy * sy)
        return float(num / den)
    finally:
        mp.dps = old


def distance_double_loop(X: np.ndarray, metric: str) -> np.ndarray:
    """Pairwise dissimilarities by direct per-pair evaluation."""
    n = len(X)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            x, y = X[i], X[j]
            if metric == "euclidean":
                D[i, j] = math.sqrt(float(((x - y) ** 2).sum()))
            elif metric == "cosine":
                D[i, j] = 1.0 - float(x @ y) / (
                    math.sqrt(float(x @ x)) * math.sqrt(float(y @ y))
                )
            elif metric == "correlation":
                xc = x - x.mean()
                yc = y - y.mean()
                D[i, j] = 1.0 - float(xc @ yc) / (
                    math.sqrt(float(xc @ xc)) * math.sqrt(float(yc @ yc))
                )
            else:
                raise ValueError(metric)
    return D


def naive_average_linkage(D0: np.ndarray, cut: float) -> set[frozenset[int]]:
    """O(n^3)-style reference: rescan every cluster pair each merge.

    Cluster distance is the mean over all cross pairs of the original
    matrix; the merged cluster keeps the smaller slot id and ties break on
    the smallest (id, id) pair.
    """
    n = len(D0)
    clusters: dict[int, list[int]] = {i: [i] for i in range(n)}
    while len(clusters) > 1:
        ids = sorted(clusters)
        best_d = None
        best_pair = None
        for ai in range(len(ids)):
            for bi in range(ai + 1, len(ids)):
                a, b = ids[ai], ids[bi]
                cross = [D0[x, y] for x in clusters[a] for y in clusters[b]]
                d = float(np.mean(cross))
                if best_d is None or d < best_d:
                    best_d = d
                    best_pair = (a, b)
        if best_d > cut:
            break
        a, b = best_pair
        clusters[a] = clusters[a] + clusters[b]
        del clusters[b]
    return {frozenset(m) for m in clusters.values()}


def partition_of(clustering) -> set[frozenset[int]]:
    return {frozenset(members) for members in clustering.clusters}


def prf_pair_loop(pred, true):
    """Pairwise P/R/F by explicit enumeration of all unordered pairs."""
    tp = fp = fn = 0
    n = len(pred)
    for i in range(n):
        for j in range(i + 1, n):
            same_pred = pred[i] == pred[j]
            same_true = true[i] == true[j]
            if same_pred and same_true:
                tp += 1
            elif same_pred:
                fp += 1
            elif same_true:
                fn += 1
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"tp": tp, "fp": fp, "fn": fn, "precision": precision, "recall": recall, "f": f}


def occupancy_minutes(intervals, day_start, total_minutes: int) -> float:
    """Minute-by-minute scan: how many whole minutes fall inside some interval.

    Exact for minute-aligned intervals under the [start, end) convention.
    """
    occupied = 0
    for m in range(total_minutes):
        t = day_start + timedelta(minutes=m)
        if any(s <= t < e for s, e in intervals):
            occupied += 1
    return float(occupied)


def traits_tally(realized_events, coverage_by_day):
    """Per-day tally of the five traits straight from generator bookkeeping.

    Events with no kept frames are ignored; each remaining event is the
    [first_frame, last_frame] interval of its identity.
    """
    days = sorted(coverage_by_day)
    per_persons, per_events, per_minutes, per_alone = [], [], [], []
    for day in days:
        todays = [e for e in realized_events if e.day == day and e.frame_count > 0]
        persons = len({e.identity for e in todays})
        minutes = sum(
            (e.last_frame - e.first_frame).total_seconds() / 60.0 for e in todays
        )
        spans = sorted((e.first_frame, e.last_frame) for e in todays)
        merged = []
        for s, e in spans:
            if merged and s <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        occupied = sum((e - s).total_seconds() / 60.0 for s, e in merged)
        cov = coverage_by_day[day]
        per_persons.append(persons)
        per_events.append(len(todays))
        per_minutes.append(minutes)
        per_alone.append(cov.duration_minutes - occupied)

    n_days = len(days)
    total_events = sum(per_events)
    out = {
        "persons_per_day": sum(per_persons) / n_days,
        "interactions_per_day": total_events / n_days,
        "minutes_alone_per_day": sum(per_alone) / n_days,
        "per_day_alone": per_alone,
        "per_day_minutes": per_minutes,
    }
    if total_events == 0:
        out["minutes_per_interaction"] = 0.0
        out["minutes_per_person"] = 0.0
        return out
    out["minutes_per_interaction"] = sum(per_minutes) / total_events
    ratios = [m / p for m, p in zip(per_minutes, per_persons) if p > 0]
    out["minutes_per_person"] = sum(ratios) / len(ratios)
    return out
