from __future__ import annotations

from datetime import date, datetime, time, timedelta, timezone

import numpy as np
import pytest

from egosocial.ingest import Dataset, DayCoverage, FaceObservation

DAY = date(2024, 3, 4)


def at(hour: int, minute: int = 0, second: int = 0, day: date = DAY) -> datetime:
    return datetime.combine(day, time(hour, minute, second), tzinfo=timezone.utc)


def observations_from_matrix(
    X,
    wearer: str = "u1",
    day: date = DAY,
    start_hour: int = 9,
    spacing_seconds: float = 30.0,
    image_prefix: str | None = None,
) -> list[FaceObservation]:
    """Wrap descriptor rows as a timestamp-spaced observation sequence."""
    X = np.asarray(X, dtype=float)
    t0 = at(start_hour, day=day)
    prefix = image_prefix if image_prefix is not None else f"img-{day.isoformat()}"
    out = []
    for i, row in enumerate(X):
        out.append(
            FaceObservation(
                wearer_id=wearer,
                day=day,
                timestamp=t0 + timedelta(seconds=i * spacing_seconds),
                image_id=f"{prefix}-{i:05d}",
                face_index=0,
                descriptor=row,
            )
        )
    return out


def dataset_from_matrix(X, wearer: str = "u1", day: date = DAY, **kw) -> Dataset:
    obs = observations_from_matrix(X, wearer=wearer, day=day, **kw)
    coverage = {
        (wearer, day): DayCoverage(
            wearer_id=wearer,
            day=day,
            start=at(8, day=day),
            end=at(21, day=day),
            image_count=len(obs),
        )
    }
    return Dataset(tuple(obs), coverage)


def pad128(*rows) -> np.ndarray:
    """Embed short vectors into 128-D by zero padding."""
    out = np.zeros((len(rows), 128))
    for i, row in enumerate(rows):
        row = np.asarray(row, dtype=float)
        out[i, : row.size] = row
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240304)
