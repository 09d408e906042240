"""Parsing, validation, and indexing of face-descriptor photostreams.

The entry point of the whole toolkit is a line-delimited text stream of
face observations: one JSON record per line, each carrying the wearer id,
the calendar day, an RFC 3339 timestamp with an explicit UTC offset, the
source image id, the face index within that image, and a 128-dimensional
face descriptor. A second, optional stream describes per-day recording
coverage (the span of the day the camera was actually worn), which is the
denominator for time-alone analytics.

Parsing is strict: malformed lines, wrong descriptor lengths, non-finite
values, duplicate (image_id, face_index) keys, and timestamp/day
mismatches are rejecting errors that name the offending line. Nothing is
silently dropped. Descriptors are stored exactly as given; normalization
is a clustering-stage option so the raw inputs stay inspectable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np

DESCRIPTOR_DIM = 128

ObservationKey = tuple[str, str, int]


class IngestError(ValueError):
    """Rejecting parse or validation error, with the source line when known."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class UnknownWearerError(ValueError):
    """Requested wearer id does not occur in the dataset."""


@dataclass(frozen=True, eq=False)
class FaceObservation:
    """One detected face: who recorded it, when, where, and its descriptor."""

    wearer_id: str
    day: date
    timestamp: datetime
    image_id: str
    face_index: int
    descriptor: np.ndarray

    def __post_init__(self):
        desc = np.asarray(self.descriptor, dtype=np.float64)
        if desc.shape != (DESCRIPTOR_DIM,):
            raise ValueError(
                f"descriptor must have length {DESCRIPTOR_DIM}, got {desc.size}"
            )
        if not np.all(np.isfinite(desc)):
            raise ValueError("descriptor contains non-finite values")
        desc.setflags(write=False)
        object.__setattr__(self, "descriptor", desc)
        if self.timestamp.tzinfo is None:
            raise ValueError("timestamp must carry an explicit UTC offset")
        if self.timestamp.date() != self.day:
            raise ValueError(
                f"timestamp date {self.timestamp.date()} does not match day {self.day}"
            )
        if self.face_index < 0:
            raise ValueError("face_index must be non-negative")

    @property
    def key(self) -> ObservationKey:
        return (self.wearer_id, self.image_id, self.face_index)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FaceObservation):
            return NotImplemented
        return (
            self.wearer_id == other.wearer_id
            and self.day == other.day
            and self.timestamp == other.timestamp
            and self.image_id == other.image_id
            and self.face_index == other.face_index
            and np.array_equal(self.descriptor, other.descriptor)
        )


@dataclass(frozen=True)
class DayCoverage:
    """Recorded span of one wearer-day; synthesized spans are flagged."""

    wearer_id: str
    day: date
    start: datetime
    end: datetime
    image_count: int = 0
    synthesized: bool = False

    def __post_init__(self):
        if self.start.tzinfo is None or self.end.tzinfo is None:
            raise ValueError("coverage instants must carry explicit UTC offsets")
        if not self.start < self.end:
            raise ValueError("coverage start must precede end")
        if self.start.date() != self.day or self.end.date() != self.day:
            raise ValueError("coverage span must lie within its day")
        if self.image_count < 0:
            raise ValueError("image_count must be non-negative")

    @property
    def duration_minutes(self) -> float:
        return (self.end - self.start).total_seconds() / 60.0


@dataclass(frozen=True)
class Dataset:
    """Immutable, sorted container of observations plus per-day coverage.

    Observations are sorted by (wearer_id, timestamp, image_id, face_index)
    and every (wearer, day) present in the observations has a coverage
    entry; coverage days with no observations are legitimate (a day worn
    with no faces detected).
    """

    observations: tuple[FaceObservation, ...] = ()
    coverage: Mapping[tuple[str, date], DayCoverage] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.observations)

    def wearers(self) -> tuple[str, ...]:
        seen = {o.wearer_id for o in self.observations}
        seen.update(w for w, _ in self.coverage)
        return tuple(sorted(seen))

    def coverage_for(self, wearer_id: str) -> tuple[DayCoverage, ...]:
        entries = [c for (w, _), c in self.coverage.items() if w == wearer_id]
        return tuple(sorted(entries, key=lambda c: c.day))

    def descriptor_matrix(self) -> np.ndarray:
        if not self.observations:
            return np.empty((0, DESCRIPTOR_DIM))
        return np.stack([o.descriptor for o in self.observations])


def _parse_timestamp(raw: object, line_no: int | None) -> datetime:
    if not isinstance(raw, str):
        raise IngestError(f"timestamp must be an RFC 3339 string, got {raw!r}", line_no)
    text = raw
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        raise IngestError(f"unparseable timestamp {raw!r}", line_no) from None
    if stamp.tzinfo is None:
        raise IngestError(f"timestamp {raw!r} lacks an explicit UTC offset", line_no)
    return stamp


def _parse_day(raw: object, line_no: int | None) -> date:
    if not isinstance(raw, str):
        raise IngestError(f"day must be a YYYY-MM-DD string, got {raw!r}", line_no)
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise IngestError(f"unparseable day {raw!r}", line_no) from None


def _iter_lines(source: Iterable[str] | str | bytes | IO[str]) -> Iterator[tuple[int, str]]:
    """Yield (1-based line number, line) skipping blanks and '#' comments."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = source.splitlines()
    for no, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield no, stripped


def _record(line: str, line_no: int) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IngestError(f"malformed record: {exc.msg}", line_no) from None
    if not isinstance(record, dict):
        raise IngestError("record is not an object", line_no)
    return record


_OBSERVATION_FIELDS = ("wearer_id", "day", "timestamp", "image_id", "face_index", "descriptor")


def _parse_observation_line(line: str, line_no: int) -> FaceObservation:
    record = _record(line, line_no)
    missing = [f for f in _OBSERVATION_FIELDS if f not in record]
    if missing:
        raise IngestError(f"missing fields {missing}", line_no)
    raw_desc = record["descriptor"]
    if not isinstance(raw_desc, list) or len(raw_desc) != DESCRIPTOR_DIM:
        got = len(raw_desc) if isinstance(raw_desc, list) else type(raw_desc).__name__
        raise IngestError(
            f"descriptor must be an array of {DESCRIPTOR_DIM} numbers, got {got}", line_no
        )
    values = []
    for v in raw_desc:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise IngestError(f"non-finite or non-numeric descriptor entry {v!r}", line_no)
        values.append(float(v))
    face_index = record["face_index"]
    if not isinstance(face_index, int) or isinstance(face_index, bool) or face_index < 0:
        raise IngestError(f"face_index must be a non-negative integer, got {face_index!r}", line_no)
    try:
        return FaceObservation(
            wearer_id=str(record["wearer_id"]),
            day=_parse_day(record["day"], line_no),
            timestamp=_parse_timestamp(record["timestamp"], line_no),
            image_id=str(record["image_id"]),
            face_index=face_index,
            descriptor=np.array(values),
        )
    except ValueError as exc:
        raise IngestError(str(exc), line_no) from None


def _sort_key(obs: FaceObservation):
    return (obs.wearer_id, obs.timestamp, obs.image_id, obs.face_index)


def _synthesize_coverage(
    observations: Sequence[FaceObservation],
) -> dict[tuple[str, date], DayCoverage]:
    spans: dict[tuple[str, date], list] = {}
    for obs in observations:
        key = (obs.wearer_id, obs.day)
        entry = spans.setdefault(key, [obs.timestamp, obs.timestamp, set()])
        entry[0] = min(entry[0], obs.timestamp)
        entry[1] = max(entry[1], obs.timestamp)
        entry[2].add(obs.image_id)
    coverage = {}
    for (wearer, day), (first, last, images) in spans.items():
        if first == last:
            # Single-instant day: widen by one second so start < end holds,
            # without letting the span escape the day.
            if (last + timedelta(seconds=1)).date() == day:
                last = last + timedelta(seconds=1)
            else:
                first = first - timedelta(seconds=1)
        coverage[(wearer, day)] = DayCoverage(
            wearer_id=wearer,
            day=day,
            start=first,
            end=last,
            image_count=len(images),
            synthesized=True,
        )
    return coverage


def parse_observations(source: Iterable[str] | str | bytes | IO[str]) -> Dataset:
    """Parse an observation line stream into a validated Dataset.

    Coverage is synthesized as [first, last] observation timestamp for
    every (wearer, day), flagged ``synthesized``. Use :func:`load_dataset`
    to attach an explicit coverage manifest.
    """
    observations: list[FaceObservation] = []
    seen: dict[ObservationKey, int] = {}
    for line_no, line in _iter_lines(source):
        obs = _parse_observation_line(line, line_no)
        if obs.key in seen:
            raise IngestError(
                f"duplicate (image_id, face_index) = ({obs.image_id!r}, {obs.face_index}) "
                f"for wearer {obs.wearer_id!r}, first seen on line {seen[obs.key]}",
                line_no,
            )
        seen[obs.key] = line_no
        observations.append(obs)
    observations.sort(key=_sort_key)
    return Dataset(tuple(observations), _synthesize_coverage(observations))


_COVERAGE_FIELDS = ("wearer_id", "day", "start", "end")


def parse_coverage(source: Iterable[str] | str | bytes | IO[str]) -> tuple[DayCoverage, ...]:
    """Parse a coverage manifest stream (one JSON record per line)."""
    entries: dict[tuple[str, date], DayCoverage] = {}
    for line_no, line in _iter_lines(source):
        record = _record(line, line_no)
        missing = [f for f in _COVERAGE_FIELDS if f not in record]
        if missing:
            raise IngestError(f"missing fields {missing}", line_no)
        image_count = record.get("image_count", 0)
        if not isinstance(image_count, int) or isinstance(image_count, bool) or image_count < 0:
            raise IngestError(f"image_count must be a non-negative integer", line_no)
        try:
            entry = DayCoverage(
                wearer_id=str(record["wearer_id"]),
                day=_parse_day(record["day"], line_no),
                start=_parse_timestamp(record["start"], line_no),
                end=_parse_timestamp(record["end"], line_no),
                image_count=image_count,
            )
        except ValueError as exc:
            raise IngestError(str(exc), line_no) from None
        key = (entry.wearer_id, entry.day)
        if key in entries:
            raise IngestError(f"duplicate coverage entry for {key}", line_no)
        entries[key] = entry
    return tuple(entries.values())


def load_dataset(
    observation_source: Iterable[str] | str | bytes | IO[str],
    coverage_source: Iterable[str] | str | bytes | IO[str] | None = None,
) -> Dataset:
    """Parse observations plus an optional coverage manifest into a Dataset.

    Explicit manifest entries replace synthesized spans and must contain
    every observation of their (wearer, day); violations reject the load.
    """
    dataset = parse_observations(observation_source)
    if coverage_source is None:
        return dataset
    coverage = dict(dataset.coverage)
    for entry in parse_coverage(coverage_source):
        coverage[(entry.wearer_id, entry.day)] = entry
    for obs in dataset.observations:
        span = coverage[(obs.wearer_id, obs.day)]
        if not (span.start <= obs.timestamp <= span.end):
            raise IngestError(
                f"observation {obs.image_id!r} at {obs.timestamp.isoformat()} lies outside "
                f"coverage [{span.start.isoformat()}, {span.end.isoformat()}] "
                f"for wearer {obs.wearer_id!r} day {obs.day}"
            )
    return Dataset(dataset.observations, coverage)


def serialize_observations(dataset: Dataset) -> str:
    """Emit the observation line format; inverse of :func:`parse_observations`."""
    lines = []
    for obs in dataset.observations:
        lines.append(
            json.dumps(
                {
                    "wearer_id": obs.wearer_id,
                    "day": obs.day.isoformat(),
                    "timestamp": obs.timestamp.isoformat(),
                    "image_id": obs.image_id,
                    "face_index": obs.face_index,
                    "descriptor": [float(v) for v in obs.descriptor],
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def serialize_coverage(dataset: Dataset, include_synthesized: bool = False) -> str:
    """Emit the coverage manifest format for the dataset's explicit entries.

    Synthesized spans are re-derivable from the observations, so they are
    omitted unless explicitly requested; this keeps parse/serialize a true
    round trip.
    """
    lines = []
    for key in sorted(dataset.coverage, key=lambda k: (k[0], k[1])):
        entry = dataset.coverage[key]
        if entry.synthesized and not include_synthesized:
            continue
        lines.append(
            json.dumps(
                {
                    "wearer_id": entry.wearer_id,
                    "day": entry.day.isoformat(),
                    "start": entry.start.isoformat(),
                    "end": entry.end.isoformat(),
                    "image_count": entry.image_count,
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def slice_dataset(
    dataset: Dataset,
    wearer_id: str,
    day_range: tuple[date, date] | None = None,
) -> Dataset:
    """Sub-dataset for one wearer, optionally restricted to [first, last] days."""
    if wearer_id not in dataset.wearers():
        raise UnknownWearerError(f"unknown wearer id {wearer_id!r}")

    def in_range(day: date) -> bool:
        return day_range is None or day_range[0] <= day <= day_range[1]

    observations = tuple(
        o for o in dataset.observations if o.wearer_id == wearer_id and in_range(o.day)
    )
    coverage = {
        key: cov
        for key, cov in dataset.coverage.items()
        if key[0] == wearer_id and in_range(key[1])
    }
    return Dataset(observations, coverage)
