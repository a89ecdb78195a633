"""Peak file ingestion, width normalization, and cross-replicate pairing."""

from __future__ import annotations

import gzip
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError, EmptyFile, ParseError

__all__ = ["Peak", "PairedPeaks", "parse_peak_file", "truncate_to_width",
           "pair_peaks", "overlap_length"]

NARROWPEAK_SCORE_COLUMNS = {"score": 4, "signalValue": 6, "pValue": 7,
                            "qValue": 8}
DEFAULT_WIDTH = 40


@dataclass(frozen=True)
class Peak:
    """Half-open genomic interval [start, end) with an optional summit."""

    chrom: str
    start: int
    end: int
    score: float
    summit_offset: int | None = None
    source_line: int = 0

    def __post_init__(self):
        if self.start < 0 or self.start >= self.end:
            raise DomainError(
                f"invalid interval [{self.start}, {self.end})")
        if self.summit_offset is not None and not (
                0 <= self.summit_offset < self.end - self.start):
            raise DomainError(
                f"summit offset {self.summit_offset} outside "
                f"[0, {self.end - self.start})")

    @property
    def center(self) -> int:
        if self.summit_offset is not None:
            return self.start + self.summit_offset
        return (self.start + self.end) // 2


@dataclass(frozen=True)
class PairedPeaks:
    """One-to-one matches between two replicate peak lists."""

    matches: tuple  # (index_rep1, index_rep2, score1, score2)
    unmatched1: int
    unmatched2: int


def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    return open(path, "rt")


def parse_peak_file(path, format: str = "narrowPeak",
                    score_column: str = "signalValue") -> list[Peak]:
    """Read a narrowPeak (10 columns) or bed-score (4 columns) file.

    Malformed lines raise ParseError with their line number; comment and
    track lines are skipped.
    """
    if format == "narrowPeak":
        n_cols = 10
        score_idx = NARROWPEAK_SCORE_COLUMNS.get(score_column)
        if score_idx is None:
            raise DomainError(f"unknown score column {score_column!r}")
    elif format == "bed-score":
        n_cols = 4
        score_idx = 3
    else:
        raise DomainError(f"unknown peak format {format!r}")

    peaks: list[Peak] = []
    with _open_text(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith(("#", "track", "browser")):
                continue
            fields = line.split("\t")
            if len(fields) < n_cols:
                raise ParseError(lineno, len(fields) + 1,
                                 f"expected {n_cols} columns, got {len(fields)}")
            try:
                start = int(fields[1])
                end = int(fields[2])
            except ValueError as exc:
                raise ParseError(lineno, 2, f"bad coordinates: {exc}") from None
            if start < 0:
                raise ParseError(lineno, 2, f"negative start {start}")
            if start >= end:
                raise ParseError(lineno, 3, f"start {start} >= end {end}")
            try:
                score = float(fields[score_idx])
            except ValueError:
                raise ParseError(lineno, score_idx + 1,
                                 f"bad score {fields[score_idx]!r}") from None
            summit = None
            if format == "narrowPeak":
                try:
                    raw_summit = int(fields[9])
                except ValueError:
                    raise ParseError(lineno, 10,
                                     f"bad summit {fields[9]!r}") from None
                if raw_summit >= 0:
                    if raw_summit >= end - start:
                        raise ParseError(lineno, 10,
                                         f"summit {raw_summit} outside peak")
                    summit = raw_summit
            peaks.append(Peak(chrom=fields[0], start=start, end=end,
                              score=score, summit_offset=summit,
                              source_line=lineno))
    if not peaks:
        raise EmptyFile(f"no peaks parsed from {path}")
    return peaks


def truncate_to_width(peaks, width: int = DEFAULT_WIDTH) -> list[Peak]:
    """Narrow every peak wider than `width` to a window of that width centered
    at its summit (interval midpoint when no summit is reported), clipped at 0.

    Peaks already at or below the width are returned unchanged.
    """
    if width <= 0:
        raise DomainError(f"width must be > 0, got {width}")
    out = []
    for p in peaks:
        if p.end - p.start <= width:
            out.append(p)
            continue
        center = p.center
        start = max(center - width // 2, 0)
        out.append(Peak(chrom=p.chrom, start=start, end=start + width,
                        score=p.score, summit_offset=None,
                        source_line=p.source_line))
    return out


def overlap_length(a: Peak, b: Peak) -> int:
    if a.chrom != b.chrom:
        return 0
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def pair_peaks(rep1, rep2) -> PairedPeaks:
    """One-to-one pairing of peaks whose coverage regions overlap by >= 1 bp.

    Within each chromosome the assignment maximizes the number of matches and,
    among those, the total overlap length; peaks without a partner are counted
    and dropped.  Matches are reported in canonical (chromosome, rep1 start)
    order.
    """
    by_chrom: dict[str, tuple[list, list]] = {}
    for idx, p in enumerate(rep1):
        by_chrom.setdefault(p.chrom, ([], []))[0].append(idx)
    for idx, p in enumerate(rep2):
        by_chrom.setdefault(p.chrom, ([], []))[1].append(idx)

    matches = []
    for chrom in sorted(by_chrom):
        idx1, idx2 = by_chrom[chrom]
        if not idx1 or not idx2:
            continue
        matches.extend(_pair_chromosome(rep1, rep2, idx1, idx2))

    matches.sort(key=lambda m: (rep1[m[0]].chrom, rep1[m[0]].start,
                                rep2[m[1]].start))
    return PairedPeaks(
        matches=tuple(matches),
        unmatched1=len(rep1) - len(matches),
        unmatched2=len(rep2) - len(matches),
    )


def _pair_chromosome(rep1, rep2, idx1, idx2):
    # cardinality-first optimal assignment: each feasible edge gets a bonus
    # larger than any possible total overlap, so maximizing total weight
    # maximizes the match count first and the summed overlap second
    weights = np.zeros((len(idx1), len(idx2)))
    bonus = 1.0
    for a, i in enumerate(idx1):
        for b, j in enumerate(idx2):
            ov = overlap_length(rep1[i], rep2[j])
            if ov >= 1:
                weights[a, b] = ov
                bonus += ov
    feasible = weights >= 1
    rows, cols = linear_sum_assignment(weights + bonus * feasible,
                                       maximize=True)
    out = []
    for a, b in zip(rows, cols):
        if feasible[a, b]:
            i, j = idx1[a], idx2[b]
            out.append((i, j, rep1[i].score, rep2[j].score))
    return out
