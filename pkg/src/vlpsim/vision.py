"""Receiver-side image processing: blob detection, stripe profiles, UID recovery.

A modulated lamp appears as a stack of horizontal stripes.  Detection
bridges the dark stripes with a tall vertical closing window so each lamp
becomes one blob, then measures centroid and equivalent diameter on the
pre-closing lit pixels (dark chips hide 10/21 of the disk, so modulated
areas are scaled by 21/11 before converting to a diameter).

Close blobs carry two whole beacon frames and decode from a single image
(``decode_roi``).  Distant blobs only show a few chips per frame; the
``StripeAccumulator`` folds band samples from consecutive frames onto one
beacon period, searching the period length itself, so decoding stays blind
to the transmitter's chip rate.  ``StripeTracker`` ties blobs together
across frames and caches the UID once recovered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from skimage.measure import find_contours

from .occ_link import (
    FRAME_CHIPS,
    ON_CHIPS_PER_FRAME,
    DecodeResult,
    DegenerateProfile,
    InvalidManchester,
    NoSync,
    decode_chips,
    estimate_chip_rows,
)
from .rs_camera import RsFrame

# Longest dark run is 3 chips; at 1 kHz under the default 50 us row time a
# chip spans 20 rows, so the closing window must bridge 60-row gaps.
DEFAULT_CLOSING_ROWS = 121
MIN_COMPONENT_PIXELS = 100
DUTY_COMPENSATION = FRAME_CHIPS / ON_CHIPS_PER_FRAME  # 21/11
PROFILE_BAND_HALFWIDTH = 2  # 5-pixel column band


class TooSmall(Exception):
    """Blob bounding box has fewer than 4 rows."""


class NeedMoreRows(Exception):
    """Blob shows fewer than two beacon frames; fuse more frames and retry."""

    def __init__(self, chips_seen: int):
        super().__init__(f"only {chips_seen} chips visible, need 42")
        self.chips_seen = chips_seen


@dataclass(frozen=True)
class RoiDetection:
    bbox: tuple[int, int, int, int]       # (u_min, v_min, u_max, v_max), inclusive
    centroid: tuple[float, float]         # sub-pixel (u, v)
    contour: np.ndarray                   # ordered boundary points, (n, 2) as (u, v)
    equiv_diameter: float                 # px, duty-compensated for modulated blobs
    pixel_count: int                      # pixels in the closed component
    mask: np.ndarray = field(repr=False, default=None)  # closed component, bbox-local
    modulated: bool = True
    lit_pixel_count: int = 0
    fit_diameter: float | None = None     # disk diameter from the chord fit


@dataclass(frozen=True)
class StripeProfile:
    samples: np.ndarray                   # per-row mean intensity down the blob
    row_range: tuple[int, int]            # (v_min, v_max), inclusive

    def __post_init__(self):
        if len(self.samples) != self.row_range[1] - self.row_range[0] + 1:
            raise ValueError("sample count must match row range")
        if len(self.samples) < 4:
            raise ValueError("profile needs at least 4 rows")


def _chord_fit_center(lit_comp: np.ndarray) -> tuple[float, float, float] | None:
    """Disk center and radius from per-row lit chords; immune to stripe phase.

    Every lit row samples the disk outline regardless of which chips are on:
    the chord halfwidth obeys h^2 = r^2 - (v - vc)^2, so h^2 + v^2 is linear
    in v with slope 2*vc.  The column center is the mean chord midpoint.
    Returns (u, v, radius) or None when the outline is not circular.
    """
    vs, hs2, mids = [], [], []
    for i in range(lit_comp.shape[0]):
        cols = np.nonzero(lit_comp[i])[0]
        if cols.size < 5:
            continue
        extent = cols.max() - cols.min() + 1
        if cols.size < 0.5 * extent:  # sparse noise row, not a chord
            continue
        vs.append(float(i))
        hs2.append(((cols.max() - cols.min()) / 2.0) ** 2)
        mids.append((cols.max() + cols.min()) / 2.0)
    if len(vs) < 8:
        return None
    v = np.asarray(vs)
    target = np.asarray(hs2) + v * v
    design = np.column_stack((np.ones_like(v), v))
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    scale = max(float(np.max(hs2)), 1.0)
    if math.sqrt(float(np.mean(resid * resid))) > 0.08 * scale:
        return None  # not a circular outline (square lamp, merged blobs, ...)
    vc = float(coef[1] / 2.0)
    r_sq = float(coef[0]) + vc * vc
    if r_sq <= 0:
        return None
    return float(np.mean(mids)), vc, math.sqrt(r_sq)


def detect_rois(
    frame: RsFrame,
    closing_rows: int = DEFAULT_CLOSING_ROWS,
    min_pixels: int = MIN_COMPONENT_PIXELS,
) -> list[RoiDetection]:
    """Find lamp blobs: threshold, vertical closing, 8-connected labeling."""
    img = frame.pixels
    ambient = float(np.median(img))
    peak = float(img.max())
    if peak <= ambient:
        return []
    lit = img > ambient + 0.25 * (peak - ambient)
    # Vertical closing via running max then min; the erosion treats the
    # outside as lit so blobs touching the border are not eaten back.
    dil = ndimage.maximum_filter1d(lit.astype(np.uint8), closing_rows, axis=0,
                                   mode="constant", cval=0)
    closed = ndimage.minimum_filter1d(dil, closing_rows, axis=0,
                                      mode="constant", cval=1).astype(bool)
    labels, n = ndimage.label(closed, structure=np.ones((3, 3), dtype=int))
    rois = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        comp = labels[sl] == idx
        count = int(comp.sum())
        if count < min_pixels:
            continue
        sub = img[sl]
        weights = np.where(comp, sub, 0.0)
        total = float(weights.sum())
        if total <= 0:
            continue
        vs, us = np.mgrid[sl[0], sl[1]]
        cu = float((weights * us).sum() / total)
        cv = float((weights * vs).sum() / total)
        lit_comp = lit[sl] & comp
        lit_count = int(lit_comp.sum())
        modulated = lit_count < 0.8 * count
        # The intensity-weighted mean wobbles with stripe phase (only the lit
        # rows carry weight); the chord fit tracks the disk outline instead
        # and also recenters disks whose rim chips are dark.  It rejects
        # non-circular outlines itself, leaving the weighted mean in place.
        fit = _chord_fit_center(lit_comp)
        fit_diameter = None
        if fit is not None:
            cu = min(max(fit[0] + sl[1].start, float(sl[1].start)),
                     float(sl[1].stop - 1))
            cv = min(max(fit[1] + sl[0].start, float(sl[0].start)),
                     float(sl[0].stop - 1))
            fit_diameter = 2.0 * fit[2]
        area = lit_count * (DUTY_COMPENSATION if modulated else 1.0)
        equiv = 2.0 * math.sqrt(area / math.pi)
        padded = np.pad(comp, 1).astype(float)
        contours = find_contours(padded, 0.5)
        boundary = max(contours, key=len) if contours else np.zeros((0, 2))
        # from padded (row, col) back to image-frame (u, v)
        contour = np.column_stack(
            (boundary[:, 1] - 1 + sl[1].start, boundary[:, 0] - 1 + sl[0].start)
        )
        rois.append(
            RoiDetection(
                bbox=(sl[1].start, sl[0].start, sl[1].stop - 1, sl[0].stop - 1),
                centroid=(cu, cv),
                contour=contour,
                equiv_diameter=equiv,
                pixel_count=count,
                mask=comp,
                modulated=modulated,
                lit_pixel_count=lit_count,
                fit_diameter=fit_diameter,
            )
        )
    return rois


def extract_profile(frame: RsFrame, roi: RoiDetection,
                    band_halfwidth: int = PROFILE_BAND_HALFWIDTH) -> StripeProfile:
    """Per-row mean intensity over the column band through the blob centroid."""
    u_min, v_min, u_max, v_max = roi.bbox
    if v_max - v_min + 1 < 4:
        raise TooSmall(f"blob spans {v_max - v_min + 1} rows")
    cu = int(round(roi.centroid[0]))
    c0 = max(u_min, cu - band_halfwidth)
    c1 = min(u_max, cu + band_halfwidth)
    img = frame.pixels
    samples = np.empty(v_max - v_min + 1)
    for i, v in enumerate(range(v_min, v_max + 1)):
        row_mask = roi.mask[i, c0 - u_min:c1 - u_min + 1]
        band = img[v, c0:c1 + 1][row_mask]
        if band.size == 0:
            band = img[v, u_min:u_max + 1][roi.mask[i]]
        samples[i] = band.mean()
    return StripeProfile(samples=samples, row_range=(v_min, v_max))


def _run_lengths(binary: np.ndarray) -> tuple[list[int], list[int]]:
    """Run-length encode a boolean sequence into (values, lengths)."""
    values, lengths = [], []
    current = bool(binary[0])
    count = 1
    for b in binary[1:]:
        if bool(b) == current:
            count += 1
        else:
            values.append(int(current))
            lengths.append(count)
            current = bool(b)
            count = 1
    values.append(int(current))
    lengths.append(count)
    return values, lengths


def decode_roi(profile: StripeProfile) -> DecodeResult:
    """Single-frame UID recovery from a stripe profile.

    Binarizes at the profile mid-level, quantizes run lengths to chips with
    a self-estimated rows-per-chip, and hands the chip stream to the link
    decoder.  Blobs shorter than two beacon frames raise NeedMoreRows.
    """
    x = profile.samples
    lo, hi = float(x.min()), float(x.max())
    if hi - lo < 0.02:
        raise DegenerateProfile("no modulation contrast in profile")
    values, lengths = _run_lengths(x > (lo + hi) / 2.0)
    if len(lengths) < 4:
        raise DegenerateProfile(f"{len(lengths)} runs in profile")
    # up to two runs at each end are rim-truncated or background slivers
    # (blobs pushed to the image border); estimate chip width from the rest
    if len(lengths) >= 10:
        interior = lengths[2:-2]
    elif len(lengths) >= 6:
        interior = lengths[1:-1]
    else:
        interior = lengths
    w = estimate_chip_rows(interior)
    chips: list[int] = []
    for val, ln in zip(values, lengths):
        k = int(math.floor(ln / w + 0.5))
        chips.extend([val] * k)
    if len(chips) < 2 * FRAME_CHIPS:
        raise NeedMoreRows(len(chips))
    return decode_chips(chips)


# ------------------------------------------------------- multi-frame fusion

MIN_ROWS_PER_CHIP = 3.0
MAX_ROWS_PER_CHIP = 25.0


@dataclass
class _Chunk:
    vrow0: float          # virtual row index of the first sample (t_start/t_row + v)
    values: np.ndarray


class StripeAccumulator:
    """Folds stripe samples from many frames onto one unknown beacon period.

    Image row v of a frame starting at t_start samples the waveform at
    virtual row t_start/t_row + v.  The transmitted pattern is periodic in
    virtual rows with period P = 21 * rows_per_chip; P is unknown, so decode
    searches it by minimizing the within-bin variance of the folded samples
    (epoch folding).  Works with any transmit chip rate in the supported
    rows-per-chip range and needs no configuration per rate.
    """

    def __init__(self,
                 min_rows_per_chip: float = MIN_ROWS_PER_CHIP,
                 max_rows_per_chip: float = MAX_ROWS_PER_CHIP,
                 max_chunks: int = 90):
        self.p_lo = FRAME_CHIPS * min_rows_per_chip
        self.p_hi = FRAME_CHIPS * max_rows_per_chip
        self.max_chunks = max_chunks
        self._chunks: list[_Chunk] = []
        self._cached_period: float | None = None
        self._rows_at_last_search = 0

    def add_profile(self, virtual_row0: float, values: np.ndarray) -> None:
        if len(values) == 0:
            return
        self._chunks.append(_Chunk(float(virtual_row0), np.asarray(values, dtype=float)))
        if len(self._chunks) > self.max_chunks:
            self._chunks.pop(0)

    @property
    def total_rows(self) -> int:
        return sum(len(c.values) for c in self._chunks)

    def _concat(self, chunks: list[_Chunk]) -> tuple[np.ndarray, np.ndarray]:
        vr = np.concatenate([c.vrow0 + np.arange(len(c.values)) for c in chunks])
        x = np.concatenate([c.values for c in chunks])
        return vr, x

    def _chip_width_hints(self) -> list[float]:
        """Per-chunk rows-per-chip estimates where a chunk has enough runs."""
        hints = []
        for c in self._chunks:
            x = c.values
            if x.max() - x.min() < 1e-6:
                continue
            thr = (x.min() + x.max()) / 2.0
            _, lengths = _run_lengths(x > thr)
            if len(lengths) < 8:
                continue
            try:
                hints.append(estimate_chip_rows(lengths[1:-1]))
            except DegenerateProfile:
                continue
        return hints

    @staticmethod
    def _fold_scores(vr: np.ndarray, x: np.ndarray, periods: np.ndarray,
                     nb_max: int) -> tuple[np.ndarray, np.ndarray]:
        """Within-bin SSE and pooled degrees of freedom per candidate period."""
        sse = np.empty(len(periods))
        dof = np.empty(len(periods))
        block = max(1, int(2_000_000 // max(1, len(x))))
        x2 = x * x
        for i0 in range(0, len(periods), block):
            ps = periods[i0:i0 + block, None]
            idx = np.floor(vr[None, :] % ps).astype(np.int64)
            idx += np.arange(len(ps))[:, None] * nb_max
            nbins = len(ps) * nb_max
            counts = np.bincount(idx.ravel(), minlength=nbins).reshape(len(ps), nb_max)
            sums = np.bincount(idx.ravel(), weights=np.broadcast_to(x, idx.shape).ravel(),
                               minlength=nbins).reshape(len(ps), nb_max)
            sumsq = np.bincount(idx.ravel(), weights=np.broadcast_to(x2, idx.shape).ravel(),
                                minlength=nbins).reshape(len(ps), nb_max)
            with np.errstate(divide="ignore", invalid="ignore"):
                contrib = sumsq - np.where(counts > 0, sums * sums / counts, 0.0)
            sse[i0:i0 + len(ps)] = contrib.sum(axis=1)
            dof[i0:i0 + len(ps)] = np.where(counts > 1, counts - 1, 0).sum(axis=1)
        return sse, dof

    def _scored(self, vr, x, periods, nb_max, min_dof):
        """Smoothed pooled within-bin variance per candidate period.

        The pseudo-dof prior at the global variance keeps candidates with a
        handful of luckily-agreeing collisions from outranking a well-covered
        fold; without it sparse aliases dominate the shortlist.
        """
        sse, dof = self._fold_scores(vr, x, periods, nb_max)
        prior = 32.0
        v_global = float(np.var(x))
        with np.errstate(invalid="ignore", divide="ignore"):
            score = (sse + prior * v_global) / (dof + prior)
            return np.where(dof >= min_dof, score, np.inf)

    @staticmethod
    def _plateau_only(vr: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Drop samples near the mid-level: gray transition rows depend on
        sub-row phase, so they disagree across frames even at the true period
        and would dilute the fold score."""
        lo, hi = float(x.min()), float(x.max())
        keep = np.abs(x - (lo + hi) / 2.0) > 0.3 * (hi - lo)
        if keep.sum() < 32:
            return vr, x
        return vr[keep], x[keep]

    def _search_period(self) -> float | None:
        """Multi-level zoom: double the folded time span each level, keep a
        shrinking shortlist of period candidates, refine the final survivors.

        Aliases can match a short record by luck, so early levels keep
        thousands of candidates; every doubling of coherent span multiplies
        the collisions an alias must survive, and the true period only has
        to stay inside the shortlist, never to win early.
        """
        nb_max = int(math.ceil(self.p_hi)) + 1
        counts = [min(7, len(self._chunks))]
        while counts[-1] < len(self._chunks):
            counts.append(min(len(self._chunks), counts[-1] * 2))
        keeps = [2000, 600, 200, 60, 20, 8][: len(counts)]
        keeps[-1] = 8

        hints = self._chip_width_hints()
        if hints:
            w0 = float(np.median(hints))
            lo = max(self.p_lo, FRAME_CHIPS * w0 * 0.93)
            hi = min(self.p_hi, FRAME_CHIPS * w0 * 1.07)
        else:
            lo, hi = self.p_lo, self.p_hi

        cand = None
        step = None
        vr = x = None
        span = 0.0
        for n_chunks, keep in zip(counts, keeps):
            vr, x = self._plateau_only(*self._concat(self._chunks[:n_chunks]))
            span = float(vr.max() - vr.min())
            if span <= 0:
                return None
            level_step = max(0.35 / span, 1e-7)
            if cand is None:
                n = int(math.log(hi / lo) / math.log1p(level_step)) + 1
                cand = lo * (1.0 + level_step) ** np.arange(n)
            else:
                offsets = np.array([-step / 3.0, 0.0, step / 3.0])
                cand = (cand[:, None] * (1.0 + offsets[None, :])).ravel()
                cand = cand[(cand >= self.p_lo) & (cand <= self.p_hi)]
            step = level_step
            scores = self._scored(vr, x, cand, nb_max, min_dof=6)
            if not np.isfinite(scores).any():
                return None
            order = np.argsort(scores)[:keep]
            cand = cand[order[np.isfinite(scores[order])]]
            if len(cand) == 0:
                return None

        best_p, best_score = None, np.inf
        for p0 in cand:
            p_c, score_c = self._refine(vr, x, float(p0), float(p0) * step,
                                        nb_max, span)
            if score_c < best_score:
                best_score, best_p = score_c, p_c
        if best_p is None:
            return None
        # a fold at any integer multiple of the true period is just as
        # coherent; prefer the smallest period that scores comparably
        for div in (3, 2):
            cand_p = best_p / div
            if cand_p < self.p_lo:
                continue
            p_c, score_c = self._refine(vr, x, cand_p, cand_p * 1e-3, nb_max, span)
            if score_c <= 2.0 * best_score + 1e-9:
                best_p, best_score = p_c, score_c
        return best_p

    def _refine(self, vr, x, p0: float, width: float, nb_max: int,
                span: float) -> tuple[float, float]:
        """Shrinking local grid search around one period candidate."""
        p_c, score_c = p0, np.inf
        target = max(0.3 / span * p0, 1e-7)
        while True:
            local = np.linspace(p_c - width, p_c + width, 9)
            local = local[(local >= self.p_lo) & (local <= self.p_hi)]
            if len(local) == 0:
                break
            ns = self._scored(vr, x, local, nb_max, min_dof=16)
            j = int(np.argmin(ns))
            p_c, score_c = float(local[j]), float(ns[j])
            if width <= target:
                break
            width /= 3.0
        return p_c, score_c

    @staticmethod
    def _fill_gaps(binary: np.ndarray, filled: np.ndarray, chip_rows: float) -> bool:
        """Fill cyclic coverage gaps in place; False if any gap is unsafe.

        A gap no longer than one chip flanked by equal values can hide at
        most one flipped chip, and a single flipped chip can never decode as
        a clean frame (it always breaks a Manchester pair), so filling with
        the flank value is safe: a wrong guess is rejected downstream.
        """
        nb = len(filled)
        max_gap = max(2, int(math.floor(chip_rows)))
        missing = np.nonzero(~filled)[0]
        runs: list[list[int]] = []
        for b in missing:
            if runs and (b - runs[-1][-1]) % nb == 1:
                runs[-1].append(b)
            else:
                runs.append([b])
        # wrap-around: merge last run into first
        if len(runs) > 1 and (runs[0][0] - runs[-1][-1]) % nb == 1:
            runs[0] = runs.pop() + runs[0]
        for run in runs:
            if len(run) > max_gap:
                return False
            before_i = (run[0] - 1) % nb
            after_i = (run[-1] + 1) % nb
            if not filled[before_i] or not filled[after_i]:
                return False
            if binary[before_i] != binary[after_i]:
                return False
            binary[run] = binary[before_i]
        return True

    def try_decode(self) -> DecodeResult | None:
        """Attempt a decode; None means keep accumulating frames.

        A found period is cached: later attempts just re-fold with it, and
        the expensive search only reruns once the record has grown enough
        to overrule a stale or aliased estimate.
        """
        if self.total_rows < 500 and not self._chip_width_hints():
            return None
        if self.total_rows < int(2.2 * self.p_lo):
            return None
        if self._cached_period is not None:
            result = self._decode_at(self._cached_period)
            if result is not None:
                return result
        if self.total_rows < int(1.5 * self._rows_at_last_search):
            return None
        self._rows_at_last_search = self.total_rows
        period = self._search_period()
        if period is None:
            return None
        self._cached_period = period
        return self._decode_at(period)

    def _decode_at(self, period: float) -> DecodeResult | None:
        vr, x = self._concat(self._chunks)
        nb = int(math.floor(period))
        idx = np.minimum((np.floor((vr % period) / period * nb)).astype(int), nb - 1)
        counts = np.bincount(idx, minlength=nb)
        filled = counts > 0
        if not filled.any():
            return None
        means = np.full(nb, np.nan)
        means[filled] = np.bincount(idx, weights=x, minlength=nb)[filled] / counts[filled]
        thr = (np.nanmin(means) + np.nanmax(means)) / 2.0
        binary = means > thr
        if not filled.all():
            if not self._fill_gaps(binary, filled, period / FRAME_CHIPS):
                return None
        if binary.all() or not binary.any():
            return None
        # rotate so the cyclic profile starts on a transition, then quantize;
        # the fold may have locked onto a multiple of the beacon period, so
        # try one, two and three frames per fold
        start = int(np.argmax(binary != np.roll(binary, 1)))
        rotated = np.roll(binary, -start)
        values, lengths = _run_lengths(rotated)
        for frames_per_fold in (1, 2, 3):
            w = period / (FRAME_CHIPS * frames_per_fold)
            if w < 2.0:
                break
            chips: list[int] = []
            for val, ln in zip(values, lengths):
                k = int(math.floor(ln / w + 0.5))
                chips.extend([val] * max(k, 0))
            if len(chips) != FRAME_CHIPS * frames_per_fold:
                continue
            try:
                return decode_chips(chips * 2 if frames_per_fold == 1 else chips)
            except (NoSync, InvalidManchester):
                continue
        return None


# ------------------------------------------------------------ blob tracking

@dataclass
class TrackObservation:
    track_id: int
    uid: int | None
    centroid: tuple[float, float]
    equiv_diameter_px: float


@dataclass
class _Track:
    track_id: int
    centroid: tuple[float, float]
    equiv_diameter: float
    accumulator: StripeAccumulator
    uid: int | None = None
    last_seen: int = 0
    frames_since_attempt: int = 0
    diameters: list = field(default_factory=list)  # recent values; median smooths
                                                   # the per-frame duty noise
    fit_diameters: list = field(default_factory=list)

    def smoothed_diameter(self) -> float:
        if self.fit_diameters:
            return float(np.median(self.fit_diameters))
        if not self.diameters:
            return self.equiv_diameter
        return float(np.median(self.diameters))


class StripeTracker:
    """Associates blobs across frames and recovers one UID per track.

    Big blobs decode from a single frame; small ones feed the folding
    accumulator.  A decoded UID sticks to the track, so later frames only
    need the blob centroid to produce an observation.
    """

    def __init__(self, attempt_interval: int = 6, max_unseen: int = 15,
                 match_radius: float = 40.0):
        self.attempt_interval = attempt_interval
        self.max_unseen = max_unseen
        self.match_radius = match_radius
        self._tracks: list[_Track] = []
        self._next_id = 0
        self._frame_index = 0

    def update(self, frame: RsFrame, rois: list[RoiDetection]) -> list[TrackObservation]:
        self._frame_index += 1
        t_row = frame.intrinsics.t_row
        vrow_base = frame.t_start / t_row
        unmatched = list(rois)
        for track in self._tracks:
            best, best_d = None, None
            for roi in unmatched:
                d = math.dist(track.centroid, roi.centroid)
                if d <= max(self.match_radius, track.equiv_diameter) and (
                    best is None or d < best_d
                ):
                    best, best_d = roi, d
            if best is not None:
                unmatched.remove(best)
                self._feed(track, frame, best, vrow_base)
        for roi in unmatched:
            track = _Track(
                track_id=self._next_id,
                centroid=roi.centroid,
                equiv_diameter=roi.equiv_diameter,
                accumulator=StripeAccumulator(),
                last_seen=self._frame_index,
            )
            self._next_id += 1
            self._tracks.append(track)
            self._feed(track, frame, roi, vrow_base)
        self._tracks = [
            t for t in self._tracks
            if self._frame_index - t.last_seen <= self.max_unseen
        ]
        return [
            TrackObservation(t.track_id, t.uid, t.centroid, t.smoothed_diameter())
            for t in self._tracks
            if t.last_seen == self._frame_index
        ]

    def _feed(self, track: _Track, frame: RsFrame, roi: RoiDetection,
              vrow_base: float) -> None:
        track.centroid = roi.centroid
        track.equiv_diameter = roi.equiv_diameter
        track.diameters.append(roi.equiv_diameter)
        del track.diameters[:-15]
        if roi.fit_diameter is not None:
            track.fit_diameters.append(roi.fit_diameter)
            del track.fit_diameters[:-15]
        track.last_seen = self._frame_index
        if track.uid is not None:
            return
        try:
            result = decode_roi(extract_profile(frame, roi))
            if result.confidence == 1.0:
                track.uid = result.uid
                return
        except (TooSmall, NeedMoreRows, DegenerateProfile, NoSync, InvalidManchester):
            pass
        self._accumulate(track, frame, roi, vrow_base)
        track.frames_since_attempt += 1
        if track.frames_since_attempt >= self.attempt_interval:
            track.frames_since_attempt = 0
            result = track.accumulator.try_decode()
            if result is not None and result.confidence == 1.0:
                track.uid = result.uid

    @staticmethod
    def _interior_rows(centroid_v: float, diameter: float,
                       height: int) -> tuple[int, int] | None:
        # band half-width is 2.2 px, so rows within 0.49*d of the center
        # still have their whole column band on the disk
        half = 0.49 * diameter
        v0 = max(0, int(math.ceil(centroid_v - half)))
        v1 = min(height - 1, int(math.floor(centroid_v + half)))
        if v1 - v0 + 1 < 4:
            return None
        return v0, v1

    def _accumulate(self, track: _Track, frame: RsFrame, roi: RoiDetection,
                    vrow_base: float) -> None:
        rows = self._interior_rows(roi.centroid[1], track.smoothed_diameter(),
                                   frame.intrinsics.height)
        if rows is None:
            return
        v0, v1 = rows
        cu = int(round(roi.centroid[0]))
        c0 = max(0, cu - PROFILE_BAND_HALFWIDTH)
        c1 = min(frame.intrinsics.width - 1, cu + PROFILE_BAND_HALFWIDTH)
        band = frame.pixels[v0:v1 + 1, c0:c1 + 1].mean(axis=1)
        track.accumulator.add_profile(vrow_base + v0, band)
