"""Image features, document grouping and membership-map rendering.

Planes are plain 2-D float arrays indexed ``[row, col]``. :class:`ImagePlane`
attaches a channel label for file I/O.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .exceptions import DomainError
from .model import Corpus, Document


@dataclass(frozen=True)
class ImagePlane:
    data: np.ndarray
    label: str = "gray"

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise DomainError("an image plane must be a non-empty 2-D array")
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"plane {self.label!r} has non-finite pixels")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def _plane(img) -> np.ndarray:
    return img.data if isinstance(img, ImagePlane) else ImagePlane(img).data


def _finite(out: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(out)):
        raise DomainError(f"{what} produced non-finite values")
    return out


# ---------------------------------------------------------------------------
# windowed mean and entropy


@dataclass(frozen=True)
class FeatureConfig:
    window: int = 21
    intensity_scale: float = 10.0
    entropy_bins: int = 256

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise DomainError("window size must be an odd positive integer")
        if self.entropy_bins < 1:
            raise DomainError("entropy_bins must be positive")


def _bin_index(values: np.ndarray, bins: int, value_range=None) -> np.ndarray:
    lo, hi = (values.min(), values.max()) if value_range is None else value_range
    if hi <= lo:
        return np.zeros(values.shape, dtype=np.int64)
    idx = np.floor((values - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def histogram_entropy(values, bins: int = 256, value_range=None) -> float:
    """Natural-log Shannon entropy of the binned values.

    Bins split ``value_range`` (default: the values' own min to max) evenly.
    """
    v = np.asarray(values, dtype=float).ravel()
    counts = np.bincount(_bin_index(v, bins, value_range), minlength=bins)
    p = counts[counts > 0] / v.size
    return float(-np.sum(p * np.log(p)))


def _window_counts(mask: np.ndarray, window: int) -> np.ndarray:
    """Integer count of ``mask`` pixels in every replicate-padded window."""
    r = window // 2
    padded = np.pad(mask.astype(np.int64), r, mode="edge")
    c = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    c[1:, 1:] = padded.cumsum(0).cumsum(1)
    H, W = mask.shape
    return c[window : window + H, window : window + W] - c[:H, window : window + W] - c[window : window + H, :W] + c[:H, :W]


def extract_mean_entropy(img, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Per-pixel ``[scale * windowed mean, windowed entropy]``, shape ``(H, W, 2)``.

    Borders replicate the edge pixels. The histogram spans the plane's
    intensity range with ``cfg.entropy_bins`` bins. Window counts are exact
    integers, so a constant window has entropy exactly 0.
    """
    x = _plane(img)
    if min(x.shape) < cfg.window:
        raise DomainError(f"image {x.shape} is smaller than the {cfg.window}x{cfg.window} window")
    mean = ndimage.uniform_filter(x, size=cfg.window, mode="nearest")
    idx = _bin_index(x, cfg.entropy_bins)
    n = cfg.window * cfg.window
    entropy = np.zeros_like(x)
    for b in np.unique(idx):
        p = _window_counts(idx == b, cfg.window) / n
        nz = p > 0
        entropy[nz] -= p[nz] * np.log(p[nz])
    out = np.stack([cfg.intensity_scale * mean, entropy], axis=-1)
    return _finite(out, "extract_mean_entropy")


# ---------------------------------------------------------------------------
# ripple filter


@dataclass(frozen=True)
class RippleFilterSpec:
    f_ripple: float
    range_resolution: float = 0.025
    block_height: int = 11

    def __post_init__(self):
        if not (self.range_resolution > 0 and self.block_height >= 1):
            raise DomainError("range_resolution and block_height must be positive")

    @property
    def ripple_length(self) -> float:
        """Pixels per ripple: ``(1 / range_resolution) / f_ripple``."""
        if not self.f_ripple > 0:
            raise DomainError("ripple frequency must be positive")
        return (1.0 / self.range_resolution) / self.f_ripple

    @property
    def block_width(self) -> int:
        L = self.ripple_length
        if not L > 0:
            raise DomainError("ripple length must be positive")
        # rounding guards against 10.000000000000002 / 3 style noise
        return max(1, math.ceil(round(L / 3.0, 9)))


def build_ripple_filter(spec: RippleFilterSpec) -> np.ndarray:
    """Kernel of six vertical blocks valued -1, 0, +1, -1, 0, +1."""
    w = spec.block_width
    row = np.repeat([-1.0, 0.0, 1.0, -1.0, 0.0, 1.0], w)
    return np.tile(row, (spec.block_height, 1))


def ripple_response(img, kernel) -> float:
    """Largest absolute valid cross-correlation, divided by the kernel size."""
    x = _plane(img)
    k = np.asarray(kernel, dtype=float)
    if x.shape[0] < k.shape[0] or x.shape[1] < k.shape[1]:
        raise DomainError(f"image {x.shape} is smaller than kernel {k.shape}")
    corr = signal.correlate2d(x, k, mode="valid")
    return float(np.max(np.abs(corr)) / k.size)


def region_ripple_feature(img, labels, kernel) -> np.ndarray:
    """Per-pixel ripple response of the region the pixel belongs to.

    Each region is cut out by its bounding box; pixels outside the region,
    and any padding needed to reach the kernel size, take the region mean.
    """
    x = _plane(img)
    lab = _check_labels(labels, x.shape)
    k = np.asarray(kernel, dtype=float)
    out = np.empty_like(x)
    for r, sl in enumerate(ndimage.find_objects(lab + 1)):
        if sl is None:
            continue
        inside = lab[sl] == r
        patch = x[sl]
        fill = patch[inside].mean()
        patch = np.where(inside, patch, fill)
        ph = max(0, k.shape[0] - patch.shape[0])
        pw = max(0, k.shape[1] - patch.shape[1])
        if ph or pw:
            patch = np.pad(patch, ((0, ph), (0, pw)), constant_values=fill)
        out[lab == r] = ripple_response(patch, k)
    return out


# ---------------------------------------------------------------------------
# smoothing filters


def _gaussian_taps(sigma: float, radius: int) -> np.ndarray:
    y = np.arange(-radius, radius + 1, dtype=float)
    g = np.exp(-0.5 * (y / sigma) ** 2)
    return y, g / g.sum()


def gaussian_filter_plane(img, sigma: float = 1.0, support: int = 3) -> np.ndarray:
    """Separable sampled-Gaussian smoothing over a ``support x support`` window."""
    if not sigma > 0 or support < 1 or support % 2 == 0:
        raise DomainError("need sigma > 0 and an odd positive support")
    x = _plane(img)
    _, g = _gaussian_taps(sigma, support // 2)
    out = ndimage.correlate1d(x, g, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, g, axis=1, mode="nearest")
    return _finite(out, "gaussian_filter_plane")


def derivative_of_gaussian_y(img, sigma: float = 1.0, support: int | None = None) -> np.ndarray:
    """Vertical derivative of Gaussian smoothing.

    Convolves rows with the derivative ``-y / sigma**2 * g(y)`` and columns
    with ``g``, the normalised sampled Gaussian. Positive where values grow
    with the row index.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    radius = int(math.ceil(3 * sigma)) if support is None else support // 2
    x = _plane(img)
    y, g = _gaussian_taps(sigma, radius)
    dg = y / sigma**2 * g  # correlation taps: the derivative kernel mirrored
    out = ndimage.correlate1d(x, dg, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, g, axis=1, mode="nearest")
    return _finite(out, "derivative_of_gaussian_y")


def log_transform(img) -> np.ndarray:
    """``ln(1 + v)``; pixels must be non-negative."""
    x = _plane(img)
    if np.any(x < 0):
        raise DomainError("log_transform needs non-negative pixels")
    return _finite(np.log1p(x), "log_transform")


def sunset_features(lightness, a_chan, b_chan, blue) -> np.ndarray:
    """Six colour/texture features per pixel, shape ``(H, W, 6)``.

    3x3 Gaussian (sigma 1) responses of the three Lab channels, a 3x3
    Gaussian (sigma 2) response of blue, the vertical derivative of Gaussian
    of lightness and the log of blue.
    """
    planes = [
        gaussian_filter_plane(lightness, 1.0, 3),
        gaussian_filter_plane(a_chan, 1.0, 3),
        gaussian_filter_plane(b_chan, 1.0, 3),
        gaussian_filter_plane(blue, 2.0, 3),
        derivative_of_gaussian_y(lightness, 1.0),
        log_transform(blue),
    ]
    shapes = {p.shape for p in planes}
    if len(shapes) != 1:
        raise DomainError("channel planes differ in size")
    return np.stack(planes, axis=-1)


# ---------------------------------------------------------------------------
# documents and maps


@dataclass(frozen=True)
class DocumentGrouping:
    """Sliding windows (``mode="sliding"``) or a superpixel label plane."""

    mode: str = "sliding"
    window: int = 32
    stride: int = 32
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("sliding", "superpixel"):
            raise DomainError(f"unknown grouping mode {self.mode!r}")
        if self.mode == "sliding" and (self.window < 1 or self.stride < 1):
            raise DomainError("window and stride must be positive")
        if self.mode == "superpixel" and self.labels is None:
            raise DomainError("superpixel grouping needs a label plane")


def _check_labels(labels, shape) -> np.ndarray:
    lab = np.asarray(labels)
    if lab.shape != tuple(shape):
        raise DomainError(f"label plane {lab.shape} does not match image {tuple(shape)}")
    if not np.issubdtype(lab.dtype, np.integer):
        if not np.all(lab == np.round(lab)):
            raise DomainError("labels must be integers")
    lab = lab.astype(np.int64)
    present = np.unique(lab)
    if present[0] != 0 or present[-1] != present.size - 1:
        raise DomainError("labels must be contiguous integers starting at 0")
    return lab


def _starts(n: int, window: int, stride: int) -> list:
    if window >= n:
        return [0]
    s = list(range(0, n - window + 1, stride))
    if s[-1] + window < n:
        s.append(n - window)
    return s


def build_documents(features, grouping: DocumentGrouping = DocumentGrouping()) -> Corpus:
    """Group per-pixel feature vectors ``(H, W, p)`` into documents.

    Sliding windows are clipped to the image, and a final edge-aligned window
    is added when the stride would leave pixels uncovered. Each document's
    ``provenance`` holds the flat (row-major) pixel indices of its words.
    """
    F = np.asarray(features, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]
    if F.ndim != 3:
        raise DomainError("features must be an (H, W, p) array")
    H, W, p = F.shape
    flat = F.reshape(H * W, p)
    pix = np.arange(H * W).reshape(H, W)
    docs = []
    if grouping.mode == "sliding":
        w = grouping.window
        for r in _starts(H, w, grouping.stride):
            for c in _starts(W, w, grouping.stride):
                idx = pix[r : r + w, c : c + w].ravel()
                docs.append(Document(f"w{r}_{c}", flat[idx], idx))
    else:
        lab = _check_labels(grouping.labels, (H, W)).ravel()
        order = np.argsort(lab, kind="stable")
        bounds = np.searchsorted(lab[order], np.arange(lab.max() + 2))
        for k in range(lab.max() + 1):
            idx = order[bounds[k] : bounds[k + 1]]
            docs.append(Document(f"sp{k}", flat[idx], idx))
    return Corpus(tuple(docs))


def render_membership_maps(corpus: Corpus, states, K: int, shape) -> np.ndarray:
    """Per-topic membership maps, shape ``(K, H, W)``.

    A pixel covered by several documents gets the mean of their memberships.
    """
    H, W = shape
    total = np.zeros((H * W, K))
    count = np.zeros(H * W)
    states = list(states)
    if len(states) != len(corpus):
        raise DomainError(f"{len(corpus)} documents but {len(states)} states")
    for doc, st in zip(corpus, states):
        if doc.provenance is None:
            raise DomainError(f"document {doc.id!r} has no pixel provenance")
        Z = np.asarray(getattr(st, "memberships", st), dtype=float)
        if Z.shape != (doc.n_words, K):
            raise DomainError(f"memberships for {doc.id!r} must have shape ({doc.n_words}, {K})")
        if doc.provenance.min() < 0 or doc.provenance.max() >= H * W:
            raise DomainError(f"document {doc.id!r} points outside the image")
        np.add.at(total, doc.provenance, Z)
        np.add.at(count, doc.provenance, 1.0)
    if np.any(count == 0):
        r, c = divmod(int(np.flatnonzero(count == 0)[0]), W)
        raise DomainError(f"pixel ({r}, {c}) is not covered by any document")
    maps = total / count[:, None]
    return np.clip(maps, 0.0, 1.0).T.reshape(K, H, W)


def labels_to_map(corpus: Corpus, labels, K: int, shape) -> np.ndarray:
    """One-hot maps from crisp per-word labels, for baseline output."""
    onehot = [np.eye(K)[np.asarray(lab, dtype=np.int64)] for lab in labels]
    return render_membership_maps(corpus, onehot, K, shape)
