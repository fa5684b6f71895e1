"""Decode sweeping-stripe image stacks into subpixel pattern coordinates.

Each camera pixel sees a sequence of intensities as a thin stripe sweeps
across the reference pattern; the stripe position whose frame lights the
pixel most strongly identifies the pattern coordinate the pixel observes.
Subpixel precision comes from the analytic vertex of a least-squares
quadratic fitted to a fixed odd window of samples centred on the argmax
frame.  A scalar reference implementation (:func:`locate_peak`) and a
vectorised whole-image implementation (:func:`decode_axis`) provide two
independent routes to the same answer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ContractViolation

__all__ = [
    "NoSignalError",
    "IntensityProfile",
    "locate_peak",
    "decode_axis",
    "decode_stack",
    "DEFAULT_WINDOW",
    "DEFAULT_PROMINENCE",
]

#: Default sample count for the quadratic peak fit.
DEFAULT_WINDOW = 5

#: A pixel is kept only when its peak intensity exceeds this multiple of the
#: profile's median intensity; background pixels lit by stray light fail it.
DEFAULT_PROMINENCE = 3.0


class NoSignalError(ValueError):
    """Raised when an intensity profile carries no light at all."""


def _check_window(window: int, n_samples: int) -> int:
    if window < 3 or window % 2 == 0:
        raise ContractViolation(f"window must be an odd count >= 3, got {window}")
    if n_samples < 3:
        raise ContractViolation(f"need at least 3 samples, got {n_samples}")
    # A window wider than the profile degrades gracefully to the full profile
    # (kept odd so the fit stays centred on an integer sample).
    if window > n_samples:
        window = n_samples if n_samples % 2 == 1 else n_samples - 1
    return window


def _vertex_weights(window: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthogonal-polynomial weights for a least-squares quadratic fit.

    For samples y at integer offsets x = -h..h, the fitted quadratic
    c0 + c1*x + c2*x^2 has c1 = sum(w1*y) and c2 = sum(w2*y) with the
    returned weight vectors; the vertex sits at -c1/(2*c2).
    """
    h = window // 2
    x = np.arange(-h, h + 1, dtype=float)
    w1 = x / (x * x).sum()
    q = x * x - (x * x).mean()
    w2 = q / (q * q).sum()
    return x, w1, w2


def locate_peak(values: np.ndarray, window: int = DEFAULT_WINDOW) -> tuple[float, bool]:
    """Find the subpixel peak of one intensity profile.

    Parameters
    ----------
    values:
        Intensity samples (non-negative), one per stripe position, in sweep
        order.  Sample spacing is assumed locally uniform for the fit.
    window:
        Odd number of samples for the least-squares quadratic fit.

    Returns
    -------
    (position, ok):
        ``position`` is a fractional sample index in ``[0, len(values)-1]``;
        ``ok`` is False when the profile carries no signal (max <= 0), in
        which case ``position`` is 0.0.  Exact ties resolve to the first
        argmax sample.
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1:
        raise ContractViolation("profile must be one-dimensional")
    window = _check_window(window, y.size)
    if not np.all(np.isfinite(y)):
        raise ContractViolation("profile contains non-finite intensities")

    k = int(np.argmax(y))
    if y[k] <= 0.0:
        return 0.0, False

    h = window // 2
    # Slide the window to stay inside the profile when the argmax sits near
    # an edge; the fit is then off-centre but still brackets the peak.
    start = min(max(k - h, 0), y.size - window)
    centre = start + h
    _, w1, w2 = _vertex_weights(window)
    win = y[start : start + window]
    c1 = float(w1 @ win)
    c2 = float(w2 @ win)
    if c2 >= 0.0:
        # Degenerate fit (vertex would be a minimum): keep the argmax sample.
        return float(k), True
    vertex = -c1 / (2.0 * c2)
    vertex = min(max(vertex, -float(h)), float(h))
    return float(centre) + vertex, True


@dataclass(frozen=True)
class IntensityProfile:
    """Ordered (stripe position, intensity) samples for one camera pixel."""

    positions: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if pos.ndim != 1 or val.ndim != 1 or pos.size != val.size:
            raise ContractViolation("positions and values must be 1-D and equal length")
        if pos.size < 3:
            raise ContractViolation("need at least 3 samples")
        if not np.all(np.diff(pos) > 0.0):
            raise ContractViolation("stripe positions must be strictly increasing")
        if np.any(val < 0.0):
            raise ContractViolation("intensities must be non-negative")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "values", val)

    def decode(self, window: int = DEFAULT_WINDOW) -> float:
        """Return the pattern coordinate of the profile's subpixel peak.

        Raises :class:`NoSignalError` when the profile is all zero.
        """
        idx, ok = locate_peak(self.values, window=window)
        if not ok:
            raise NoSignalError("profile carries no signal")
        return float(np.interp(idx, np.arange(self.positions.size), self.positions))


def _as_positions(positions: np.ndarray) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 1 or pos.size < 3:
        raise ContractViolation("stripe positions must be 1-D with >= 3 entries")
    if not np.all(np.diff(pos) > 0.0):
        raise ContractViolation("stripe positions must be strictly increasing")
    return pos


def decode_axis(
    stack: np.ndarray,
    positions: np.ndarray,
    window: int = DEFAULT_WINDOW,
    prominence: float = DEFAULT_PROMINENCE,
    floor: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Decode one sweep direction for every pixel at once.

    Parameters
    ----------
    stack:
        Array of shape (n_frames, H, W); frame i is the image rendered with
        the stripe at ``positions[i]``.
    positions:
        Stripe positions in pattern units, strictly increasing.
    window:
        Odd sample count for the quadratic peak fit.
    prominence:
        Accept a pixel only when its peak intensity exceeds
        ``prominence`` times the median of its profile.
    floor:
        Optional absolute intensity a peak must additionally reach.

    Returns
    -------
    (coordinate, ok):
        ``coordinate`` holds the decoded pattern coordinate per pixel
        (0 where not ok); ``ok`` is the per-pixel acceptance mask.
    """
    arr = np.asarray(stack, dtype=float)
    if arr.ndim != 3:
        raise ContractViolation("stack must have shape (n_frames, H, W)")
    pos = _as_positions(positions)
    n = arr.shape[0]
    if pos.size != n:
        raise ContractViolation(
            f"stack has {n} frames but {pos.size} stripe positions were given"
        )
    window = _check_window(window, n)
    h = window // 2

    peak = arr.max(axis=0)
    med = np.median(arr, axis=0)
    ok = (peak > 0.0) & (peak > prominence * med)
    if floor > 0.0:
        ok &= peak >= floor

    k = arr.argmax(axis=0)
    start = np.clip(k - h, 0, n - window)
    offsets = np.arange(window).reshape(-1, 1, 1)
    win = np.take_along_axis(arr, start[None, :, :] + offsets, axis=0)

    _, w1, w2 = _vertex_weights(window)
    c1 = np.tensordot(w1, win, axes=(0, 0))
    c2 = np.tensordot(w2, win, axes=(0, 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.where(c2 < 0.0, -c1 / (2.0 * c2), k - (start + h))
    vertex = np.clip(vertex, -float(h), float(h))
    idx = start + h + vertex

    base = np.floor(idx).astype(int)
    base = np.clip(base, 0, n - 2)
    frac = idx - base
    coord = pos[base] * (1.0 - frac) + pos[base + 1] * frac
    coord = np.where(ok, coord, 0.0)
    return coord, ok


def decode_stack(
    stack_u: np.ndarray,
    positions_u: np.ndarray,
    stack_v: np.ndarray,
    positions_v: np.ndarray,
    window: int = DEFAULT_WINDOW,
    prominence: float = DEFAULT_PROMINENCE,
    floor: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decode a u-sweep and a v-sweep into a dense correspondence map.

    Returns ``(u, v, ok)`` where ``ok`` is True only for pixels accepted in
    both sweep directions.
    """
    if np.asarray(stack_u).shape[1:] != np.asarray(stack_v).shape[1:]:
        raise ContractViolation("u and v stacks must share image dimensions")
    u, ok_u = decode_axis(stack_u, positions_u, window, prominence, floor)
    v, ok_v = decode_axis(stack_v, positions_v, window, prominence, floor)
    ok = ok_u & ok_v
    return np.where(ok, u, 0.0), np.where(ok, v, 0.0), ok
