"""Chebyshev type II bandpass design and zero-phase application.

The design path is analog prototype -> lowpass-to-bandpass transform ->
bilinear transform with frequency prewarping, realized as cascaded biquads
for numerical robustness at low normalized corner frequencies. Application
is forward-backward (zero phase) with odd-reflection edge padding.

The stopband edges are the design's critical frequencies: the response first
reaches ``-stopband_atten_db`` there and stays at or below it outside. The
passband between ``low_cut_hz`` and ``high_cut_hz`` is monotonic (type II
has no passband ripple). Note that an even-order type II bandpass has a DC
gain of exactly ``-stopband_atten_db`` (DC maps to the prototype's infinite
frequency), not zero; residual DC leakage scales with the configured
attenuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .data_io import PpgSegment
from .errors import InvalidSpec, NonFiniteOutput, NumericalFailure

_CONJ_TOL = 1e-8
_SETTLE_DECAY = 1e-8


@dataclass(frozen=True)
class FilterSpec:
    """Bandpass design parameters.

    ``order`` is the total bandpass order (the analog prototype has order
    ``order // 2``). ``low_stop_hz``/``high_stop_hz`` default to half the
    low cut and 1.5x the high cut, which keeps the type II design well posed
    around the nominal passband.
    """

    order: int = 4
    low_cut_hz: float = 0.5
    high_cut_hz: float = 10.0
    stopband_atten_db: float = 20.0
    sample_rate_hz: float = 128.0
    low_stop_hz: float | None = None
    high_stop_hz: float | None = None

    @property
    def stop_edges_hz(self) -> tuple[float, float]:
        lo = self.low_cut_hz / 2.0 if self.low_stop_hz is None else self.low_stop_hz
        hi = self.high_cut_hz * 1.5 if self.high_stop_hz is None else self.high_stop_hz
        return lo, hi

    def validate(self) -> None:
        nyq = self.sample_rate_hz / 2.0
        if self.sample_rate_hz <= 0:
            raise InvalidSpec("sample_rate_hz must be positive")
        if self.order < 2 or self.order % 2:
            raise InvalidSpec(f"order must be a positive even integer, got {self.order}")
        if not (0 < self.low_cut_hz < self.high_cut_hz < nyq):
            raise InvalidSpec(
                f"need 0 < low_cut ({self.low_cut_hz}) < high_cut "
                f"({self.high_cut_hz}) < Nyquist ({nyq})"
            )
        if self.stopband_atten_db <= 0:
            raise InvalidSpec("stopband_atten_db must be positive")
        lo, hi = self.stop_edges_hz
        if not (0 < lo < self.low_cut_hz):
            raise InvalidSpec(f"low stop edge {lo} must sit below the passband")
        if not (self.high_cut_hz < hi < nyq):
            raise InvalidSpec(f"high stop edge {hi} must sit between passband and Nyquist")


@dataclass(frozen=True)
class BiquadCascade:
    """Cascade of second-order sections (b0, b1, b2, a1, a2), a0 == 1."""

    sections: tuple[tuple[float, float, float, float, float], ...]
    overall_gain: float
    sample_rate_hz: float

    _sos: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sos = np.empty((len(self.sections), 6), dtype=np.float64)
        for i, (b0, b1, b2, a1, a2) in enumerate(self.sections):
            sos[i] = (b0, b1, b2, 1.0, a1, a2)
        sos.flags.writeable = False
        object.__setattr__(self, "_sos", sos)

    def sos_array(self) -> np.ndarray:
        """(n_sections, 6) array of (b0, b1, b2, 1, a1, a2) rows."""
        return self._sos

    def pole_magnitudes(self) -> np.ndarray:
        mags = []
        for _, _, _, a1, a2 in self.sections:
            roots = np.roots([1.0, a1, a2])
            mags.extend(np.abs(roots))
        return np.array(mags)

    def settle_length(self, decay: float = _SETTLE_DECAY) -> int:
        """Samples until the slowest pole's envelope falls below ``decay``."""
        rho = float(self.pole_magnitudes().max())
        if rho >= 1.0:
            raise NumericalFailure(f"unstable cascade: pole magnitude {rho}")
        if rho == 0.0:
            return 1
        return max(1, int(math.ceil(math.log(decay) / math.log(rho))))

    def transfer_function(self) -> tuple[np.ndarray, np.ndarray]:
        """Expanded (b, a) polynomial coefficients of the full cascade."""
        b = np.array([self.overall_gain])
        a = np.array([1.0])
        for b0, b1, b2, a1, a2 in self.sections:
            b = np.polymul(b, [b0, b1, b2])
            a = np.polymul(a, [1.0, a1, a2])
        return b, a

    def frequency_response(self, freqs_hz: np.ndarray) -> np.ndarray:
        """Complex response at the given frequencies in Hz."""
        z = np.exp(2j * np.pi * np.asarray(freqs_hz, dtype=np.float64)
                   / self.sample_rate_hz)
        h = np.full(z.shape, self.overall_gain, dtype=np.complex128)
        for b0, b1, b2, a1, a2 in self.sections:
            h *= (b0 + b1 / z + b2 / z**2) / (1.0 + a1 / z + a2 / z**2)
        return h


def design_cheby2_bandpass(spec: FilterSpec) -> BiquadCascade:
    """Design the discrete bandpass cascade for ``spec``.

    The magnitude response is at or below ``-stopband_atten_db`` outside the
    stopband edges and within the type II monotonic passband in between.
    """
    spec.validate()
    n_proto = spec.order // 2
    lo, hi = spec.stop_edges_hz

    # Normalize to Nyquist and prewarp so the analog edges land exactly on
    # the requested digital frequencies after the bilinear transform.
    fs_internal = 2.0
    wn = np.array([lo, hi]) / (spec.sample_rate_hz / 2.0)
    warped = 2.0 * fs_internal * np.tan(np.pi * wn / fs_internal)
    bw = warped[1] - warped[0]
    wo = math.sqrt(warped[0] * warped[1])

    z, p, k = _cheby2_prototype(n_proto, spec.stopband_atten_db)
    z, p, k = _lowpass_to_bandpass(z, p, k, wo, bw)
    z, p, k = _bilinear(z, p, k, fs_internal)

    if np.any(np.abs(p) >= 1.0):
        raise NumericalFailure("bilinear transform produced poles on/outside the unit circle")
    sections, gain = _pair_sections(z, p, k)
    return BiquadCascade(sections=sections, overall_gain=gain,
                         sample_rate_hz=spec.sample_rate_hz)


def default_cascade(sample_rate_hz: float, stopband_atten_db: float = 20.0) -> BiquadCascade:
    """The pipeline's standard 4th-order 0.5-10 Hz preconditioning filter."""
    return design_cheby2_bandpass(FilterSpec(
        sample_rate_hz=sample_rate_hz, stopband_atten_db=stopband_atten_db))


def filter_forward_backward(cascade: BiquadCascade, segment: PpgSegment) -> PpgSegment:
    """Zero-phase filtering: forward pass, reverse, second pass, reverse.

    Edge transients are mitigated by odd-reflection padding of three times
    the cascade's settle length (clamped to the segment length minus one).
    Output has identical length and metadata.
    """
    if segment.sample_rate_hz != cascade.sample_rate_hz:
        raise InvalidSpec(
            f"cascade designed for {cascade.sample_rate_hz} Hz applied to a "
            f"{segment.sample_rate_hz} Hz segment"
        )
    x = segment.samples
    padlen = min(3 * cascade.settle_length(), len(x) - 1)
    xp = _odd_reflect_pad(x, padlen)
    sos = cascade.sos_array()
    y = _kernels.sosfilt(sos, xp)
    y = _kernels.sosfilt(sos, y[::-1].copy())
    y = y[::-1]
    if padlen:
        y = y[padlen:-padlen]
    y = y * (cascade.overall_gain * cascade.overall_gain)
    if not np.all(np.isfinite(y)):
        raise NonFiniteOutput("filter produced non-finite output")
    return segment.with_samples(y)


def _odd_reflect_pad(x: np.ndarray, padlen: int) -> np.ndarray:
    if padlen == 0:
        return x.astype(np.float64, copy=True)
    pre = 2.0 * x[0] - x[padlen:0:-1]
    post = 2.0 * x[-1] - x[-2:-padlen - 2:-1]
    return np.concatenate([pre, x, post])


def _cheby2_prototype(n: int, rs_db: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Analog type II lowpass prototype, stopband edge at 1 rad/s."""
    de = 1.0 / math.sqrt(10.0 ** (0.1 * rs_db) - 1.0)
    mu = math.asinh(1.0 / de) / n
    if n % 2:
        m = np.concatenate((np.arange(-n + 1, 0, 2), np.arange(2, n, 2)))
    else:
        m = np.arange(-n + 1, n, 2)
    z = -np.conjugate(1j / np.sin(m * np.pi / (2.0 * n)))
    p = -np.exp(1j * np.pi * np.arange(-n + 1, n, 2) / (2.0 * n))
    p = math.sinh(mu) * p.real + 1j * math.cosh(mu) * p.imag
    p = 1.0 / p
    k = float((np.prod(-p) / np.prod(-z)).real)
    return z.astype(complex), p.astype(complex), k


def _lowpass_to_bandpass(z: np.ndarray, p: np.ndarray, k: float,
                         wo: float, bw: float) -> tuple[np.ndarray, np.ndarray, float]:
    degree = len(p) - len(z)
    zl = z * (bw / 2.0)
    pl = p * (bw / 2.0)
    zb = np.concatenate((zl + np.sqrt(zl**2 - wo**2), zl - np.sqrt(zl**2 - wo**2)))
    pb = np.concatenate((pl + np.sqrt(pl**2 - wo**2), pl - np.sqrt(pl**2 - wo**2)))
    zb = np.append(zb, np.zeros(degree))
    return zb, pb, k * bw**degree


def _bilinear(z: np.ndarray, p: np.ndarray, k: float,
              fs: float) -> tuple[np.ndarray, np.ndarray, float]:
    degree = len(p) - len(z)
    fs2 = 2.0 * fs
    zd = (fs2 + z) / (fs2 - z)
    pd = (fs2 + p) / (fs2 - p)
    zd = np.append(zd, -np.ones(degree))
    kd = k * float(np.real(np.prod(fs2 - z) / np.prod(fs2 - p)))
    return zd, pd, kd


def _conjugate_pairs(vals: np.ndarray, what: str) -> tuple[list[complex], list[float]]:
    """Split roots into positive-imag conjugate representatives and reals."""
    scale = max(1.0, float(np.abs(vals).max())) if len(vals) else 1.0
    tol = _CONJ_TOL * scale
    reals = sorted(float(v.real) for v in vals if abs(v.imag) <= tol)
    pos = sorted((complex(v) for v in vals if v.imag > tol),
                 key=lambda c: (c.real, c.imag))
    neg = sorted((complex(v) for v in vals if v.imag < -tol),
                 key=lambda c: (c.real, -c.imag))
    if len(pos) != len(neg):
        raise NumericalFailure(f"unpaired complex {what}")
    for a, b in zip(pos, neg):
        if abs(a - b.conjugate()) > tol * 10.0:
            raise NumericalFailure(f"{what} conjugate symmetry broken: {a} vs {b}")
    return pos, reals


def _pair_sections(z: np.ndarray, p: np.ndarray,
                   k: float) -> tuple[tuple[tuple[float, ...], ...], float]:
    """Group conjugate pole/zero pairs into biquads (nearest-zero pairing).

    Sections are ordered with poles closest to the unit circle first; each
    section's numerator is monic so the cascade gain stays in one place.
    """
    if len(z) != len(p):
        raise NumericalFailure("zero/pole count mismatch after transforms")
    zc, zr = _conjugate_pairs(z, "zeros")
    pc, pr = _conjugate_pairs(p, "poles")
    if len(zr) % 2 or len(pr) % 2:
        raise NumericalFailure("odd count of real roots cannot form biquads")

    sections: list[tuple[float, float, float, float, float]] = []

    def quad_from_pair(r: complex) -> tuple[float, float]:
        return -2.0 * r.real, r.real * r.real + r.imag * r.imag

    def quad_from_reals(r1: float, r2: float) -> tuple[float, float]:
        return -(r1 + r2), r1 * r2

    zero_quads = [quad_from_pair(c) for c in zc]
    zero_quads += [quad_from_reals(zr[i], zr[i + 1]) for i in range(0, len(zr), 2)]
    zero_anchor = list(zc) + [complex(zr[i]) for i in range(0, len(zr), 2)]

    pole_order = sorted(range(len(pc) + len(pr) // 2),
                        key=lambda i: _pole_sort_key(i, pc, pr))
    for idx in pole_order:
        if idx < len(pc):
            a1, a2 = quad_from_pair(pc[idx])
            anchor = pc[idx]
        else:
            j = (idx - len(pc)) * 2
            a1, a2 = quad_from_reals(pr[j], pr[j + 1])
            anchor = complex(pr[j])
        if not zero_quads:
            raise NumericalFailure("ran out of zeros while pairing sections")
        nearest = min(range(len(zero_quads)), key=lambda i: abs(zero_anchor[i] - anchor))
        b1, b2 = zero_quads.pop(nearest)
        zero_anchor.pop(nearest)
        sections.append((1.0, b1, b2, a1, a2))
    return tuple(sections), float(k)


def _pole_sort_key(idx: int, pc: list[complex], pr: list[float]):
    if idx < len(pc):
        mag = abs(pc[idx])
    else:
        mag = abs(pr[(idx - len(pc)) * 2])
    return (-(mag), idx)
