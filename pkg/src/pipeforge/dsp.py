"""Audio feature-extraction kernels for the keyword-spotting pack.

Conventions, frozen here so oracles and recorded runs stay comparable:

* audio is float32 PCM in [-1, 1], decoded from 16-bit WAV as int16/32768
* framing: n_frames = 1 + floor((len - frame_len)/hop), Hann window
  w[n] = 0.5 - 0.5 cos(2 pi n / (L-1))
* spectra come from an iterative radix-2 FFT (accumulated in float64,
  stored as float32), bins 0..fft_size/2, |X|^2, no normalization
* mel scale is the HTK formula m(f) = 2595 log10(1 + f/700); filters are
  triangular, peak-normalized to 1 at their center bin
* log is natural log with floor 1e-10 (not dB)
* MFCC is the orthonormal DCT-II of the log-mel energies per frame
"""

from __future__ import annotations

import functools
import io
import struct
import wave

import numpy as np

from .data import AudioClip, FeatureTensor
from .errors import FormatError, RangeViolationError

# ---------------------------------------------------------------------------
# WAV ingestion
# ---------------------------------------------------------------------------


def decode_wav(data: bytes) -> AudioClip:
    """Decode PCM16 mono RIFF/WAVE bytes (the Speech Commands format)."""
    try:
        with wave.open(io.BytesIO(data), "rb") as wf:
            channels = wf.getnchannels()
            if channels != 1:
                raise FormatError(f"unsupported WAV: channels={channels}")
            if wf.getsampwidth() != 2:
                raise FormatError(
                    f"unsupported WAV: sample width {wf.getsampwidth()} bytes, want 2 (PCM16)")
            if wf.getcomptype() != "NONE":
                raise FormatError(f"unsupported WAV: compression {wf.getcomptype()!r}")
            rate = wf.getframerate()
            n = wf.getnframes()
            raw = wf.readframes(n)
    except FormatError:
        raise
    except (wave.Error, EOFError, struct.error) as e:
        raise FormatError(f"unreadable WAV: {e}") from None
    if len(raw) < 2 * n:
        raise FormatError(f"truncated WAV: expected {2 * n} payload bytes, got {len(raw)}")
    pcm = np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0
    return AudioClip(pcm=pcm, sample_rate=rate)


def encode_wav(clip: AudioClip) -> bytes:
    """Inverse of decode_wav (used by fixtures and the demo scripts)."""
    pcm16 = np.clip(np.round(clip.pcm * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(pcm16.tobytes())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Framing and windows
# ---------------------------------------------------------------------------


def hann_window(length: int) -> np.ndarray:
    n = np.arange(length, dtype=np.float64)
    return (0.5 - 0.5 * np.cos(2.0 * np.pi * n / (length - 1))).astype(np.float32)


def frame_count(n_samples: int, frame_len: int, hop: int) -> int:
    if n_samples < frame_len:
        return 0
    return 1 + (n_samples - frame_len) // hop


def frame_and_window(clip: AudioClip, frame_len_ms: float, hop_ms: float,
                     window: str = "hann") -> np.ndarray:
    """Slice a clip into overlapping windowed frames [n_frames, frame_len]."""
    frame_len = int(round(frame_len_ms * clip.sample_rate / 1000.0))
    hop = int(round(hop_ms * clip.sample_rate / 1000.0))
    if frame_len <= 1 or hop <= 0:
        raise RangeViolationError(
            f"frame_len_ms={frame_len_ms}, hop_ms={hop_ms} degenerate at "
            f"{clip.sample_rate} Hz")
    n = frame_count(len(clip.pcm), frame_len, hop)
    if n == 0:
        return np.zeros((0, frame_len), dtype=np.float32)
    offsets = np.arange(n) * hop
    frames = clip.pcm[offsets[:, None] + np.arange(frame_len)[None, :]]
    if window == "hann":
        frames = frames * hann_window(frame_len)
    elif window != "rectangular":
        raise RangeViolationError(f"unknown window {window!r}")
    return frames.astype(np.float32, copy=False)


# ---------------------------------------------------------------------------
# Radix-2 FFT and the power spectrum
# ---------------------------------------------------------------------------


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def fft_radix2(frames: np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT over the rows of ``frames``.

    Rows must have power-of-two length. Computation runs in complex128.
    """
    a = np.asarray(frames)
    if a.ndim == 1:
        a = a[None, :]
    n = a.shape[-1]
    if n == 0 or n & (n - 1):
        raise RangeViolationError(f"FFT length {n} is not a power of two")
    out = a.astype(np.complex128)[:, _bit_reverse_indices(n)]
    m = 2
    while m <= n:
        half = m // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / m)
        blocks = out.reshape(out.shape[0], n // m, m)
        even = blocks[:, :, :half]
        odd = blocks[:, :, half:] * twiddle
        out = np.concatenate([even + odd, even - odd], axis=2).reshape(out.shape[0], n)
        m *= 2
    return out


def power_spectrum(frames: np.ndarray, fft_size: int) -> np.ndarray:
    """|X_k|^2 for k = 0..fft_size/2 per frame, unnormalized, float32."""
    frames = np.atleast_2d(np.asarray(frames))
    if fft_size <= 0 or fft_size & (fft_size - 1):
        raise RangeViolationError(f"fft_size {fft_size} is not a power of two")
    if frames.shape[1] > fft_size:
        raise RangeViolationError(
            f"fft_size {fft_size} smaller than frame length {frames.shape[1]}")
    if frames.shape[0] == 0:
        return np.zeros((0, fft_size // 2 + 1), dtype=np.float32)
    padded = np.zeros((frames.shape[0], fft_size), dtype=np.float64)
    padded[:, : frames.shape[1]] = frames
    spectrum = fft_radix2(padded)[:, : fft_size // 2 + 1]
    return (spectrum.real**2 + spectrum.imag**2).astype(np.float32)


# ---------------------------------------------------------------------------
# Mel filterbank, log-mel, MFCC
# ---------------------------------------------------------------------------


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, fft_size: int, sample_rate: int,
                   f_min: float, f_max: float) -> np.ndarray:
    """Triangular mel filterbank [n_mels, fft_size/2+1], peak 1 per filter.

    Breakpoints are n_mels+2 points equally spaced in mel between
    m(f_min) and m(f_max); weights are evaluated at the bin center
    frequencies k*sr/fft_size and then peak-normalized.
    """
    if f_min >= f_max:
        raise RangeViolationError(f"f_min {f_min} must be below f_max {f_max}")
    if f_max > sample_rate / 2:
        raise RangeViolationError(
            f"f_max {f_max} exceeds Nyquist {sample_rate / 2}")
    if n_mels < 1:
        raise RangeViolationError(f"n_mels must be >= 1, got {n_mels}")
    breakpoints = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    bin_freqs = np.arange(fft_size // 2 + 1, dtype=np.float64) * sample_rate / fft_size
    weights = np.zeros((n_mels, fft_size // 2 + 1), dtype=np.float64)
    for m in range(n_mels):
        left, center, right = breakpoints[m], breakpoints[m + 1], breakpoints[m + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        tri = np.maximum(0.0, np.minimum(rising, falling))
        peak = tri.max()
        if peak <= 0.0:
            raise RangeViolationError(
                f"mel filter {m} has no spectral support "
                f"(fft_size {fft_size} too coarse for {n_mels} filters)")
        weights[m] = tri / peak
    return weights.astype(np.float32)


LOG_FLOOR = 1e-10


def log_mel(spectrum: np.ndarray, filterbank: np.ndarray,
            floor: float = LOG_FLOOR) -> np.ndarray:
    """ln(max(filterbank . spectrum, floor)) per frame, float32."""
    energies = np.asarray(spectrum, dtype=np.float64) @ np.asarray(
        filterbank, dtype=np.float64).T
    return np.log(np.maximum(energies, floor)).astype(np.float32)


def dct_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Orthonormal DCT-II basis rows: D[k, n] = s_k cos(pi k (n + 0.5) / N)."""
    k = np.arange(n_out, dtype=np.float64)[:, None]
    n = np.arange(n_in, dtype=np.float64)[None, :]
    basis = np.cos(np.pi * k * (n + 0.5) / n_in)
    scale = np.full((n_out, 1), np.sqrt(2.0 / n_in))
    scale[0, 0] = np.sqrt(1.0 / n_in)
    return basis * scale


def mfcc(log_mel_frames: np.ndarray, n_mfcc: int) -> np.ndarray:
    """First n_mfcc orthonormal DCT-II coefficients of each log-mel frame."""
    x = np.atleast_2d(np.asarray(log_mel_frames))
    n_mels = x.shape[1]
    if n_mfcc > n_mels:
        raise RangeViolationError(
            f"n_mfcc {n_mfcc} exceeds the {n_mels} mel bands available")
    return (x.astype(np.float64) @ dct_matrix(n_mfcc, n_mels).T).astype(np.float32)


def pre_emphasis(clip: AudioClip, coefficient: float = 0.97) -> AudioClip:
    """y[0] = x[0], y[n] = x[n] - c x[n-1]."""
    x = clip.pcm.astype(np.float32)
    y = np.empty_like(x)
    if len(x):
        y[0] = x[0]
        y[1:] = x[1:] - np.float32(coefficient) * x[:-1]
    return AudioClip(pcm=y, sample_rate=clip.sample_rate)


# ---------------------------------------------------------------------------
# Whole-clip feature extraction (sample-scope composition used by plugins)
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _cached_filterbank(n_mels: int, fft_size: int, sample_rate: int,
                       f_min: float, f_max: float) -> np.ndarray:
    return mel_filterbank(n_mels, fft_size, sample_rate, f_min, f_max)


def extract_log_mel(clip: AudioClip, *, frame_len_ms: float = 40.0,
                    hop_ms: float = 20.0, window: str = "hann",
                    fft_size: int = 1024, n_mels: int = 40,
                    f_min: float = 20.0, f_max: float = 7600.0,
                    floor: float = LOG_FLOOR) -> FeatureTensor:
    frames = frame_and_window(clip, frame_len_ms, hop_ms, window)
    spectrum = power_spectrum(frames, fft_size)
    fb = _cached_filterbank(n_mels, fft_size, clip.sample_rate, f_min, f_max)
    return FeatureTensor(log_mel(spectrum, fb, floor))


def extract_mfcc(clip: AudioClip, *, n_mfcc: int = 10, **kwargs) -> FeatureTensor:
    logmel = extract_log_mel(clip, **kwargs)
    return FeatureTensor(mfcc(logmel.data, n_mfcc))
