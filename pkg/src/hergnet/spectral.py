"""Frequency sweeps, SPL/phase, Hermitian i-FFT impulse responses, metrics.

A sweep trains one model per frequency (counts rebuilt per frequency from
the size rules) and records the complex receiver pressure; the analytic
modal solution can be evaluated alongside.  The transfer function is
turned into a real impulse response by embedding the measured band into a
one-sided spectrum, completing it by conjugate symmetry and inverse
transforming; unmeasured bins stay zero and no window is applied.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .geometry import PhysicalConfig, ShoeboxDomain
from .model import HergNetParams, total_field_batch
from .oracle import build_mode_table, modal_green_batch
from .training import TrainConfig, TrainingError, TrainReport, train

P_REF = 2e-5  # Pa


@dataclass
class TransferFunction:
    """Complex pressure vs frequency at a fixed receiver, uniform grid."""
    freqs: np.ndarray
    values: np.ndarray
    receiver: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        if f.ndim != 1 or len(f) != len(self.values):
            raise ValueError("freqs and values must be 1D and equally long")
        if len(f) > 1:
            df = np.diff(f)
            if np.any(df <= 0):
                raise ValueError("freqs must be strictly increasing")
            if (df.max() - df.min()) > 1e-9 * df.mean():
                raise ValueError("freqs must be uniformly spaced")

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if len(self.freqs) > 1 \
            else float(self.freqs[0])


@dataclass
class ImpulseResponse:
    t: np.ndarray
    h: np.ndarray
    fs: float


@dataclass
class SweepResult:
    model: TransferFunction
    oracle: Optional[TransferFunction]
    reports: List[TrainReport]
    failures: List[Tuple[float, str]] = field(default_factory=list)


def frequency_seed(global_seed: int, index: int) -> np.random.SeedSequence:
    """Deterministic per-frequency seed derived from (global seed, index)."""
    return np.random.SeedSequence(entropy=global_seed, spawn_key=(index,))


def sweep(train_config: TrainConfig, phys_template: PhysicalConfig,
          domain: ShoeboxDomain, freqs, receiver,
          with_oracle: bool = True, oracle_freq_factor: float = 2.0,
          progress=None) -> SweepResult:
    """Train a fresh model at every frequency and evaluate at the receiver.

    Training failures are recorded per frequency (value set to NaN) and the
    sweep continues.
    """
    freqs = np.asarray(freqs, dtype=float)
    receiver = np.asarray(receiver, dtype=float)
    rec = receiver[None, :]
    values = np.empty(len(freqs), dtype=complex)
    oracle_values = np.empty(len(freqs), dtype=complex) if with_oracle else None
    reports: List[TrainReport] = []
    failures: List[Tuple[float, str]] = []
    for i, f in enumerate(freqs):
        phys = phys_template.with_frequency(f)
        rng = np.random.default_rng(frequency_seed(train_config.seed, i))
        try:
            params, report = train(train_config, phys, domain, rng)
            p, _ = total_field_batch(params, rec, phys, domain)
            values[i] = p[0]
            reports.append(report)
        except TrainingError as exc:
            values[i] = np.nan
            failures.append((float(f), str(exc)))
        if with_oracle:
            oracle_values[i] = modal_green_batch(
                rec, np.asarray(domain.source), phys, domain,
                freq_factor=oracle_freq_factor)[0]
        if progress is not None:
            progress(i, len(freqs), f)
    tf = TransferFunction(freqs=freqs, values=values, receiver=receiver)
    otf = TransferFunction(freqs=freqs, values=oracle_values, receiver=receiver) \
        if with_oracle else None
    return SweepResult(model=tf, oracle=otf, reports=reports, failures=failures)


def spl(p, p_ref: float = P_REF):
    """Sound pressure level 20 log10(|p| / p_ref); -inf for p = 0."""
    mag = np.abs(p)
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(mag / p_ref)


def unwrap_phase(values) -> np.ndarray:
    """Unwrapped argument sequence; successive steps lie in (-pi, pi]."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("need at least one value")
    return np.unwrap(np.angle(values))


def impulse_response(tf: TransferFunction) -> ImpulseResponse:
    """Hermitian inverse FFT of the transfer function.

    The measured bins are embedded on the grid {0, df, ..., fmax} (bins
    outside the band are zero), completed by H(-f) = conj(H(f)) and
    inverse transformed; the result has duration 1/df at fs = 2 fmax.
    """
    df = tf.df
    n_half = int(round(tf.freqs[-1] / df))
    idx = tf.freqs / df
    if np.any(np.abs(idx - np.round(idx)) > 1e-6):
        raise ValueError("frequency grid must start at a multiple of its spacing")
    n = 2 * n_half
    spectrum = np.zeros(n, dtype=complex)
    bins = np.round(idx).astype(int)
    spectrum[bins] = tf.values
    # the Nyquist bin is its own mirror image: a real signal of this length
    # cannot carry its imaginary part
    spectrum[n_half] = spectrum[n_half].real
    interior = (bins > 0) & (bins < n_half)
    spectrum[n - bins[interior]] = np.conj(tf.values[interior])
    h = np.fft.ifft(spectrum)
    peak = np.abs(h).max()
    if peak > 0 and np.abs(h.imag).max() > 1e-10 * peak:
        raise RuntimeError("inverse transform is not real: broken Hermitian symmetry")
    fs = n * df
    t = np.arange(n) / fs
    return ImpulseResponse(t=t, h=h.real.copy(), fs=fs)


@dataclass
class ErrorReport:
    max_abs: float
    max_rel: float
    rel_l2: float
    pointwise: np.ndarray = field(repr=False, default=None)


def error_metrics(a, b) -> ErrorReport:
    """Pointwise complex-modulus error of a against reference b."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("sequences must be aligned")
    diff = np.abs(a - b)
    ref_max = np.abs(b).max()
    ref_l2 = np.linalg.norm(b)
    if ref_max == 0.0 or ref_l2 == 0.0:
        raise ZeroDivisionError("zero reference in relative error metrics")
    return ErrorReport(max_abs=float(diff.max()),
                       max_rel=float(diff.max() / ref_max),
                       rel_l2=float(np.linalg.norm(diff) / ref_l2),
                       pointwise=diff)
