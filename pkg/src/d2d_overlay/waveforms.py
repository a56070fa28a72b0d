"""Baseband synthesis of the five candidate D2D waveforms.

Every waveform is expressed through one per-subcarrier envelope basis: row n
of ``symbol_basis`` is the envelope a unit symbol in slot n contributes on a
single subcarrier. Multiplying by the subcarrier's tone and summing gives the
transmit signal; the interference engine reuses the same rows directly.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import fft

from d2d_overlay.filters import (
    PrototypeFilter,
    gfdm_circular_filter,
    lapped_sine_filter,
    phydyas_filter,
    rrc_filter,
)

logger = logging.getLogger(__name__)

# Symbols drawn when single_subcarrier_signal gets neither symbols nor a count
DEFAULT_SYMBOL_COUNT = 20

# Powers of j indexed by exponent mod 4
QUARTER_TURNS = np.array([1, 1j, -1, -1j])


class WaveformKind(Enum):
    """Candidate D2D waveforms."""

    OFDM = "ofdm"  # CP-OFDM, same numerology as the incumbent
    FMT = "fmt"  # Filtered multi-tone, non-overlapping subcarriers
    OQAM = "oqam"  # OFDM/OQAM, real PAM symbols at twice the symbol rate
    LAPPED = "lapped"  # Lapped FBMC with the fixed 2M-tap sine window
    GFDM = "gfdm"  # Circular pulse shaping inside blocks, one CP per block


@dataclass(frozen=True, eq=False)
class WaveformConfig:
    """Numerology and prototype filter of one D2D waveform."""

    kind: WaveformKind
    M: int
    samples_per_symbol: int
    cp_samples: int = 0
    overlap_factor: int = 1
    block_symbols: int = 1  # N_b, GFDM only
    prototype: PrototypeFilter | None = None
    subcarrier_spacing: float = 15e3

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.samples_per_symbol < 1:
            raise ValueError(f"samples_per_symbol must be >= 1, got {self.samples_per_symbol}")
        if self.cp_samples < 0:
            raise ValueError(f"cp_samples must be >= 0, got {self.cp_samples}")
        if self.overlap_factor < 1:
            raise ValueError(f"overlap_factor must be >= 1, got {self.overlap_factor}")
        if self.block_symbols < 1:
            raise ValueError(f"block_symbols must be >= 1, got {self.block_symbols}")
        if self.subcarrier_spacing <= 0:
            raise ValueError(f"subcarrier_spacing must be > 0, got {self.subcarrier_spacing}")

        if self.kind is WaveformKind.OFDM:
            return
        if self.prototype is None:
            raise ValueError(f"{self.kind.value} requires a prototype filter")

        expected = {
            WaveformKind.FMT: self.overlap_factor * self.samples_per_symbol,
            WaveformKind.OQAM: self.overlap_factor * self.M,
            WaveformKind.LAPPED: 2 * self.M,
            WaveformKind.GFDM: self.block_symbols * self.M,
        }[self.kind]
        if len(self.prototype) != expected:
            raise ValueError(
                f"{self.kind.value} prototype must have {expected} taps, got {len(self.prototype)}"
            )
        if self.kind is WaveformKind.OQAM and self.M % 2:
            raise ValueError(f"OQAM requires an even number of subcarriers, got M={self.M}")

    @classmethod
    def preset(
        cls,
        kind: WaveformKind | str,
        M: int = 180,
        cp_samples: int = 12,
        *,
        overlap_factor: int | None = None,
        rolloff: float = 0.2,
        block_symbols: int = 5,
        lapped_verbatim: bool = False,
        subcarrier_spacing: float = 15e3,
    ) -> "WaveformConfig":
        """
        Build the default configuration of a waveform.

        Args:
            kind: Waveform to configure.
            M: Number of subcarriers (incumbent FFT size).
            cp_samples: Incumbent CP length, which sets the OFDM/GFDM CP and
                the FMT symbol period M + N_CP.
            overlap_factor: Override of the default K (FMT 6, OQAM 4, GFDM 5).
            rolloff: RRC rolloff used by FMT and GFDM.
            block_symbols: GFDM block size N_b.
            lapped_verbatim: Use the literal (k - 1/2) lapped window.
            subcarrier_spacing: Subcarrier spacing in Hz.

        Returns:
            The waveform configuration.
        """
        kind = WaveformKind(kind)
        common = {"M": M, "subcarrier_spacing": subcarrier_spacing}

        if kind is WaveformKind.OFDM:
            return cls(kind=kind, samples_per_symbol=M, cp_samples=cp_samples, **common)

        if kind is WaveformKind.FMT:
            K = overlap_factor or 6
            P = M + cp_samples
            return cls(
                kind=kind,
                samples_per_symbol=P,
                overlap_factor=K,
                prototype=rrc_filter(rolloff, K, P),
                **common,
            )

        if kind is WaveformKind.OQAM:
            K = overlap_factor or 4
            return cls(
                kind=kind,
                samples_per_symbol=M,
                overlap_factor=K,
                prototype=phydyas_filter(K, M),
                **common,
            )

        if kind is WaveformKind.LAPPED:
            return cls(
                kind=kind,
                samples_per_symbol=M,
                overlap_factor=2,
                prototype=lapped_sine_filter(M, verbatim=lapped_verbatim),
                **common,
            )

        K = overlap_factor or 5
        base = rrc_filter(rolloff, K, M)
        return cls(
            kind=kind,
            samples_per_symbol=M,
            cp_samples=cp_samples,
            overlap_factor=K,
            block_symbols=block_symbols,
            prototype=gfdm_circular_filter(base, block_symbols, M),
            **common,
        )

    @property
    def frame_symbols(self) -> int:
        """Symbols per independently synthesized frame (N_b for GFDM, else 1)."""
        return self.block_symbols if self.kind is WaveformKind.GFDM else 1

    @property
    def symbol_spacing(self) -> int:
        """Samples between consecutive symbol slots on one subcarrier."""
        match self.kind:
            case WaveformKind.OFDM:
                return self.M + self.cp_samples
            case WaveformKind.FMT:
                return self.samples_per_symbol
            case WaveformKind.OQAM:
                return self.M // 2
            case WaveformKind.LAPPED | WaveformKind.GFDM:
                return self.M

    @property
    def frame_length(self) -> int:
        """Samples between the starts of consecutive frames."""
        if self.kind is WaveformKind.GFDM:
            return self.block_symbols * self.M + self.cp_samples
        return self.symbol_spacing

    @property
    def frame_span(self) -> int:
        """Samples covered by the envelope of one frame."""
        if self.kind in (WaveformKind.OFDM, WaveformKind.GFDM):
            return self.frame_length
        return len(self.prototype)

    @property
    def sample_period(self) -> float:
        """Seconds per sample, T_s / M."""
        return 1.0 / (self.subcarrier_spacing * self.M)

    def signal_length(self, n_symbols: int) -> int:
        """Length of the transmit signal carrying n_symbols per subcarrier."""
        if n_symbols < 1:
            raise ValueError(f"n_symbols must be >= 1, got {n_symbols}")
        if n_symbols % self.frame_symbols:
            raise ValueError(
                f"GFDM needs a multiple of N_b={self.frame_symbols} symbols, got {n_symbols}"
            )
        n_frames = n_symbols // self.frame_symbols
        return (n_frames - 1) * self.frame_length + self.frame_span

    def describe(self) -> dict[str, int | float | str | bool | None]:
        """Parameters recorded in table metadata."""
        return {
            "kind": self.kind.value,
            "M": self.M,
            "samples_per_symbol": self.samples_per_symbol,
            "cp_samples": self.cp_samples,
            "overlap_factor": self.overlap_factor,
            "block_symbols": self.block_symbols,
            "filter": self.prototype.shape if self.prototype is not None else None,
            "rolloff": self.prototype.rolloff if self.prototype is not None else None,
            "subcarrier_spacing": self.subcarrier_spacing,
        }


@dataclass(frozen=True, eq=False)
class SymbolGrid:
    """N x M matrix of modulated symbols d_m[n]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2 or values.size == 0:
            raise ValueError(f"Symbol grid must be a non-empty N x M matrix, got {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def M(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class ComplexSignal:
    """Complex baseband samples at the incumbent sample rate.

    ``origin`` is the sample index aligned with incumbent time zero.
    """

    samples: np.ndarray
    sample_period: float
    origin: int = 0

    def __len__(self) -> int:
        return self.samples.shape[-1]

    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


# =============================================================================
# ENVELOPES AND TONES
# =============================================================================


def _gfdm_block_basis(config: WaveformConfig) -> np.ndarray:
    """Envelopes of the N_b symbols of one GFDM block, CP included."""
    core_length = config.block_symbols * config.M
    cp = config.cp_samples
    rows = np.empty((config.block_symbols, core_length + cp))
    for n in range(config.block_symbols):
        core = np.roll(config.prototype.taps, n * config.M)
        rows[n, :cp] = core[core_length - cp :]
        rows[n, cp:] = core
    return rows


def symbol_basis(config: WaveformConfig, n_symbols: int) -> np.ndarray:
    """
    Per-slot envelopes on one subcarrier.

    Returns:
        Complex array of shape (n_symbols, signal_length(n_symbols)).
    """
    length = config.signal_length(n_symbols)
    basis = np.zeros((n_symbols, length), dtype=complex)

    if config.kind is WaveformKind.OFDM:
        span = config.frame_length
        for n in range(n_symbols):
            basis[n, n * span : (n + 1) * span] = 1.0
        return basis

    if config.kind is WaveformKind.GFDM:
        block = _gfdm_block_basis(config)
        N_b, span = config.block_symbols, config.frame_length
        for b in range(n_symbols // N_b):
            basis[b * N_b : (b + 1) * N_b, b * span : (b + 1) * span] = block
        return basis

    taps = config.prototype.taps
    spacing = config.symbol_spacing
    for n in range(n_symbols):
        # OQAM alternates real and imaginary slots on each subcarrier
        phase = QUARTER_TURNS[n % 4] if config.kind is WaveformKind.OQAM else 1.0
        basis[n, n * spacing : n * spacing + taps.size] = phase * taps
    return basis


def subcarrier_tones(config: WaveformConfig, subcarriers: np.ndarray, length: int) -> np.ndarray:
    """
    Tone of each subcarrier over sample indices 0 … length-1.

    Phases are reduced with integer arithmetic before the exponential so long
    signals keep full precision.
    """
    m = np.asarray(subcarriers, dtype=np.int64)[:, None]
    k = np.arange(length, dtype=np.int64)[None, :]
    M = config.M

    if config.kind is WaveformKind.OQAM:
        # j^m e^{j2πm(k - D/2)/M} with D = KM - 1, the filter centre
        D = len(config.prototype) - 1
        turns = (m * (2 * k - D)) % (2 * M) / (2 * M)
        return QUARTER_TURNS[m % 4] * np.exp(2j * np.pi * turns)

    if config.kind is WaveformKind.LAPPED:
        # e^{j(k - 1/2 + M/2)mπ/M}: incumbent grid, phase referenced to the window centre
        turns = (m * (2 * k - 1 + M)) % (2 * M) / (2 * M)
        return np.exp(2j * np.pi * turns)

    return np.exp(2j * np.pi * ((m * k) % M) / M)


# =============================================================================
# SYNTHESIS
# =============================================================================


def random_symbols(kind: WaveformKind, rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance symbols: QPSK, or ±1 PAM for OQAM."""
    shape = tuple(np.atleast_1d(shape))
    if kind is WaveformKind.OQAM:
        return (2.0 * rng.integers(0, 2, size=shape) - 1.0).astype(complex)
    bits = 2.0 * rng.integers(0, 2, size=(*shape, 2)) - 1.0
    return (bits[..., 0] + 1j * bits[..., 1]) / np.sqrt(2)


def synthesize(config: WaveformConfig, grid: SymbolGrid) -> ComplexSignal:
    """Synthesize the transmit signal of a full symbol grid."""
    if grid.M != config.M:
        raise ValueError(f"Symbol grid has {grid.M} subcarriers, waveform expects {config.M}")
    if grid.N % config.frame_symbols:
        raise ValueError(
            f"GFDM needs a multiple of N_b={config.frame_symbols} symbols, got N={grid.N}"
        )
    if config.kind is WaveformKind.OQAM and np.any(grid.values.imag != 0):
        raise ValueError("OQAM carries real PAM symbols; grid has imaginary parts")

    basis = symbol_basis(config, grid.N)
    active = np.flatnonzero(np.any(grid.values != 0, axis=0))
    samples = np.zeros(basis.shape[1], dtype=complex)
    if active.size:
        envelopes = grid.values[:, active].T @ basis
        tones = subcarrier_tones(config, active, basis.shape[1])
        samples = np.sum(envelopes * tones, axis=0)

    return ComplexSignal(samples=samples, sample_period=config.sample_period)


def single_subcarrier_signal(
    config: WaveformConfig,
    m: int,
    symbols: np.ndarray | None = None,
    seed: int = 0,
    n_symbols: int | None = None,
) -> ComplexSignal:
    """
    Signal with only subcarrier m active, normalized to unit mean power.

    Symbols are drawn from ``seed`` when not supplied. An all-zero symbol
    vector returns the zero signal without normalization.
    """
    if not 0 <= m < config.M:
        raise ValueError(f"Subcarrier index {m} out of range [0, {config.M})")

    if symbols is None:
        count = n_symbols or DEFAULT_SYMBOL_COUNT
        count = -(-count // config.frame_symbols) * config.frame_symbols
        symbols = random_symbols(config.kind, np.random.default_rng(seed), count)
    symbols = np.asarray(symbols, dtype=complex).ravel()

    values = np.zeros((symbols.size, config.M), dtype=complex)
    values[:, m] = symbols
    signal = synthesize(config, SymbolGrid(values))

    power = signal.mean_power()
    if power == 0.0:
        return signal
    return ComplexSignal(
        samples=signal.samples / np.sqrt(power), sample_period=signal.sample_period
    )


def mean_symbol_power(config: WaveformConfig) -> float:
    """Steady-state power per sample of unit-variance symbols on one subcarrier."""
    frame = symbol_basis(config, config.frame_symbols)
    return float(np.sum(np.abs(frame) ** 2)) / config.frame_length


# =============================================================================
# DEMODULATION (self-tests of the transmit chains)
# =============================================================================


def ofdm_demodulate(config: WaveformConfig, signal: ComplexSignal) -> SymbolGrid:
    """CP removal and DFT of every OFDM symbol in the signal."""
    if config.kind is not WaveformKind.OFDM:
        raise ValueError(f"ofdm_demodulate needs an OFDM config, got {config.kind.value}")

    span = config.frame_length
    n_symbols = (len(signal) - signal.origin) // span
    if n_symbols < 1:
        raise ValueError("Signal shorter than one OFDM symbol")

    starts = signal.origin + np.arange(n_symbols) * span + config.cp_samples
    blocks = signal.samples[starts[:, None] + np.arange(config.M)[None, :]]
    spectra = fft.fft(blocks, axis=1) / config.M

    # Tones are referenced to sample 0, not to each window start
    bins = np.arange(config.M)
    offsets = (starts - signal.origin)[:, None] * bins[None, :] % config.M
    return SymbolGrid(spectra * np.exp(-2j * np.pi * offsets / config.M))


def matched_demodulate(config: WaveformConfig, signal: ComplexSignal, n_symbols: int) -> SymbolGrid:
    """
    Correlate the signal with every synthesis function.

    For OQAM the real part is returned, where real-domain orthogonality
    removes the intrinsic interference.
    """
    basis = symbol_basis(config, n_symbols)
    length = basis.shape[1]
    samples = signal.samples[signal.origin : signal.origin + length]
    if samples.size < length:
        raise ValueError(f"Signal has {samples.size} samples, {length} needed")

    tones = subcarrier_tones(config, np.arange(config.M), length)
    energies = np.sum(np.abs(basis) ** 2, axis=1)
    estimates = ((samples[None, :] * np.conj(tones)) @ np.conj(basis).T) / energies
    if config.kind is WaveformKind.OQAM:
        estimates = estimates.real
    return SymbolGrid(estimates.T)
