"""Prototype filters shared by the D2D transmit chains."""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

# Frequency-sampling coefficients of the PHYDYAS prototype for K = 4.
PHYDYAS_COEFFICIENTS = {4: (0.97195983, np.sqrt(2) / 2, 0.23514695)}


@dataclass(frozen=True, eq=False)
class PrototypeFilter:
    """Real tap vector normalized to unit energy at construction."""

    taps: np.ndarray
    overlap_factor: int
    samples_per_symbol: int
    shape: str = "custom"  # rrc, phydyas, lapped-sine, gfdm-circular, custom
    rolloff: float | None = None

    def __post_init__(self) -> None:
        if self.overlap_factor < 1:
            raise ValueError(f"overlap_factor must be >= 1, got {self.overlap_factor}")
        if self.samples_per_symbol < 1:
            raise ValueError(f"samples_per_symbol must be >= 1, got {self.samples_per_symbol}")

        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("Filter taps must be a non-empty vector")
        if not np.all(np.isfinite(taps)):
            raise ValueError("Filter taps must be finite")

        energy = float(np.sum(taps**2))
        if energy == 0.0:
            raise ValueError("Filter taps must not all be zero")

        normalized = taps / np.sqrt(energy)
        normalized.flags.writeable = False
        object.__setattr__(self, "taps", normalized)

    def __len__(self) -> int:
        return self.taps.size

    def energy(self) -> float:
        """Sum of squared taps."""
        return float(np.sum(self.taps**2))


def rrc_filter(rolloff: float, overlap_factor: int, samples_per_symbol: int) -> PrototypeFilter:
    """
    Build a centered root-raised-cosine filter of K·P taps.

    The removable singularities at t = 0 and |t| = 1/(4·rolloff) take their
    analytic limits.

    Args:
        rolloff: Excess bandwidth in [0, 1].
        overlap_factor: Filter span K in symbols.
        samples_per_symbol: Samples per symbol P.

    Returns:
        Unit-energy, even-symmetric filter.
    """
    if not 0.0 <= rolloff <= 1.0:
        raise ValueError(f"RRC rolloff must be in [0, 1], got {rolloff}")
    if overlap_factor < 1 or samples_per_symbol < 1:
        raise ValueError("overlap_factor and samples_per_symbol must be >= 1")

    num_taps = overlap_factor * samples_per_symbol
    t = (np.arange(num_taps) - (num_taps - 1) / 2) / samples_per_symbol

    h = np.zeros_like(t)
    at_zero = np.isclose(t, 0.0)
    h[at_zero] = 1.0 - rolloff + 4 * rolloff / np.pi

    singular = np.zeros_like(at_zero)
    if rolloff > 0:
        singular = np.isclose(np.abs(t), 1 / (4 * rolloff))
        h[singular] = (rolloff / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * rolloff))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * rolloff))
        )

    regular = ~(at_zero | singular)
    tr = t[regular]
    numerator = np.sin(np.pi * tr * (1 - rolloff)) + 4 * rolloff * tr * np.cos(
        np.pi * tr * (1 + rolloff)
    )
    denominator = np.pi * tr * (1 - (4 * rolloff * tr) ** 2)
    h[regular] = numerator / denominator

    return PrototypeFilter(
        taps=h,
        overlap_factor=overlap_factor,
        samples_per_symbol=samples_per_symbol,
        shape="rrc",
        rolloff=rolloff,
    )


def phydyas_filter(overlap_factor: int, samples_per_symbol: int) -> PrototypeFilter:
    """Build the PHYDYAS prototype by frequency sampling (K = 4 only)."""
    if overlap_factor not in PHYDYAS_COEFFICIENTS:
        supported = sorted(PHYDYAS_COEFFICIENTS)
        raise ValueError(
            f"PHYDYAS filter supports overlap_factor in {supported}, got {overlap_factor}"
        )
    if samples_per_symbol < 1:
        raise ValueError(f"samples_per_symbol must be >= 1, got {samples_per_symbol}")

    num_taps = overlap_factor * samples_per_symbol
    # Sample midpoints so the taps are symmetric about the filter centre
    t = (np.arange(num_taps) + 0.5 - num_taps / 2) / num_taps

    h = np.ones(num_taps)
    for i, coefficient in enumerate(PHYDYAS_COEFFICIENTS[overlap_factor], start=1):
        h += 2 * coefficient * np.cos(2 * np.pi * i * t)

    return PrototypeFilter(
        taps=h,
        overlap_factor=overlap_factor,
        samples_per_symbol=samples_per_symbol,
        shape="phydyas",
    )


def lapped_sine_filter(M: int, verbatim: bool = False) -> PrototypeFilter:
    """
    Build the fixed 2M-tap sine window of Lapped FBMC.

    The literal form of the window uses a (k - 1/2) offset, which is not
    symmetric about the filter centre; ``verbatim=True`` evaluates that form,
    the default uses (k + 1/2).
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")

    k = np.arange(2 * M)
    offset = -0.5 if verbatim else 0.5
    h = -np.sin((k + offset) * np.pi / (2 * M))

    return PrototypeFilter(
        taps=h,
        overlap_factor=2,
        samples_per_symbol=M,
        shape="lapped-sine-verbatim" if verbatim else "lapped-sine",
    )


def gfdm_circular_filter(base: PrototypeFilter, block_symbols: int, M: int) -> PrototypeFilter:
    """Periodize an RRC base filter onto one GFDM block of N_b·M samples."""
    if base.shape != "rrc":
        raise ValueError(f"GFDM circular filter requires an RRC base filter, got '{base.shape}'")
    if block_symbols < 1:
        raise ValueError(f"block_symbols must be >= 1, got {block_symbols}")

    block_length = block_symbols * M
    if block_length < 1:
        raise ValueError(f"GFDM block length N_b·M must be >= 1, got {block_length}")

    wrapped = np.zeros(block_length)
    np.add.at(wrapped, np.arange(len(base)) % block_length, base.taps)

    return PrototypeFilter(
        taps=wrapped,
        overlap_factor=block_symbols,
        samples_per_symbol=M,
        shape="gfdm-circular",
        rolloff=base.rolloff,
    )
