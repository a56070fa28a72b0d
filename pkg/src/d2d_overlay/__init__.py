"""D2D Overlay - waveform coexistence with an OFDM incumbent."""

__version__ = "0.1.0"
