"""Half-duplex relaying: RNSNR thresholds, outage, DMT and delay-limited rates."""

__version__ = "0.1.0"
