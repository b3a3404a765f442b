"""Grid localization from RSS with a deep Q-network, plus multilateration and fingerprint baselines."""

__version__ = "0.1.0"
