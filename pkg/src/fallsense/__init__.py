"""Two-stage fall detection from phone IMU data and WiFi CSI."""

__version__ = "0.1.0"
