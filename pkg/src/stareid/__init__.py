"""
Spatial-temporal attention clip aggregation for video person re-identification.
"""
__version__ = "1.0"
