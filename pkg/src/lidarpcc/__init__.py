"""LiDAR point cloud compression benchmark: ingest, range-image and octree codecs, metrics and a CLI harness."""

from .cloud import PointCloud, QuantizationMeta, dequantize, quantize
from .projection import GridLayout, Layout, RangeImage, project, unproject

__version__ = "0.1.0"

__all__ = ["GridLayout", "Layout", "PointCloud", "QuantizationMeta", "RangeImage", "dequantize", "project",
           "quantize", "unproject"]
