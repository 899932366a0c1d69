from .pcap import CaptureStream, ParseDiagnostics, PcapError, build_packet, parse_velodyne_pcap, write_pcap
from .pcd import PCDError, pcd_bytes, read_csv, read_pcd, write_pcd
from .sensors import SensorModel

__all__ = [
    "CaptureStream",
    "ParseDiagnostics",
    "PcapError",
    "PCDError",
    "SensorModel",
    "build_packet",
    "parse_velodyne_pcap",
    "pcd_bytes",
    "read_csv",
    "read_pcd",
    "write_pcap",
    "write_pcd",
]
