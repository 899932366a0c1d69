from .container import BlobError, CodecId, CompressedBlob
from .image import dictionary_decode, dictionary_encode, predictive_decode, predictive_encode
from .octree import Octree, OctreeCode, OctreeError, Profile, build, decode, profile_resolution, serialize
from .video import decode_frame, interframe_decode, interframe_encode, intraframe_decode, intraframe_encode

__all__ = [
    "BlobError",
    "CodecId",
    "CompressedBlob",
    "Octree",
    "OctreeCode",
    "OctreeError",
    "Profile",
    "build",
    "decode",
    "decode_frame",
    "dictionary_decode",
    "dictionary_encode",
    "interframe_decode",
    "interframe_encode",
    "intraframe_decode",
    "intraframe_encode",
    "predictive_decode",
    "predictive_encode",
    "profile_resolution",
    "serialize",
]
