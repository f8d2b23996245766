from .approx import ApproxField, approximate_field, decode_raw
from .pipeline import TransferStats, decode_grasps, transfer_field
from .records import ObjectRecord
from .transport import transport_grasp

__all__ = [
    "ObjectRecord", "ApproxField", "approximate_field", "decode_raw",
    "transport_grasp", "transfer_field", "decode_grasps", "TransferStats",
]
