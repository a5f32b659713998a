from .evaluate import evaluate, export_instance_png, load_instance_png
from .instances import canonicalize, connected_components
from .metrics import aji, dice, pq
from .rle import rle_decode, rle_encode, rle_from_base64, rle_from_bytes, rle_to_base64, rle_to_bytes
from .sliding import PredictResult, interactive_predict, sliding_window_predict
