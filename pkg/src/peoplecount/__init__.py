"""People counting from surveillance video.

Streaming histogram background model, RGBP frame pipeline, recurrent
convolutional count regression, training/evaluation harness, synthetic
scene generator, real-time prediction service and an annotation backend.
"""

from .frames import (PChannel, QuantizedFrame, RawFrame, RGBPFrame,
                     RGBPSequence, SequenceWindower, assemble_rgbp,
                     dequantize_code, quantize, resample)
from .background import BackgroundModel, ForegroundParams, NotReadyError
from .lrcn import FeatureShape, LRCNConfig, LRCNModel, feature_shape
from .metrics import EvalReport, abs_error_hist, evaluate, relative_error_E
from .training import (LabeledSequence, PeopleLabel, TrainConfig, TrainReport,
                       mae_loss, run_strategy, stratified_split, train)

__all__ = [
    "RawFrame", "QuantizedFrame", "PChannel", "RGBPFrame", "RGBPSequence",
    "SequenceWindower", "resample", "quantize", "dequantize_code",
    "assemble_rgbp", "BackgroundModel", "ForegroundParams", "NotReadyError",
    "LRCNConfig", "LRCNModel", "FeatureShape", "feature_shape",
    "EvalReport", "relative_error_E", "abs_error_hist", "evaluate",
    "PeopleLabel", "LabeledSequence", "TrainConfig", "TrainReport",
    "stratified_split", "mae_loss", "train", "run_strategy",
]

__version__ = "0.1.0"
