"""Salient object detection for optical remote sensing images.

A VGG-16 encoder feeds five multi-content complementation modules (foreground,
edge, background and global-context attention); a deeply supervised decoder
emits a saliency map per level. Training combines BCE, IoU and F-measure
terms with auxiliary edge supervision.
"""

from .config import (
    DataConfig,
    EvalConfig,
    MccmConfig,
    NetworkConfig,
    RunConfig,
    TrainConfig,
)
from .checkpoint import Checkpoint, load_checkpoint, restore_network, save_checkpoint
from .data import DatasetManifest, Sample, augment, edge_ground_truth, load_dataset, prepare
from .encoder import VggEncoder, load_pretrained
from .losses import LossBundle, bce_loss, fmeasure_loss, iou_loss, total_loss
from .mccm import MccmOutputs, MultiContentModule
from .metrics import (
    MetricReport,
    e_measure_suite,
    evaluate_directory,
    f_measure_suite,
    mae,
    measure_image,
    s_measure,
)
from .network import MCCNet, NetworkOutputs
from .trainer import TrainLog, overfit_smoke, train

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "DataConfig",
    "DatasetManifest",
    "EvalConfig",
    "LossBundle",
    "MCCNet",
    "MccmConfig",
    "MccmOutputs",
    "MetricReport",
    "MultiContentModule",
    "NetworkConfig",
    "NetworkOutputs",
    "RunConfig",
    "Sample",
    "TrainConfig",
    "TrainLog",
    "VggEncoder",
    "augment",
    "bce_loss",
    "e_measure_suite",
    "edge_ground_truth",
    "evaluate_directory",
    "f_measure_suite",
    "fmeasure_loss",
    "iou_loss",
    "load_checkpoint",
    "load_dataset",
    "load_pretrained",
    "mae",
    "measure_image",
    "overfit_smoke",
    "prepare",
    "restore_network",
    "s_measure",
    "save_checkpoint",
    "total_loss",
    "train",
]
