"""Supervised 6D pose tracking: loss detection, re-registration, long-absence
recovery, a synthetic scene simulator, and pose/segmentation metrics."""

from .geometry import (CameraIntrinsics, ObjectModel, Pose, load_model,
                       max_diameter, project_point, transform_point)
from .mask import (KERNEL_BACKEND, BinaryMask, Contour, contour_area,
                   contour_centroid, extract_contours, largest_contour,
                   mask_iou)
from .supervisor import (Mode, SupervisorConfig, TrackerState,
                         correspondences_to_prompt, lorentzian_distance,
                         loss_threshold, memory_trigger, step)
from .evaluation import (accuracy, add_error, adds_error, auc, average_iou,
                         runtime_report)

__version__ = "0.1.0"
