"""Slot-based foreground substitution for COCO-style detection datasets."""

from .coco_io import (CategoryRecord, Dataset, ImageRecord, Instance, load_image,
                      parse_dataset, read_dataset, write_dataset)
from .compositor import execute_plan, flip_horizontal, substitute
from .geometry import BBox, find_isolated, overlaps
from .kernels import BACKEND
from .matcher import (AugmentationPlan, FilterConfig, build_plan, filter_candidates,
                      select_candidate)
from .mini_dataset import build_mini_dataset, select_step
from .slot_db import SlotDatabase, SlotRecord, build_slot_database, query
from .stats_report import category_stats, proportion_of_original, run_report

__version__ = "0.1.0"
