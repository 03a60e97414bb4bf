from windowing.augment import flip_augment
from windowing.dataset import Dataset, DatasetMeta, build_dataset, load_dataset, save_dataset
from windowing.labeling import Apex, LabelThresholds, ScanGeometry, auto_label
from windowing.labels import WindowLabel
from windowing.presets import PRESETS, WindowSizePreset, get_preset
from windowing.split import Rect, split_image
