from detector.classify import LabelMap, classify_windows, oracle_label_map
from detector.experiments import RunReport, compare_elements, sweep_window_sizes
from detector.localize import Detection, DetectionScore, localize_rebar, score_detections
