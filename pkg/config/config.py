import os

# =========================================================
# APPLICATION CONFIGURATION
# =========================================================
APP_TITLE = "Rebar Scan"
TOOL_VERSION = "1.0.0"

# =========================================================
# BASE DIRECTORY
# =========================================================
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# =========================================================
# OUTPUT CONFIGURATION
# =========================================================
DEFAULT_OUTPUT_DIR = "runs"
LOG_SUBDIR = "logs"
LOG_FILE_NAME = "rebarscan.log"
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(message)s"
DEFAULT_LOG_LEVEL = "INFO"
RUN_MANIFEST_NAME = "run_manifest.json"

# =========================================================
# GPR PHYSICS CONFIGURATION
# =========================================================
WAVE_VELOCITY = 1.0e8            # m/s, relative permittivity ~9
CENTER_FREQUENCY = 2.7e9         # Hz, antenna central frequency
TRACE_SPACING = 0.5e-3           # m between traces
N_TRACES = 1200
N_SAMPLES = 512
TIME_WINDOW_MARGIN = 1.25        # time window / deepest two-way apex time
AMPLITUDE_REF_TIME = 1.0e-9      # s, amplitude = ref / travel time
DIRECT_WAVE_GAIN = 0.6
DIRECT_WAVE_PERIODS = 2
DEFAULT_NOISE_SIGMA = 0.05       # fraction of peak amplitude

# =========================================================
# ELEMENT PRESETS (spacing, cover depth in metres)
# =========================================================
ELEMENT_KINDS = ["column", "wall", "slab"]
POSITION_JITTER_FRACTION = 0.05  # of the preset spacing
# noise: sigma as a fraction of peak amplitude (slab clutter)
ELEMENT_PRESETS = {
    "column": {"spacing": 0.150, "depth": 0.050, "depth_jitter": 0.003, "noise": 0.05},
    "wall": {"spacing": 0.100, "depth": 0.060, "depth_jitter": 0.004, "noise": 0.05},
    "slab": {"spacing": 0.035, "depth": 0.045, "depth_jitter": 0.005, "noise": 0.10},
}
SCENES_PER_ELEMENT = 16          # 3 x 16 = 48 images

# =========================================================
# WINDOWING CONFIGURATION
# =========================================================
WINDOW_PRESETS = [(120, 30), (150, 50), (200, 80), (250, 100)]
DEFAULT_WINDOW = (200, 80)
STRIDE_FRACTION = 0.5
PEAK_BAND_FRACTION = 0.4
LIMB_REACH_WIDTHS = 1.0
DEFAULT_INPUT_SIZE = (28, 28)
DEFAULT_CHANNELS = 1
DATA_FILE = "data.bin"
INDEX_FILE = "index.csv"
META_FILE = "meta.json"

# =========================================================
# NETWORK CONFIGURATION
# =========================================================
NUM_CLASSES = 4
CLASS_NAMES = ["Left", "Peak", "Right", "Other"]
TRANET_MIN_INPUT = 18            # smallest input keeping conv 5 output >= 1
ALEXNET_INPUT = (227, 227)
SCALED_ALEXNET_INPUT = (67, 67)
LRN_DEFAULTS = {"depth_radius": 5, "k": 2.0, "alpha": 1e-4, "beta": 0.75}
BATCHNORM_EPS = 1e-5
BATCHNORM_MOMENTUM = 0.9
DROPOUT_RATE = 0.5
CHECKPOINT_MAGIC = b"RBSC"
CHECKPOINT_VERSION = 1

# =========================================================
# TRAINING CONFIGURATION
# =========================================================
LEARNING_RATE = 0.01
MOMENTUM = 0.9
WEIGHT_DECAY = 5e-4
BATCH_SIZE = 32
MAX_EPOCHS = 30
TRAIN_FRACTION = 0.8

# =========================================================
# DETECTOR CONFIGURATION
# =========================================================
DETECT_STRIDE_FRACTION = 0.25
FLANK_BONUS = 0.1
SWEEP_COLUMNS = [
    "network", "window_w", "window_h", "corpus", "seed",
    "test_accuracy", "epochs_run", "wall_secs", "status", "balanced_accuracy",
]
DETECTION_COLUMNS = ["image_id", "x_px", "confidence", "flanked_left", "flanked_right"]

# Field-scan accuracies (annotation only, never a target)
REFERENCE_ACCURACY = {
    ("tranet", 28, "120x30"): 61.27,
    ("tranet", 28, "150x50"): 79.19,
    ("tranet", 28, "200x80"): 91.21,
    ("tranet", 28, "250x100"): 74.62,
    ("tranet", 32, "120x30"): 57.82,
    ("tranet", 32, "150x50"): 78.73,
    ("tranet", 32, "200x80"): 91.31,
    ("tranet", 32, "250x100"): 77.69,
    ("tranet", 227, "120x30"): 33.16,
    ("tranet", 227, "150x50"): 52.49,
    ("tranet", 227, "200x80"): 76.92,
    ("tranet", 227, "250x100"): 73.85,
    ("alexnet", 227, "120x30"): 72.68,
    ("alexnet", 227, "150x50"): 87.78,
    ("alexnet", 227, "200x80"): 94.51,
    ("alexnet", 227, "250x100"): 82.31,
}

# =========================================================
# GRADIENT CHECK CONFIGURATION
# =========================================================
GRADCHECK_STEP = 1e-5
GRADCHECK_TOLERANCE = 1e-4
