DOMAIN = "stationplot"

BONN_SAMPLE_RATE = 173.61
BONN_RECORD_LENGTH = 4097
# Set letter -> folder name used by the original archive.
BONN_SET_DIRECTORIES = {"A": "Z", "B": "O", "C": "N", "D": "F", "E": "S"}
SEIZURE_LABEL = "E"
HEALTHY_LABELS = ("A", "B", "C", "D")

DEFAULT_LOW_CUT = 0.53
DEFAULT_HIGH_CUT = 40.0
DEFAULT_FILTER_ORDER = 4

DEFAULT_ORDER = 1
DEFAULT_DIMENSION = 2

EPS_REL = 1e-9
CIRCULARITY_SLACK = 1e-9

P_VALUE_FLOOR = 1e-300
SPECIAL_MAX_ITER = 10_000
SPECIAL_EPS = 1e-15

FEATURE_AREA = "area"
FEATURE_PERIMETER = "perimeter"
FEATURE_CIRCULARITY = "circularity"
FEATURE_ASPECT_RATIO = "aspect_ratio"
FEATURE_VOLUME = "volume"
FEATURE_SURFACE_AREA = "surface_area"
FEATURES_2D = (
    FEATURE_AREA,
    FEATURE_PERIMETER,
    FEATURE_CIRCULARITY,
    FEATURE_ASPECT_RATIO,
)
FEATURES_3D = (FEATURE_VOLUME, FEATURE_SURFACE_AREA)
FEATURE_TITLES = {
    FEATURE_AREA: "Convex hull area (CHA)",
    FEATURE_PERIMETER: "Convex hull perimeter (CHP)",
    FEATURE_CIRCULARITY: "Circularity (C)",
    FEATURE_ASPECT_RATIO: "Aspect ratio (AR)",
    FEATURE_VOLUME: "Convex hull volume (CHV)",
    FEATURE_SURFACE_AREA: "Convex hull surface area",
}

KERNEL_LINEAR = "linear"
KERNEL_QUADRATIC = "quadratic"
KERNEL_POLYNOMIAL = "polynomial"
KERNEL_RBF = "rbf"
KERNEL_NAMES = (KERNEL_LINEAR, KERNEL_QUADRATIC, KERNEL_POLYNOMIAL, KERNEL_RBF)

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
DEFAULT_SIGMA = 2.0
DEFAULT_DEGREE = 3
DEFAULT_COEF0 = 1.0
MAX_PASSES_PER_ROW = 50

DEFAULT_RUNS = 100
DEFAULT_TRAIN_FRACTION = 0.7
DEFAULT_SEED = 0
MAX_RUN_ATTEMPTS = 3

PROBLEM_A_VS_E = "a-vs-e"
PROBLEM_ABCD_VS_E = "abcd-vs-e"
PROBLEM_CUSTOM = "custom"
PROBLEM_CLASSES = {
    PROBLEM_A_VS_E: (("A",), ("E",)),
    PROBLEM_ABCD_VS_E: (("A", "B", "C", "D"), ("E",)),
}

DIR_EMBEDDINGS = "embeddings"
DIR_FEATURES = "features"
DIR_STATS = "stats"
DIR_REPORTS = "reports"
DIR_FIGURES = "figures"
OUTPUT_DIRS = (DIR_EMBEDDINGS, DIR_FEATURES, DIR_STATS, DIR_REPORTS, DIR_FIGURES)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

ENV_BONN_DIR = "STATIONPLOT_BONN_DIR"
