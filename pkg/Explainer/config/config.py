import os

from dotenv import load_dotenv

# Optional .env next to the working directory; nothing in it is required.
load_dotenv()


def _env_int(name, default):
    value = os.environ.get(name)
    return int(value) if value not in (None, '') else default


class Config:
    # Output locations
    OUTPUT_FOLDER = os.environ.get(
        'EXPLAINER_OUTPUT_FOLDER',
        os.path.join(os.getcwd(), 'outputs'),
    )
    # None: logs go under the run's output directory
    LOG_DIR = os.environ.get('EXPLAINER_LOG_DIR') or None
    LOG_LEVEL = os.environ.get('EXPLAINER_LOG_LEVEL', 'INFO').upper()

    # Reproducibility / parallelism
    DEFAULT_SEED = _env_int('EXPLAINER_SEED', 0)
    DEFAULT_THREADS = max(1, _env_int('EXPLAINER_THREADS', 1))

    # SVM dual solver
    SMO_TOLERANCE = 1e-3
    SMO_ITERATION_FACTOR = 100_000  # iteration cap = factor * n
    SUPPORT_THRESHOLD = 1e-8

    # Baseline explainers
    IG_STEPS = 10
    SHAP_PERMUTATIONS = 10

    # Pixel-flipping
    FLIP_REPEATS = 5

    # Dataset protocol
    VALIDATION_FRACTION = 0.2
    EXPLAIN_SPLIT_MAX = 300
    MEDIAN_SUBSAMPLE = 2000

    # Model selection
    CV_FOLDS = 5

    # Decision-surface rendering
    SURFACE_RESOLUTION = 120

    # Explanation methods and the model kinds they apply to.
    # KRR models are explained through their SVM form, so they count as 'svm'.
    METHODS = {
        'lrp': {
            'requires_gradient': False,
            'model_kinds': {'svm', 'knn'},
            'purpose': 'neuralization + layer-wise relevance propagation',
        },
        'gi': {
            'requires_gradient': True,
            'model_kinds': {'svm'},
            'purpose': 'gradient x input on the original decision function',
        },
        'gi-neural': {
            'requires_gradient': True,
            'model_kinds': {'svm'},
            'purpose': 'gradient x input on the neuralized output',
        },
        'ig': {
            'requires_gradient': True,
            'model_kinds': {'svm'},
            'purpose': 'integrated gradients from the data origin',
        },
        'sensitivity': {
            'requires_gradient': True,
            'model_kinds': {'svm'},
            'purpose': 'squared input gradient',
        },
        'occlusion': {
            'requires_gradient': False,
            'model_kinds': {'svm', 'knn'},
            'purpose': 'single-feature replacement by the data mean',
        },
        'shap': {
            'requires_gradient': False,
            'model_kinds': {'svm', 'knn'},
            'purpose': 'Shapley value sampling over removal sequences',
        },
        'random': {
            'requires_gradient': False,
            'model_kinds': {'svm', 'knn'},
            'purpose': 'random scores (sanity baseline)',
        },
    }

    def __init__(self):
        os.makedirs(self.OUTPUT_FOLDER, exist_ok=True)
        if self.LOG_DIR:
            os.makedirs(self.LOG_DIR, exist_ok=True)
