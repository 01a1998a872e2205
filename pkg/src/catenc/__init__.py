"""catenc: numeric encodings for high-cardinality categorical features and a
cross-validated harness to benchmark them."""

__version__ = "0.1.0"

from .encoders import EncoderSpec, fit_encoder
from .learners import LearnerSpec
from .pipeline import fit_pipeline
from .tabular import DataTable, load_dataset, stratified_kfold

__all__ = [
    "DataTable",
    "EncoderSpec",
    "LearnerSpec",
    "fit_encoder",
    "fit_pipeline",
    "load_dataset",
    "stratified_kfold",
    "__version__",
]
