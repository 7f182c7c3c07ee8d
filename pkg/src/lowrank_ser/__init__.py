"""Low-rank feature representations for speech emotion recognition.

Unsupervised linear and non-linear dimensionality reduction, recurrence
quantification features, classical classifiers and a speaker-independent
cross-validation harness.
"""

__version__ = "0.1.0"

from .dataio import AudioClip, FeatureTable, Utterance, load_feature_csv, load_wav, write_table_csv
from .dr_mds import MdsConfig, nonmetric_mds_fit, pattern_search_mds_fit, smacof_fit
from .dr_spectral import (Embedding, cmds_fit, isomap_fit, lle_fit, mlle_fit, pca_fit,
                          spectral_embed_fit)
from .evaluation import PipelineSpec, cross_validate, make_folds
from .reducers import METHODS, reduce
from .rqa import RqaConfig, extract_rqa_features

__all__ = [
    "AudioClip", "Embedding", "FeatureTable", "MdsConfig", "METHODS", "PipelineSpec",
    "RqaConfig", "Utterance", "cmds_fit", "cross_validate", "extract_rqa_features",
    "isomap_fit", "lle_fit", "load_feature_csv", "load_wav", "make_folds", "mlle_fit",
    "nonmetric_mds_fit", "pattern_search_mds_fit", "pca_fit", "reduce", "smacof_fit",
    "spectral_embed_fit", "write_table_csv",
]
