"""Synthetic corpora for tests, demos and smoke runs."""
from __future__ import annotations

import numpy as np

from .dataio import FeatureTable, Utterance


def emotion_blobs(n=400, m=50, informative=3, n_classes=4, sessions=2,
                  speakers_per_session=2, separation=5.0, noise=1.0,
                  speaker_shift=0.3, seed=0):
    """Class blobs on an ``informative``-dimensional latent space, mixed into ``m`` features.

    Latent class means sit at the origin and at ``separation`` along the
    first coordinate axes (random directions if there are more classes than
    ``informative + 1``), with unit within-class spread. A random Gaussian
    map lifts the latent codes to ``m`` columns, and independent feature noise
    of scale ``noise`` is added. Rows cycle through classes and speakers, so
    every speaker has a balanced label mix; each speaker also adds a small
    constant offset to all features.
    """
    rng = np.random.default_rng(seed)
    if n_classes <= informative + 1:
        centers = np.zeros((n_classes, informative))
        centers[1:, :n_classes - 1] = separation * np.eye(n_classes - 1)
    else:
        centers = separation * rng.standard_normal((n_classes, informative))
    mixing = rng.standard_normal((informative, m))
    n_speakers = sessions * speakers_per_session
    shifts = speaker_shift * rng.standard_normal((n_speakers, m))
    cls = np.arange(n) % n_classes
    spk = (np.arange(n) // n_classes) % n_speakers
    latent = centers[cls] + rng.standard_normal((n, informative))
    X = latent @ mixing + noise * rng.standard_normal((n, m)) + shifts[spk]
    rows = [Utterance(id=f"u{i:04d}", speaker_id=f"spk{spk[i]:02d}",
                      session_id=f"ses{spk[i] // speakers_per_session + 1}",
                      label=f"emo{cls[i]}") for i in range(n)]
    return FeatureTable(rows, X, [f"f{j}" for j in range(m)])
