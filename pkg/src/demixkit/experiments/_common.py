import numpy as np


def relative_error(estimate, truth):
    """``||estimate - truth|| / ||truth||``, or ``||estimate||`` when the truth is zero."""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    norm = float(np.linalg.norm(truth))
    diff = float(np.linalg.norm(estimate - truth))
    return diff / norm if norm > 0 else diff
