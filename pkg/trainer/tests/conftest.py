import numpy as np
import pytest


@pytest.fixture(scope="session")
def toy_windows():
    """~230 labeled DL windows from the pipeline's synthetic generator."""
    from ecgsleep.synthetic import block_stages, generate_recording
    from ecgsleep.windowing import WindowingConfig, generate_windows

    rec = generate_recording(block_stages(5, repeats=2), seed=3)
    ws = generate_windows(rec, WindowingConfig.dl())
    X = np.stack([ws.slice(rec, w)[:, None] for w in ws.windows[:232]])
    y = np.array([w.label.value for w in ws.windows[:232]])
    return X, y
