import io
import os
from pathlib import Path

import numpy as np
import pytest

from ppmgcn.eventlog import parse_event_log

DATA_ENV = "PPMGCN_DATA_DIR"
DATASET_FILES = {
    "helpdesk": ("helpdesk.csv",),
    "bpi12w": ("bpi_12_w.csv", "bpi12w.csv", "BPI12W.csv"),
}


def dataset_path(name):
    """Locate a public dataset under $PPMGCN_DATA_DIR (or ./data); None when absent."""
    roots = [Path(os.environ[DATA_ENV])] if os.environ.get(DATA_ENV) else []
    roots.append(Path(__file__).resolve().parents[1] / "data")
    for root in roots:
        for fname in DATASET_FILES[name]:
            if (root / fname).is_file():
                return root / fname
    return None


def log_from_text(text):
    return parse_event_log(io.StringIO(text))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def abc_csv():
    return (
        "CaseID,ActivityID,CompleteTimestamp\n"
        "c1,A,2020-01-06 08:00:00\n"
        "c1,B,2020-01-06 08:01:00\n"
    )
