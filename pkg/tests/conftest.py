import numpy as np
import pytest

from strokeseg import pipeline, synth
from strokeseg.classify import (BaselineCornerClassifier,
                                BaselinePointClassifier, TrainParams,
                                train_baseline)

CORPUS_SEED = 42
CORPUS_SIGMA = 1.0
CORPUS_SIZE = 500
TRAIN_SIZE = 400


@pytest.fixture(scope="session")
def corpus():
    return synth.generate_corpus(CORPUS_SIZE, seed=CORPUS_SEED,
                                 sigma=CORPUS_SIGMA)


@pytest.fixture(scope="session")
def train_strokes(corpus):
    return corpus[:TRAIN_SIZE]


@pytest.fixture(scope="session")
def test_strokes(corpus):
    return corpus[TRAIN_SIZE:]


@pytest.fixture(scope="session")
def point_model(train_strokes):
    return train_baseline(train_strokes, "point",
                          params=TrainParams(seed=CORPUS_SEED))


@pytest.fixture(scope="session")
def corner_model(train_strokes):
    return train_baseline(train_strokes, "corner",
                          params=TrainParams(seed=CORPUS_SEED))


@pytest.fixture(scope="session")
def trained_config(point_model, corner_model):
    return pipeline.DetectorConfig(
        point_classifier=BaselinePointClassifier(point_model),
        corner_classifier=BaselineCornerClassifier(corner_model))


def arc_points(radius, theta0, theta1, n, center=(0.0, 0.0)):
    theta = np.linspace(theta0, theta1, n)
    return np.column_stack([center[0] + radius * np.cos(theta),
                            center[1] + radius * np.sin(theta)])
