import numpy as np
import pytest

from fairpriv.cli.config import ExperimentConfig, mild_correlation_joint
from fairpriv.data import SplitSpec, SyntheticSpec


def reference_config() -> ExperimentConfig:
    """The synthetic reference setup used by the acceptance suite.

    Pinned explicitly rather than via default_config so the acceptance tests
    do not drift with library defaults.
    """
    return ExperimentConfig(
        data=SyntheticSpec(n=8000, d_y=4, d_a=4, d_p=4, d_noise=8,
                           mu_y=3.0, mu_a=2.0, mu_p=2.0,
                           joint=mild_correlation_joint(-0.15, 0.10), seed=0),
        split=SplitSpec(val_fraction=0.2, test_fraction=0.2,
                        train_mode="exacerbated", undersample_factor=0.25,
                        test_mode="trio-balanced"),
        utility_metric="tpr",
    )


@pytest.fixture(scope="session")
def reference_runs():
    """Trained reference runs shared across acceptance criteria.

    Keys: (alpha, beta, seed) -> MetricTriple for the three intervention
    points at seeds 0..2.
    """
    from fairpriv.cli import pipeline

    cfg = reference_config()
    ds = pipeline.load_dataset(cfg)
    out = {}
    for alpha, beta in [(0.0, 0.0), (0.0, 10.0), (10.0, 0.0)]:
        for seed in (0, 1, 2):
            record, _ = pipeline.run_single(cfg, alpha, beta, seed, dataset=ds)
            out[(alpha, beta, seed)] = record.triple
    return out


def median_of(runs, alpha, beta, field):
    vals = [getattr(runs[(alpha, beta, s)], field) for s in (0, 1, 2)]
    return float(np.median(vals))
