"""Regenerate the binary gradient-dump fixtures in tests/fixtures/dumps/.

Run from the repository root:

    python3 tests/fixtures/make_dumps.py

Output is deterministic; rerunning must reproduce the checked-in bytes.
"""

from pathlib import Path

import numpy as np

from sumattack.influence import GradientDump, write_dump

OUT_DIR = Path(__file__).parent / "dumps"

PLANTED_SEED = 2024
PLANTED_N_TRAIN = 40
PLANTED_N_TEST = 16
PLANTED_DIM = 12
OUTLIER_INDEX = 7
OUTLIER_NORM_FACTOR = 10.0


def planted_outlier_dump() -> GradientDump:
    """Gaussian gradients with one training row rescaled to 10x the median
    row norm and pointed along the mean test gradient, so every influence
    scorer should rank it first."""
    rng = np.random.default_rng(PLANTED_SEED)
    train = rng.normal(size=(PLANTED_N_TRAIN, PLANTED_DIM))
    test = rng.normal(size=(PLANTED_N_TEST, PLANTED_DIM))
    v = test.mean(axis=0)
    direction = v / np.linalg.norm(v)
    norms = np.linalg.norm(train, axis=1)
    train[OUTLIER_INDEX] = direction * OUTLIER_NORM_FACTOR * np.median(norms)
    ids = tuple(
        "outlier" if i == OUTLIER_INDEX else f"row-{i:02d}"
        for i in range(PLANTED_N_TRAIN)
    )
    return GradientDump(
        layer_dims=(PLANTED_DIM,),
        train_grads=train.astype(np.float32).astype(np.float64),
        test_grads=test.astype(np.float32).astype(np.float64),
        train_ids=ids,
    )


def main() -> None:
    OUT_DIR.mkdir(exist_ok=True)
    write_dump(planted_outlier_dump(), OUT_DIR / "planted_outlier.gdmp")
    print(f"wrote {OUT_DIR / 'planted_outlier.gdmp'}")


if __name__ == "__main__":
    main()
