import pytest

from pdas.backbone.gradcheck import gradcheck

from pdas.backbone.cases import ALL_CASES
import numpy as np

# fast per-commit sweep; the acceptance gate runs the same cases at 20 seeds
SEEDS = [0, 1, 2]


@pytest.mark.parametrize("name", sorted(ALL_CASES))
def test_primitive_gradcheck(name):
    for seed in SEEDS:
        rng = np.random.default_rng(seed)
        fn, inputs = ALL_CASES[name](rng)
        err = gradcheck(fn, inputs)
        assert err < 1e-4, f"{name} seed {seed}: max rel err {err:.3e}"
