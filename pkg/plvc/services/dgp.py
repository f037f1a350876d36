"""
Simulation designs and their true coefficient curves

All drivers v_j and the index z are i.i.d. uniform on [0, 2].
"""
from typing import Callable, Dict, Tuple

import numpy as np

from ..design.dataset import make_dataset
from ..models.data import Dataset
from ..models.simulation import DgpKind, DgpSpec, Truth

GAMMA = 0.5
# E[(1 + z)^2] for z ~ U[0, 2]
HETERO_NORMALIZER = np.sqrt(13.0 / 3.0)


def beta1_true(z):
    """1 + (24z)^3 exp(-24z)"""
    t = 24.0 * np.asarray(z, dtype=float)
    return 1.0 + t ** 3 * np.exp(-t)


def beta2_true(z):
    """z + sin(z)"""
    z = np.asarray(z, dtype=float)
    return z + np.sin(z)


def _uniform(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    return rng.uniform(0.0, 2.0, size=(count, n))


def gen_dgp1(n: int, rng: np.random.Generator, noise_sd: float = 0.5) -> Tuple[Dataset, Truth]:
    """
    y = 1 + 0.5 w + x beta_1(z) + u

    w = v1 + 2 v3, x = v2 + v3, u ~ N(0, noise_sd^2)
    """
    v1, v2, v3 = _uniform(rng, n, 3)
    z = rng.uniform(0.0, 2.0, size=n)
    u = noise_sd * rng.standard_normal(n)
    w = v1 + 2.0 * v3
    x = v2 + v3
    b1 = beta1_true(z)
    y = 1.0 + GAMMA * w + x * b1 + u

    ds = make_dataset(y, w, x, z, linear_labels=["w"], varying_labels=["x"])
    truth = Truth(gamma=[GAMMA], beta_at_sample=np.column_stack([np.ones(n), b1]))
    return ds, truth


def gen_dgp2(n: int, rng: np.random.Generator, noise_sd: float = 0.5) -> Tuple[Dataset, Truth]:
    """
    y = 4 + 0.5 w + x1 beta_1(z) + x2 beta_2(z) + u

    w = v1 + 2 v3, x1 = v2 + v3, x2 = v4 + 0.5 v3
    """
    v1, v2, v3, v4 = _uniform(rng, n, 4)
    z = rng.uniform(0.0, 2.0, size=n)
    u = noise_sd * rng.standard_normal(n)
    w = v1 + 2.0 * v3
    x1 = v2 + v3
    x2 = v4 + 0.5 * v3
    b1, b2 = beta1_true(z), beta2_true(z)
    y = 4.0 + GAMMA * w + x1 * b1 + x2 * b2 + u

    ds = make_dataset(y, w, np.column_stack([x1, x2]), z, linear_labels=["w"], varying_labels=["x1", "x2"])
    truth = Truth(gamma=[GAMMA], beta_at_sample=np.column_stack([np.full(n, 4.0), b1, b2]))
    return ds, truth


def gen_custom_hetero(n: int, rng: np.random.Generator, noise_sd: float = 0.5) -> Tuple[Dataset, Truth]:
    """DGP1 with u = noise_sd (1 + z) e / sqrt(13/3), e ~ N(0, 1)"""
    v1, v2, v3 = _uniform(rng, n, 3)
    z = rng.uniform(0.0, 2.0, size=n)
    u = noise_sd * (1.0 + z) * rng.standard_normal(n) / HETERO_NORMALIZER
    w = v1 + 2.0 * v3
    x = v2 + v3
    b1 = beta1_true(z)
    y = 1.0 + GAMMA * w + x * b1 + u

    ds = make_dataset(y, w, x, z, linear_labels=["w"], varying_labels=["x"])
    truth = Truth(gamma=[GAMMA], beta_at_sample=np.column_stack([np.ones(n), b1]))
    return ds, truth


def gen_varying_gamma(n: int, rng: np.random.Generator, noise_sd: float = 0.5) -> Tuple[Dataset, Truth]:
    """
    DGP1 with gamma(z) = 0.5 + z on w

    A fully varying coefficient truth; Truth.gamma is the population mean 1.5.
    """
    v1, v2, v3 = _uniform(rng, n, 3)
    z = rng.uniform(0.0, 2.0, size=n)
    u = noise_sd * rng.standard_normal(n)
    w = v1 + 2.0 * v3
    x = v2 + v3
    b1 = beta1_true(z)
    y = 1.0 + (GAMMA + z) * w + x * b1 + u

    ds = make_dataset(y, w, x, z, linear_labels=["w"], varying_labels=["x"])
    truth = Truth(gamma=[GAMMA + 1.0], beta_at_sample=np.column_stack([np.ones(n), b1]), gamma_varies=True)
    return ds, truth


TRUE_GAMMA: Dict[DgpKind, Tuple[float, ...]] = {
    DgpKind.DGP1: (GAMMA,),
    DgpKind.DGP2: (GAMMA,),
    DgpKind.CUSTOM_HETERO: (GAMMA,),
    DgpKind.VARYING_GAMMA: (GAMMA + 1.0,),
}

GENERATORS: Dict[DgpKind, Callable[..., Tuple[Dataset, Truth]]] = {
    DgpKind.DGP1: gen_dgp1,
    DgpKind.DGP2: gen_dgp2,
    DgpKind.CUSTOM_HETERO: gen_custom_hetero,
    DgpKind.VARYING_GAMMA: gen_varying_gamma,
}


def generate(spec: DgpSpec, rng: np.random.Generator) -> Tuple[Dataset, Truth]:
    """Draw one sample of the design described by ``spec``"""
    return GENERATORS[spec.which](spec.n, rng, noise_sd=spec.noise_sd)
