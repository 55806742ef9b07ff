import numpy as np
import pytest

from plabs.gallery import random_form


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_forms(count, n_max=10, s_max=10, seed=0, **kwargs):
    """Reproducible stream of random forms with well-conditioned J."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(1, n_max + 1))
        s = int(rng.integers(1, s_max + 1))
        out.append(random_form(n, s, seed=seed * 100003 + k, **kwargs))
    return out


def random_cpl_matrix(rng, s, rho_target=None, norm=np.inf):
    """Random dense S, optionally rescaled so rho(|S|) or a norm hits a target."""
    S = rng.standard_normal((s, s))
    if rho_target is not None:
        if norm == "rho_abs":
            current = float(np.max(np.abs(np.linalg.eigvals(np.abs(S)))))
        elif norm == 2:
            current = float(np.linalg.norm(S, 2))
        else:
            current = float(np.max(np.abs(S).sum(axis=1)))
        S *= rho_target / current
    return S
