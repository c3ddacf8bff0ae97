import json
import math
from pathlib import Path

import numpy as np

from swistab.lyapunov import SwitchedSystem, verify_weak_lyapunov

DATA = Path(__file__).parent / "data"

GOLDEN_ALPHA = math.sqrt((3 - math.sqrt(5)) / 2)
FIXTURE_NAMES = ("diagonal", "shear_pair", "three_letter", "mixed_stable", "unit_product")


def load(name):
    doc = json.loads((DATA / f"{name}.json").read_text())
    return SwitchedSystem([np.array(m, dtype=float) for m in doc["matrices"]])


def certified(name):
    sys = load(name)
    return sys, verify_weak_lyapunov(sys)


def random_spd(rng, d, cond=50.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return Q @ np.diag(np.geomspace(1.0, cond, d)) @ Q.T


def random_certified(rng, d, K, P=None):
    """Random system scaled so every matrix has P-norm at most 1 (P = I by default)."""
    from swistab import matcore
    P = np.eye(d) if P is None else P
    mats = []
    for _ in range(K):
        A = rng.standard_normal((d, d))
        mats.append(A / matcore.p_opnorm(P, A) * rng.uniform(0.7, 1.0))
    return SwitchedSystem(mats)
