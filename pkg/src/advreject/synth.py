"""Deterministic synthetic datasets.

The benchmark LIBSVM datasets are not redistributable with the package, so
`credit_surrogate` and `clinical_surrogate` generate stand-ins matching
their shapes (690 x 14 and 768 x 8) and class balance. Each mixes tight
clean clusters, an unpredictable central core, a thin bridge of small
margins, and scattered label flips, so a kernel model lands in the
published difficulty regime: mostly classifiable, a rejectable ambiguous
region, and errors that no rejection budget removes. `two_moons` and
`two_clusters` are 2-D toys for the neural path.

Everything is a pure function of the seed. ``python -m advreject.synth``
writes the four datasets as LIBSVM/CSV files.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset


def two_moons(n: int = 400, noise: float = 0.15, seed: int = 0) -> Dataset:
    """Interleaved half-circles; +1 on the upper moon."""
    rng = np.random.default_rng(seed)
    n_up = n // 2
    n_dn = n - n_up
    t_up = rng.uniform(0.0, np.pi, n_up)
    t_dn = rng.uniform(0.0, np.pi, n_dn)
    up = np.column_stack([np.cos(t_up), np.sin(t_up)])
    dn = np.column_stack([1.0 - np.cos(t_dn), 0.5 - np.sin(t_dn)])
    x = np.vstack([up, dn]) + rng.normal(0.0, noise, size=(n, 2))
    y = np.concatenate([np.ones(n_up, dtype=int), -np.ones(n_dn, dtype=int)])
    perm = rng.permutation(n)
    return Dataset(x[perm], y[perm], name="two-moons")


def two_clusters(n: int = 400, seed: int = 0, skirt_frac: float = 0.3) -> Dataset:
    """Two separable clusters on the [0, 1] scale with layered margins.

    Each class has a deep core (distance ~0.4 from the boundary) and a thin
    skirt (distance 0.03 to 0.10). The classes never overlap, so clean
    training is easy; an attacker with radius ~0.1 flips the whole skirt
    unless the model learned to abstain there.
    """
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    n_skirt = int(round(skirt_frac * n))
    skirt = np.zeros(n, dtype=bool)
    skirt[rng.choice(n, n_skirt, replace=False)] = True
    dist = np.where(skirt, rng.uniform(0.03, 0.10, n), rng.normal(0.4, 0.06, n))
    x = np.column_stack([0.5 + y * dist, rng.normal(0.5, 0.15, n)])
    perm = rng.permutation(n)
    return Dataset(x[perm], y[perm].astype(int), name="two-clusters")


def _banded_mix(
    n: int,
    d: int,
    sep: float,
    informative: int,
    pos_frac_clean: float,
    blob_mass: float,
    bridge_mass: float,
    flip: float,
    seed: int,
    cluster_std: float = 0.6,
    blob_std: float = 0.55,
) -> tuple[np.ndarray, np.ndarray]:
    """Two tight clusters, an unpredictable central blob, and a "bridge" of
    correctly-labeled points spanning the gap.

    The blob carries 50/50 labels (the rejectable region); the bridge
    creates a continuum of small margins (what adversarial perturbations
    exploit); the flips inject label noise a smooth rejector cannot carve
    out, so some error persists at any rejection budget.
    """
    rng = np.random.default_rng(seed)
    n_blob = int(round(blob_mass * n))
    n_bridge = int(round(bridge_mass * n))
    n_clean = n - n_blob - n_bridge
    n_pos = int(round(pos_frac_clean * n_clean))
    direction = np.zeros(d)
    direction[:informative] = rng.uniform(0.6, 1.0, informative)
    direction /= np.linalg.norm(direction)
    center = 0.5 * sep * direction
    xp = rng.normal(0.0, cluster_std, (n_pos, d)) + center
    xn = rng.normal(0.0, cluster_std, (n_clean - n_pos, d)) - center
    yc = np.concatenate([np.ones(n_pos, int), -np.ones(n_clean - n_pos, int)])
    yc = np.where(rng.random(n_clean) < flip, -yc, yc)
    side = np.where(rng.random(n_bridge) < 0.5, 1.0, -1.0)
    u = rng.uniform(0.15, 0.6, n_bridge)
    xg = (side * u)[:, None] * center[None, :] + rng.normal(0.0, 0.45, (n_bridge, d))
    yg = side.astype(int)
    xb = rng.normal(0.0, blob_std, (n_blob, d))
    yb = np.where(rng.random(n_blob) < 0.5, 1, -1)
    x = np.vstack([xp, xn, xg, xb])
    y = np.concatenate([yc, yg, yb])
    perm = rng.permutation(n)
    return x[perm], y[perm]


def credit_surrogate(seed: int = 0) -> Dataset:
    """690 x 14 stand-in for a credit-approval dataset: mostly separable,
    a small ambiguous core, ~9% persistent label noise."""
    x, y = _banded_mix(
        n=690, d=14, sep=4.5, informative=8, pos_frac_clean=0.45,
        blob_mass=0.15, bridge_mass=0.12, flip=0.09, seed=seed,
    )
    return Dataset(x, y, name="australian-surrogate")


def clinical_surrogate(seed: int = 0) -> Dataset:
    """768 x 8 stand-in for a diabetes-screening dataset: a large ambiguous
    core (about half the mass), ~10% label noise, imbalanced classes."""
    x, y = _banded_mix(
        n=768, d=8, sep=4.0, informative=5, pos_frac_clean=0.25,
        blob_mass=0.48, bridge_mass=0.10, flip=0.10, seed=seed,
        cluster_std=0.5,
    )
    return Dataset(x, y, name="diabetes-surrogate")


GENERATORS = {
    "australian-surrogate": credit_surrogate,
    "diabetes-surrogate": clinical_surrogate,
    "two-moons": two_moons,
    "two-clusters": two_clusters,
}


def main(argv=None) -> int:
    import argparse
    from pathlib import Path

    from .data import to_csv, to_libsvm

    ap = argparse.ArgumentParser(description="write the synthetic datasets to disk")
    ap.add_argument("--out", default="data", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, gen in GENERATORS.items():
        ds = gen(seed=args.seed)
        if name in ("two-moons", "two-clusters"):
            path = out / f"{name}.csv"
            path.write_text(to_csv(ds))
        else:
            path = out / f"{name}.libsvm"
            path.write_text(to_libsvm(ds))
        print(f"wrote {path} ({len(ds)} x {ds.d})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
