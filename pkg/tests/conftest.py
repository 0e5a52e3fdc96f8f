"""Shared fixtures: the standard damped Grushin families used across tests.

For damping depending on x1 alone the full generator is block-diagonal over
Fourier modes, so spectra, resolvent norms and evolutions of the full system
are assembled from the per-mode blocks (the equality of the block union with
the directly assembled operator is itself a test in test_operators /
test_generators).
"""

import math
from types import SimpleNamespace

import numpy as np
import pytest

import hypowave as hw


def mode_damping(grid, threshold=0.5):
    profile = hw.DampingProfile.x1_indicator(grid, threshold)
    matrix = hw.HermitianOperator(
        matrix=np.diag(profile.x1_values), quad_weight=grid.spacing
    )
    return profile, matrix


def build_mode_family(N, n_max, k=2.0, kind="wave", threshold=0.5):
    """Per-mode damped generators for modes 0..n_max with 1_{|x1|>=threshold}."""
    grid = hw.Grid1D.make(N)
    profile, bmat = mode_damping(grid, threshold)
    make = {
        "wave": hw.damped_wave_generator,
        "schrodinger": hw.schrodinger_generator,
        "plate": hw.plate_generator,
    }[kind]
    gens, stiffness, lam0 = {}, {}, {}
    for n in range(0, n_max + 1):
        A = hw.assemble_grushin_mode(n, k, grid)
        stiffness[n] = A
        gens[n] = make(A, bmat)
        lam0[n] = float(np.linalg.eigvalsh(A.matrix)[0])
    return SimpleNamespace(
        grid=grid, profile=profile, bmat=bmat, gens=gens, stiffness=stiffness, lam0=lam0, k=k
    )


@pytest.fixture(scope="session")
def wave_family_150():
    """Grushin k=2, b = 1_{|x1| >= 1/2}, N=150, wave generators for modes 0..10."""
    return build_mode_family(150, 10)


@pytest.fixture(scope="session")
def wave_family_150_reports(wave_family_150):
    fam = wave_family_150
    return {n: hw.spectrum(fam.gens[n]) for n in fam.gens}


@pytest.fixture(scope="session")
def resolvent_family_120():
    """N=120 wave and schrodinger families for the growth fits, modes 0..12."""
    wave = build_mode_family(120, 12, kind="wave")
    schro = build_mode_family(120, 12, kind="schrodinger")
    return SimpleNamespace(wave=wave, schro=schro)


def geometric_schedule(t_lo, t_hi, n):
    return np.exp(np.linspace(math.log(t_lo), math.log(t_hi), n))
