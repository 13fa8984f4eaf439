"""Hecke algebra, Satake transform and amplifier toolkit for PGL_d over Q_p."""

from __future__ import annotations

__version__ = "0.1.0"

from .amplifier import AmplifierResult, build_amplifier, build_amplifiers, tempered_sweep
from .diophantine import AlgebraElement, AlgebraSpec, bad_primes, near_subalgebra_test
from .hecke_cosets import DoubleCosetKey, coset_count, enumerate_cosets
from .mass_lab import BallFamily, Correspondence, FiniteModel, cov2_check, mass_bound_check
from .plancherel import isometry_residual, plancherel_density, plancherel_inner
from .root_data import Cocharacter, RootDatum
from .satake import HeckeFunction, SatakeParameter, WSymLaurent, inverse_satake, satake_transform

__all__ = [
    "AlgebraElement", "AlgebraSpec", "AmplifierResult", "BallFamily", "Cocharacter", "Correspondence",
    "DoubleCosetKey", "FiniteModel", "HeckeFunction", "RootDatum", "SatakeParameter", "WSymLaurent",
    "bad_primes", "build_amplifier", "build_amplifiers", "coset_count", "cov2_check", "enumerate_cosets",
    "inverse_satake", "isometry_residual", "mass_bound_check", "near_subalgebra_test", "plancherel_density",
    "plancherel_inner", "satake_transform", "tempered_sweep",
]
