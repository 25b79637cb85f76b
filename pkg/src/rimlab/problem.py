"""Aggregate of one model instance: operator data, noise path, certificate.

A ModelProblem owns the sampled Wiener path and derives the OU driver from
it once; fixed-point contexts for any forcing translation, and for
index-shifted copies of the path, are built from here so that every
downstream object provably uses the same stored noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Nonlinearity
from .errors import ConfigError
from .forcing import ForcingSignal
from .lyapunov_perron import GapCertificate, LPContext, backward_horizon
from .randomness import CovarianceSpec, OUProcess, WienerPath, solve_ou
from .spectral import Spectrum

__all__ = ["ModelProblem"]


@dataclass
class ModelProblem:
    spectrum: Spectrum
    nonlinearity: Nonlinearity
    forcing: ForcingSignal
    path: WienerPath
    cert: GapCertificate
    t_back: float
    t_fwd: float
    tol: float = 1e-6
    ou_exact_variance: bool = False
    _ou: OUProcess | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.path.n_modes != self.spectrum.size:
            raise ConfigError("noise.values: mode count differs from the spectrum")
        if self.forcing.n_modes != self.spectrum.size:
            raise ConfigError("forcing: mode count differs from the spectrum")
        if self.tol <= 0.0:
            raise ConfigError("numerics.tol: must be positive")

    @property
    def h(self) -> float:
        return self.path.grid.h

    @property
    def cov(self) -> CovarianceSpec:
        return self.path.cov

    @property
    def seed(self) -> int:
        return self.path.seed

    @property
    def ou(self) -> OUProcess:
        if self._ou is None:
            self._ou = solve_ou(self.path, self.spectrum, self.ou_exact_variance)
        return self._ou

    def ou_for(self, path: WienerPath) -> OUProcess:
        """OU driver on an index-shifted or coarsened copy of the stored path."""
        return solve_ou(path, self.spectrum, self.ou_exact_variance)

    def lp_context(
        self,
        tau: float = 0.0,
        ou: OUProcess | None = None,
        tol: float | None = None,
        debug_selfmap: bool = False,
    ) -> LPContext:
        return LPContext(
            spectrum=self.spectrum,
            cert=self.cert,
            nonlinearity=self.nonlinearity,
            forcing=self.forcing,
            ou=self.ou if ou is None else ou,
            tau=tau,
            t_back=self.t_back,
            tol=self.tol if tol is None else tol,
            seed=self.seed,
            debug_selfmap=debug_selfmap,
        )

    @staticmethod
    def default_horizons(cert: GapCertificate, tol: float) -> tuple[float, float]:
        t_back = backward_horizon(cert, tol)
        t_fwd = (
            t_back
            if cert.lipschitz <= 0.0
            else float(np.log(10.0 / tol) / (cert.mu - cert.lambda_n))
        )
        return t_back, t_fwd
