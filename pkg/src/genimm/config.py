"""Shared configuration: tolerances, grid sizes, geometry parameters, conventions.

All caps and tolerances used by the numerical engines live here so that no
engine hard-codes them.  A config can be loaded from a flat ``key = value``
file; the ``GENIMM_CONFIG`` environment variable overrides the default config
path only, never individual values.
"""

from __future__ import annotations

import dataclasses
import os

ENV_CONFIG_PATH = "GENIMM_CONFIG"


@dataclasses.dataclass(frozen=True)
class Config:
    # exact-arithmetic enumeration caps
    max_qform_dim: int = 24          # gauss_sum enumerates 2**dim vectors
    max_split_search_dim: int = 12   # exhaustive isotropic-subspace search cap

    # generic numerical engines
    degree_grid: int = 64            # seeds per axis for degree preimage search
    newton_tol: float = 1e-10        # residual target for Newton/Gauss-Newton
    newton_max_iter: int = 60
    cluster_radius: float = 1e-6     # dedup radius for converged solutions
    jacobian_min_det: float = 1e-6   # regular-value check threshold
    fd_step: float = 1e-6            # finite-difference step for Jacobians
    rank_fd_step: float = 1e-5       # finite-difference step for rank probes

    # fiber tracing (Hopf invariant)
    trace_step: float = 1e-2
    trace_corrector_tol: float = 1e-8
    trace_closure_tol: float = 1e-4
    trace_max_steps: int = 20000

    # curve-curve linking
    min_curve_separation: float = 1e-6   # gauss_link disjointness requirement
    min_image_separation: float = 1e-4   # pushed cycle vs immersed image
    integer_rounding_margin: float = 0.25
    link_refine_rounds: int = 3

    # 1-cycle vs 3-manifold linking in 5-space
    apex_distance: float = 9.0
    apex_retries: int = 5
    cone_seed_radius: float = 0.25
    condition_flag: float = 1e6

    # self-intersection solver
    pair_seed_radius: float = 0.08
    min_preimage_separation: float = 5e-2
    double_trace_step: float = 5e-3

    # family geometry (kink cap radius and transition annulus, kink coords)
    cap_a: float = 0.2               # must satisfy 0 < a < 1/4
    kink_r1: float = 3.0
    kink_r2: float = 5.0

    # discretisation of closed-form curves
    curve_points: int = 1024
    push_distance: float = 4e-3

    # conventions (the invariants are pinned only up to these global choices)
    psi_sign: int = 1                # +1: right-framed kink circle for m = 1/2
    beta_generator: int = 3          # value of the surface invariant on the generator, odd
    beta_tau_sign: int = 1           # +1: surface invariant mod 4 equals +tau
    sigma_sign: int = 1              # sign of sigma = omega / 24 for embeddings

    seed: int = 7

    def __post_init__(self):
        if not (0.0 < self.cap_a < 0.25):
            raise ValueError("cap_a must lie in (0, 1/4)")
        if not (0.0 < self.kink_r1 < self.kink_r2):
            raise ValueError("kink transition annulus must satisfy 0 < r1 < r2")
        if self.beta_generator % 2 == 0:
            raise ValueError("beta_generator must be odd")
        if self.psi_sign not in (-1, 1) or self.beta_tau_sign not in (-1, 1):
            raise ValueError("sign conventions must be +-1")
        if self.sigma_sign not in (-1, 1):
            raise ValueError("sigma_sign must be +-1")

    def replace(self, **kw) -> "Config":
        return dataclasses.replace(self, **kw)


DEFAULT = Config()

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(Config)}


def _coerce(name: str, raw: str):
    typ = _FIELD_TYPES[name]
    raw = raw.strip()
    if typ in ("int", int):
        return int(raw)
    if typ in ("float", float):
        return float(raw)
    return raw


def loads(text: str) -> Config:
    """Parse a flat ``key = value`` config (``#`` comments, blank lines ok)."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return Config(**values)


def load(path: str | None = None) -> Config:
    """Load a config file; falls back to GENIMM_CONFIG, then to defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path is None:
        return DEFAULT
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
