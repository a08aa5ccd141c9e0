"""Method catalogue: builds integrators from their command-line names."""

import logging
from typing import Callable, Dict, List, Optional

from errors import InvalidSpec
from numerics import NewtonConfig, make_rule
from onestep import explicit_midpoint, gauss2, implicit_midpoint, rk4
from systems import LagrangianSystem

from .base_integrator import BaseIntegrator
from .baselines import OdeBaselineIntegrator, RigidBodyBaselineIntegrator
from .galerkin_vi import GalerkinConfig, GalerkinIntegrator
from .liegroup_vi import RIGID_NEWTON, DepConfig, DepIntegrator, LieGroupIntegrator, RigidBody
from .shooting_vi import ShootingConfig, ShootingIntegrator

logger = logging.getLogger("Registry")

RIGID_BODY = "rigid-body"

LagrangianBuilder = Callable[[LagrangianSystem, Optional[float]], BaseIntegrator]
RigidBuilder = Callable[[RigidBody, Optional[float]], BaseIntegrator]


def _outer(tol: Optional[float]) -> NewtonConfig:
    return NewtonConfig(tol=tol) if tol else NewtonConfig(tol=1e-10)


def _shooting(method, rule: str, variant: str) -> LagrangianBuilder:
    def build(system: LagrangianSystem, tol: Optional[float]) -> BaseIntegrator:
        space = "tangent" if variant == "lagrangian" else "phase"
        cfg = ShootingConfig(method=method(space), rule=make_rule(rule), outer_cfg=_outer(tol))
        return ShootingIntegrator(cfg, system, variant)

    return build


def _galerkin(s: int, rule: str) -> LagrangianBuilder:
    def build(system: LagrangianSystem, tol: Optional[float]) -> BaseIntegrator:
        return GalerkinIntegrator(GalerkinConfig(s=s, rule=make_rule(rule), step_cfg=_outer(tol)), system)

    return build


def _ode_baseline(method) -> LagrangianBuilder:
    def build(system: LagrangianSystem, tol: Optional[float]) -> BaseIntegrator:
        return OdeBaselineIntegrator(method("tangent"), system)

    return build


def _lgvi(chart: str) -> RigidBuilder:
    def build(body: RigidBody, tol: Optional[float]) -> BaseIntegrator:
        cfg = NewtonConfig(tol=tol, step_tol=tol) if tol else RIGID_NEWTON
        return LieGroupIntegrator(body, chart, cfg)

    return build


def _dep(s: int, rule: str) -> RigidBuilder:
    def build(body: RigidBody, tol: Optional[float]) -> BaseIntegrator:
        step_cfg = NewtonConfig(tol=tol or 1e-9, polish=1)
        return DepIntegrator(DepConfig(s=s, rule=make_rule(rule), step_cfg=step_cfg), body)

    return build


def _rigid_baseline(kind: str) -> RigidBuilder:
    def build(body: RigidBody, tol: Optional[float]) -> BaseIntegrator:
        return RigidBodyBaselineIntegrator(body, kind)

    return build


LAGRANGIAN_METHODS: Dict[str, LagrangianBuilder] = {
    "svi-mid-trap": _shooting(implicit_midpoint, "trapezoid", "lagrangian"),
    "svi-rk4-simpson": _shooting(rk4, "simpson", "lagrangian"),
    "svi-rk4-em": _shooting(rk4, "euler_maclaurin2", "lagrangian"),
    "svi-ham-mid": _shooting(implicit_midpoint, "trapezoid", "hamiltonian"),
    "svi-type2": _shooting(implicit_midpoint, "trapezoid", "type2"),
    "galerkin-s1-trap": _galerkin(1, "trapezoid"),
    "galerkin-s2-simpson": _galerkin(2, "simpson"),
    "baseline-rk-explicit-midpoint": _ode_baseline(explicit_midpoint),
    "baseline-srk-implicit-midpoint": _ode_baseline(implicit_midpoint),
    "baseline-srk4-gauss2": _ode_baseline(gauss2),
}

RIGID_METHODS: Dict[str, RigidBuilder] = {
    "lgvi-exp": _lgvi("exp"),
    "lgvi-cayley": _lgvi("cayley"),
    "dep-s1": _dep(1, "trapezoid"),
    "dep-s2": _dep(2, "simpson"),
    "baseline-rk-explicit-midpoint": _rigid_baseline("rk"),
    "baseline-srk-implicit-midpoint": _rigid_baseline("srk"),
    "baseline-lgm-crouch-grossman": _rigid_baseline("lgm"),
}


def method_names() -> List[str]:
    return sorted(set(LAGRANGIAN_METHODS) | set(RIGID_METHODS))


def build_integrator(
    method: str,
    system: Optional[LagrangianSystem] = None,
    body: Optional[RigidBody] = None,
    tol: Optional[float] = None,
) -> BaseIntegrator:
    """
    Build the integrator registered under a method name.

    Args:
        method: Method name such as "svi-mid-trap" or "lgvi-exp"
        system: Lagrangian system, for methods on vector spaces
        body: Rigid body, for methods on SO(3)
        tol: Optional override of the implicit-step Newton tolerance

    Returns:
        A ready integrator

    Raises:
        InvalidSpec: If the method is unknown or does not apply to the target
    """
    if tol is not None and not tol > 0.0:
        raise InvalidSpec(f"tolerance must be positive, got {tol}")
    if body is not None:
        if method not in RIGID_METHODS:
            raise InvalidSpec(f"method '{method}' does not apply to the rigid body")
        integrator = RIGID_METHODS[method](body, tol)
    elif system is not None:
        if method not in LAGRANGIAN_METHODS:
            raise InvalidSpec(f"method '{method}' does not apply to system '{system.name}'")
        integrator = LAGRANGIAN_METHODS[method](system, tol)
    else:
        raise InvalidSpec("either a system or a rigid body is required")
    logger.debug(f"Built {integrator.name} for method {method}")
    return integrator
