import asyncio
import json
import logging
import os
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import NoConvergence, SingularJacobian
from experiment_spec import RIGIDBODY_METHODS, ExperimentSpec
from integrators.base_integrator import BaseIntegrator
from integrators.liegroup_vi import LgviState, body_velocity
from integrators.registry import RIGID_BODY, build_integrator
from reference import ConvergenceReport, reference_solution, rigid_body_reference
from systems import PhaseState, get_system

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("ExperimentCoordinator")

FLOAT_FORMAT = "%.17g"
SYMPLECTIC_SAMPLES = 10


class ExperimentCoordinator:
    """
    Runs harness experiments and writes their tables.

    Independent (method, h) cells of a sweep run concurrently in worker
    threads; each cell is sequential and writes nothing itself.
    """

    def __init__(self, output_dir: Optional[str] = None, max_concurrency: int = 4):
        if output_dir:
            os.makedirs(output_dir, exist_ok=True)
        self._semaphore: Optional[asyncio.Semaphore] = None
        self._semaphore_loop = None
        self.history: List[Dict[str, Any]] = []

        # Configuration
        self.config = {
            "output_dir": output_dir,
            "max_concurrency": max_concurrency,
            "float_format": FLOAT_FORMAT,
        }

    def _sanitize_data(self, data: Any) -> Any:
        """
        Recursively convert numpy types to native Python types for JSON serialization.

        Args:
            data: Data that may contain numpy types

        Returns:
            Data with numpy types converted to native Python types
        """
        if isinstance(data, dict):
            return {key: self._sanitize_data(value) for key, value in data.items()}
        elif isinstance(data, list):
            return [self._sanitize_data(item) for item in data]
        elif isinstance(data, tuple):
            return tuple(self._sanitize_data(item) for item in data)
        elif isinstance(data, np.floating):
            return float(data)
        elif isinstance(data, np.integer):
            return int(data)
        elif isinstance(data, np.ndarray):
            return data.tolist()
        elif hasattr(data, 'item'):  # Handle numpy scalars
            return data.item()
        else:
            return data

    def _resolve_path(self, path: Optional[str]) -> Optional[str]:
        if path is None or os.path.isabs(path) or not self.config["output_dir"]:
            return path
        return os.path.join(self.config["output_dir"], path)

    def write_table(self, frame: pd.DataFrame, spec: ExperimentSpec, path: Optional[str] = None,
                    trailer: Optional[Dict[str, Any]] = None) -> str:
        """
        Emit a table as CSV or JSON; to stdout when no path is given.

        trailer entries become `# key=value` lines after a CSV body and extra
        top-level fields of a JSON document.

        Returns:
            The text written
        """
        if spec.format == "csv":
            text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
            for key, value in (trailer or {}).items():
                text += f"# {key}={value!r}\n" if isinstance(value, float) else f"# {key}={value}\n"
        else:
            document = {"rows": frame.to_dict(orient="records")}
            document.update(trailer or {})
            text = json.dumps(self._sanitize_data(document), indent=2) + "\n"
        target = self._resolve_path(path if path is not None else spec.out)
        if target is None:
            print(text, end="")
        else:
            directory = os.path.dirname(target)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(target, "w", encoding="utf-8") as handle:
                handle.write(text)
            logger.info(f"Wrote {len(frame)} rows to {target}")
        return text

    def _limiter(self) -> asyncio.Semaphore:
        loop = asyncio.get_running_loop()
        if self._semaphore is None or self._semaphore_loop is not loop:
            self._semaphore = asyncio.Semaphore(self.config["max_concurrency"])
            self._semaphore_loop = loop
        return self._semaphore

    async def _run_cell(self, fn, *args):
        async with self._limiter():
            return await asyncio.to_thread(fn, *args)

    def _build(self, spec: ExperimentSpec, method: Optional[str] = None) -> BaseIntegrator:
        method = method or spec.method
        if spec.system == RIGID_BODY:
            integrator = build_integrator(method, body=spec.body(), tol=spec.tol)
            if spec.compensated and hasattr(integrator, "compensated"):
                integrator.compensated = True
            return integrator
        return build_integrator(method, system=get_system(spec.system), tol=spec.tol)

    def _simulate(self, spec: ExperimentSpec, method: str, h: float) -> Dict[str, Any]:
        """Integrate one cell; returns the states, iteration counts and wall time."""
        integrator = self._build(spec, method)
        if spec.system == RIGID_BODY:
            R0, Omega0 = spec.rigid_initial()
            state0 = integrator.initial_state(R0, Omega0, h)
        else:
            state0 = spec.initial_state()
        try:
            result = integrator.run(state0, h, spec.n_steps(h))
        except (NoConvergence, SingularJacobian) as e:
            logger.error(f"{method} failed at h={h}: {e}")
            raise
        result["integrator"] = integrator
        result["method"] = method
        result["h"] = h
        return result

    def trajectory_frame(self, spec: ExperimentSpec, result: Dict[str, Any]) -> pd.DataFrame:
        """Per-step table: step, t, q, p, energy, energy_error and, for the rigid body, diagnostics."""
        states = result["states"]
        h = result["h"]
        iterations = [0] + list(result["newton_iters"])
        rows = []
        if spec.system == RIGID_BODY:
            integrator = result["integrator"]
            energy0 = None
            for k, state in enumerate(states):
                diag = integrator.diagnostics(state)
                energy0 = diag["energy"] if energy0 is None else energy0
                row = {"step": k, "t": k * h}
                row.update({f"q_{i + 1}": x for i, x in enumerate(np.ravel(diag["R"]))})
                row.update({f"p_{i + 1}": x for i, x in enumerate(diag["body_momentum"])})
                row["energy"] = diag["energy"]
                row["energy_error"] = diag["energy"] - energy0
                row["ortho_error"] = diag["ortho_error"]
                row.update({f"momentum_{axis}": x for axis, x in zip("xyz", diag["momentum"])})
                row["newton_iters"] = iterations[k]
                row["momentum_energy"] = diag["momentum_energy"]
                rows.append(row)
        else:
            system = get_system(spec.system)
            energy0 = system.phase_energy(states[0].q, states[0].p)
            for k, state in enumerate(states):
                energy = system.phase_energy(state.q, state.p)
                row = {"step": k, "t": k * h}
                row.update({f"q_{i + 1}": x for i, x in enumerate(state.q)})
                row.update({f"p_{i + 1}": x for i, x in enumerate(state.p)})
                row["energy"] = energy
                row["energy_error"] = energy - energy0
                rows.append(row)
        return pd.DataFrame(rows)

    async def run_integrate(self, spec: ExperimentSpec) -> Dict[str, Any]:
        """Integrate one trajectory and write its per-step table."""
        logger.info(f"Integrating {spec.system} with {spec.method}, h={spec.h}, T={spec.T}")
        result = await self._run_cell(self._simulate, spec, spec.method, spec.h)
        frame = self.trajectory_frame(spec, result)
        self.write_table(frame, spec)
        summary = {
            "command": spec.command,
            "system": spec.system,
            "method": spec.method,
            "h": spec.h,
            "steps": len(frame) - 1,
            "max_abs_energy_error": float(frame["energy_error"].abs().max()),
            "newton_iters": int(np.sum(result["newton_iters"])),
            "wall_time": result["wall_time"],
        }
        self.history.append(summary)
        return self._sanitize_data(summary)

    async def run_energy(self, spec: ExperimentSpec) -> Dict[str, Any]:
        """
        Integrate and summarise the energy error: band, early band and drift
        per unit time. Outside the rigid body the step map is also checked for
        symplecticity at states drawn with spec.seed.
        """
        result = await self._run_cell(self._simulate, spec, spec.method, spec.h)
        frame = self.trajectory_frame(spec, result)
        self.write_table(frame, spec)
        summary = {"command": spec.command, "system": spec.system, "method": spec.method, "h": spec.h}
        summary.update(energy_statistics(frame["t"].to_numpy(), frame["energy_error"].to_numpy()))
        logger.info(f"Energy error of {spec.method}: max {summary['max_abs_energy_error']:.3e}, "
                    f"drift {summary['drift_per_unit_time']:.3e}")
        if spec.system != RIGID_BODY:
            summary["symplecticity_error"] = await self._run_cell(self._symplecticity_cell, spec, result["integrator"])
            logger.info(f"Symplecticity error of {spec.method} over {SYMPLECTIC_SAMPLES} states "
                        f"(seed {spec.seed}): {summary['symplecticity_error']:.3e}")
        self.history.append(summary)
        return self._sanitize_data(summary)

    def _symplecticity_cell(self, spec: ExperimentSpec, integrator: BaseIntegrator) -> float:
        """Symplecticity of the step map at seeded random states around the initial state."""
        rng = np.random.default_rng(spec.seed)
        z0 = spec.initial_state().as_array()
        m = z0.size // 2
        samples = z0 + rng.uniform(-0.5, 0.5, size=(SYMPLECTIC_SAMPLES, z0.size))

        def step(z: np.ndarray) -> np.ndarray:
            integrator.reset()
            return integrator.step(PhaseState(z[:m], z[m:]), spec.h).as_array()

        return symplecticity_error(step, samples)

    def _global_error(self, spec: ExperimentSpec, result: Dict[str, Any]) -> float:
        final = result["states"][-1]
        h = result["h"]
        T = spec.n_steps(h) * h
        if spec.system == RIGID_BODY:
            R0, Omega0 = spec.rigid_initial()
            body = spec.body()
            reference = rigid_body_reference(body, R0, Omega0, T)
            if isinstance(final, LgviState):
                # log(F_N)/h approximates the body velocity half a step later
                Omega_ref = rigid_body_reference(body, R0, Omega0, T + 0.5 * h).Omega
                Omega = body_velocity(final.F, h)
            else:
                Omega_ref = reference.Omega
                Omega = final.Omega
            return float(max(np.linalg.norm(final.R - reference.R), np.linalg.norm(Omega - Omega_ref)))
        system = get_system(spec.system)
        reference = reference_solution(system, spec.initial_state(), T)
        return float(np.linalg.norm(final.as_array() - reference.as_array()))

    def _convergence_cell(self, spec: ExperimentSpec, h: float) -> Tuple[float, float, Dict[str, Any]]:
        result = self._simulate(spec, spec.method, h)
        return h, self._global_error(spec, result), result

    async def run_convergence(self, spec: ExperimentSpec) -> Dict[str, Any]:
        """
        Sweep the step sizes, measure global errors at T against the
        reference solution and fit the order.
        """
        steps = spec.step_sizes()
        logger.info(f"Convergence study of {spec.method} on {spec.system} over h={steps}")
        cells = await asyncio.gather(*[self._run_cell(self._convergence_cell, spec, h) for h in steps])
        report = ConvergenceReport(method=spec.method, system=spec.system, T=spec.T)
        for h, error, _ in cells:
            report.add(h, error)
        slope = report.fit()
        logger.info(f"Fitted order of {spec.method}: {slope:.3f}")
        frame = pd.DataFrame({"h": [p[0] for p in report.points], "global_error": [p[1] for p in report.points]})
        self.write_table(frame, spec, trailer={"slope": slope})
        summary = report.to_dict()
        summary["wall_time"] = [cell[2]["wall_time"] for cell in cells]
        self.history.append(summary)
        return self._sanitize_data(summary)

    def _rigidbody_cell(self, spec: ExperimentSpec, method: str, h: float) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        result = self._simulate(spec, method, h)
        frame = self.trajectory_frame(spec, result)
        momentum = frame[["momentum_x", "momentum_y", "momentum_z"]].to_numpy()
        momentum_error = np.linalg.norm(momentum - momentum[0], axis=1)
        stats = energy_statistics(frame["t"].to_numpy(), frame["energy_error"].to_numpy())
        momentum_energy_error = frame["momentum_energy"].to_numpy() - frame["momentum_energy"].iloc[0]
        summary = {
            "method": method,
            "h": h,
            "energy_band": stats["energy_band"],
            "momentum_energy_band": float(np.ptp(momentum_energy_error)),
            "mean_abs_energy_error": float(np.mean(np.abs(frame["energy_error"]))),
            "max_ortho_error": float(frame["ortho_error"].max()),
            "mean_ortho_error": float(frame["ortho_error"].mean()),
            "max_momentum_error": float(momentum_error.max()),
            "newton_iters": int(frame["newton_iters"].sum()),
            "max_newton_iters": int(frame["newton_iters"].max()),
            "wall_time": result["wall_time"],
        }
        long_frame = frame[["step", "t", "energy_error", "ortho_error", "newton_iters"]].copy()
        long_frame.insert(0, "h", h)
        long_frame.insert(0, "method", method)
        long_frame["momentum_error"] = momentum_error
        long_frame["momentum_energy_error"] = momentum_energy_error
        return long_frame, summary

    async def run_rigidbody(self, spec: ExperimentSpec, methods=RIGIDBODY_METHODS) -> Dict[str, Any]:
        """
        Compare the Lie group integrators with the baselines on the free rigid body.

        Per-step diagnostics of every (method, h) cell go to the output table;
        the per-cell summary goes to a sibling `_summary` file. Wall times
        are logged and returned but kept out of both files.
        """
        steps = spec.step_sizes()
        logger.info(f"Rigid-body comparison of {len(methods)} methods over h={steps}, T={spec.T}")
        cells = await asyncio.gather(
            *[self._run_cell(self._rigidbody_cell, spec, method, h) for method in methods for h in steps]
        )
        frame = pd.concat([cell[0] for cell in cells], ignore_index=True)
        summaries = [cell[1] for cell in cells]
        self.write_table(frame, spec)
        summary_frame = pd.DataFrame(summaries).drop(columns="wall_time")
        if spec.out:
            stem, ext = os.path.splitext(spec.out)
            self.write_table(summary_frame, spec, path=f"{stem}_summary{ext or '.' + spec.format}")
        for row in summaries:
            logger.info(f"{row['method']} h={row['h']}: energy band {row['energy_band']:.3e}, "
                        f"momentum energy band {row['momentum_energy_band']:.3e}, "
                        f"ortho {row['max_ortho_error']:.3e}, momentum {row['max_momentum_error']:.3e}, "
                        f"wall time {row['wall_time']:.3f}s")
        result = {"command": spec.command, "T": spec.T, "cells": summaries}
        self.history.append(result)
        return self._sanitize_data(result)

    async def run(self, spec: ExperimentSpec) -> Dict[str, Any]:
        """Dispatch on spec.command."""
        handlers = {
            "integrate": self.run_integrate,
            "energy": self.run_energy,
            "converge": self.run_convergence,
            "rigidbody": self.run_rigidbody,
        }
        return await handlers[spec.command](spec)

    async def get_status(self) -> Dict[str, Any]:
        return {"configuration": self.config, "runs_completed": len(self.history)}


def energy_statistics(t: np.ndarray, energy_error: np.ndarray, early_steps: int = 10) -> Dict[str, float]:
    """
    Energy-error summary.

    Returns:
        max_abs_energy_error, early_max_abs_energy_error (first early_steps
        steps), energy_band (max - min) and drift_per_unit_time (least-squares
        slope of the error against t)
    """
    abs_error = np.abs(energy_error)
    drift = float(np.polyfit(t, energy_error, 1)[0]) if t.size >= 2 else 0.0
    return {
        "max_abs_energy_error": float(abs_error.max()),
        "early_max_abs_energy_error": float(abs_error[: early_steps + 1].max()),
        "energy_band": float(energy_error.max() - energy_error.min()),
        "drift_per_unit_time": drift,
    }


def symplecticity_error(step: Callable[[np.ndarray], np.ndarray], states: Sequence[np.ndarray],
                        delta: float = 1e-3) -> float:
    """
    Largest ||D^T Omega D - Omega|| over the given phase-space points.

    D is the central-difference Jacobian of the step map z = (q, p) -> z'.
    """
    worst = 0.0
    for z in states:
        z = np.asarray(z, dtype=float)
        n = z.size
        m = n // 2
        omega = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
        columns = [(step(z + delta * e) - step(z - delta * e)) / (2.0 * delta) for e in np.eye(n)]
        D = np.column_stack(columns)
        worst = max(worst, float(np.linalg.norm(D.T @ omega @ D - omega)))
    return worst
