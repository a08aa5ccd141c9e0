import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Dict, List

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)


class BaseIntegrator(ABC):
    """Base class for all integrators in the benchmark."""

    def __init__(self, name: str):
        self.name = name
        self.logger = logging.getLogger(name)
        self.last_newton_iterations = 0
        self.iteration_log: List[int] = []

    @abstractmethod
    def step(self, state: Any, h: float) -> Any:
        """Advance the state by one step of size h."""
        pass

    def reset(self) -> None:
        """Drop warm-start data carried between steps."""
        self.last_newton_iterations = 0
        self.iteration_log = []

    def integrate(self, state0: Any, h: float, n_steps: int) -> List[Any]:
        """
        Run n_steps steps from state0.

        Args:
            state0: Initial state
            h: Step size
            n_steps: Number of steps

        Returns:
            States at every step, state0 included
        """
        self.reset()
        states = [state0]
        state = state0
        for _ in range(n_steps):
            self.last_newton_iterations = 0
            state = self.step(state, h)
            self.iteration_log.append(self.last_newton_iterations)
            states.append(state)
        return states

    def run(self, state0: Any, h: float, n_steps: int) -> Dict[str, Any]:
        """Integrate and log the run."""
        started = time.perf_counter()
        states = self.integrate(state0, h, n_steps)
        elapsed = time.perf_counter() - started
        self.logger.info(f"Integrator: {self.name} - {n_steps} steps of h={h} in {elapsed:.3f}s")
        return {"states": states, "newton_iters": list(self.iteration_log), "wall_time": elapsed}
