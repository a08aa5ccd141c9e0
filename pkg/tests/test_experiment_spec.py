"""
Tests for experiment specifications and config-file merging.
"""

import numpy as np
import pytest

from errors import InvalidSpec
from experiment_spec import DEFAULT_H_LIST, ExperimentSpec, build_spec, load_config


def test_defaults():
    spec = build_spec("integrate")
    assert spec.system == "pendulum"
    assert spec.method == "svi-mid-trap"
    assert spec.n_steps() == 100
    assert spec.initial_state().q.tolist() == [1.0]
    assert build_spec("converge").step_sizes() == list(DEFAULT_H_LIST)


def test_comma_separated_values():
    spec = build_spec("converge", {"system": "two-particle", "method": "svi-rk4-simpson",
                                   "h_list": "0.4, 0.2,0.1", "q0": "0,1", "p0": "0.5,-0.5"})
    assert spec.step_sizes() == [0.4, 0.2, 0.1]
    assert np.array_equal(spec.initial_state().p, [0.5, -0.5])


def test_rigidbody_command_targets_the_rigid_body():
    spec = build_spec("rigidbody", {"system": "pendulum", "h": 0.2, "T": 30.0})
    assert spec.system == "rigid-body"
    R0, Omega0 = spec.rigid_initial()
    assert np.array_equal(R0, np.eye(3))
    assert np.array_equal(Omega0, [1.0, 1.2, 0.9])
    assert np.allclose(spec.body().J, np.diag([2.0, 2.5, 3.0]))
    assert spec.n_steps() == 150


@pytest.mark.parametrize(
    "command,values",
    [
        ("integrate", {"method": "lgvi-exp"}),
        ("integrate", {"system": "rigid-body", "method": "svi-mid-trap"}),
        ("integrate", {"system": "double-pendulum"}),
        ("integrate", {"h": 0.0}),
        ("integrate", {"h": 0.5, "T": 0.2}),
        ("integrate", {"q0": "1,2"}),
        ("integrate", {"tol": -1e-3}),
        ("converge", {"h_list": "0.1,0.1,0.05"}),
        ("rigidbody", {"inertia": "1,2"}),
        ("integrate", {"format": "xml"}),
        ("integrate", {"system": "rigid-body", "method": "lgvi-exp", "h": 0.6, "T": 1.0}),
        ("rigidbody", {"h_list": "0.2,0.6", "T": 3.0}),
    ],
)
def test_invalid_specifications(command, values):
    with pytest.raises(InvalidSpec):
        build_spec(command, values)


def test_config_file_with_command_line_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("system = sho\nh-list = 0.4,0.2,0.1\n--T = 2\nmethod = svi-rk4-simpson\n")
    config = load_config(str(path))
    assert config["h_list"] == "0.4,0.2,0.1"
    assert config["T"] == "2"
    spec = build_spec("converge", {"T": 3.0, "method": None}, str(path))
    assert spec.system == "sho"
    assert spec.method == "svi-rk4-simpson"
    assert spec.T == 3.0
    assert spec.step_sizes() == [0.4, 0.2, 0.1]


def test_config_file_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour = red\n")
    with pytest.raises(InvalidSpec, match="colour"):
        build_spec("integrate", {}, str(path))
    with pytest.raises(InvalidSpec):
        load_config(str(tmp_path / "missing.cfg"))
    assert load_config(None) == {}


def test_model_accepts_sequences_and_scalars():
    spec = ExperimentSpec(command="converge", system="sho", method="svi-mid-trap", h_list=[0.2, 0.1, 0.05], q0=0.5)
    assert spec.q0 == [0.5]
    assert spec.n_steps(0.05) == 200
