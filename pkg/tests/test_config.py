import logging
import os

import pytest

from cnst.mask_kind import MaskKind
from cnst.operator_kind import OperatorKind
from core.config import AppConfig, load_app_config, load_config, parse_config, require_keys
from core.errors import ConfigError
from core.logging_config import setup_logging, setup_trace_logger
from util.parallel import THREADS_ENV, max_workers, parallel_map


def test_shipped_config_parses():
    config = parse_config(load_config(os.path.join(os.path.dirname(__file__), "..", "config.yaml")))
    assert config.regularizer.knot_count == 101
    assert config.regularizer.epsilon == 0.01
    assert config.mask.kind == MaskKind.LOCAL_RESPONSE.value


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(str(tmp_path / "absent.yaml"))
    assert info.value.key.endswith("absent.yaml")


def test_malformed_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("problem: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_unknown_key_is_named():
    with pytest.raises(ConfigError) as info:
        parse_config({"problem": {"bogus": 1}})
    assert info.value.key == "problem.bogus"


def test_invalid_values_are_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config({"problem": {"operator": "warp"}})
    assert info.value.key == "problem.operator"
    with pytest.raises(ConfigError):
        parse_config({"regularizer": {"c_cvx": 2}})
    with pytest.raises(ConfigError):
        parse_config({"problem": {"limited_angle_fraction": 1.0}})
    with pytest.raises(ConfigError):
        parse_config({"train": {"sigma_min": 0.2, "sigma_max": 0.1}})


def test_defaults():
    config = AppConfig()
    assert config.problem.operator == OperatorKind.IDENTITY.value
    assert config.train.lr_decay_epochs == 0
    assert config.logging.directory is None


def test_require_keys():
    raw = {"problem": {"lam": 1.0, "sigma": None}}
    require_keys(raw, ["problem.lam"])
    with pytest.raises(ConfigError) as info:
        require_keys(raw, ["problem.sigma"])
    assert info.value.key == "problem.sigma"
    with pytest.raises(ConfigError):
        require_keys(raw, ["train.epochs"])


def test_load_app_config(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("problem:\n  lam: 2.5\n")
    assert load_app_config(str(path), ["problem.lam"]).problem.lam == 2.5
    with pytest.raises(ConfigError):
        load_app_config(str(path), ["problem.operator"])


def test_max_workers_reads_the_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert max_workers() == 3
    monkeypatch.setenv(THREADS_ENV, "many")
    assert max_workers() == (os.cpu_count() or 1)
    monkeypatch.setenv(THREADS_ENV, "0")
    assert max_workers() == (os.cpu_count() or 1)


def test_parallel_map_keeps_order(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "4")
    assert parallel_map(lambda k: k * k, range(20)) == [k * k for k in range(20)]
    monkeypatch.setenv(THREADS_ENV, "1")
    assert parallel_map(str, [3, 1, 2]) == ["3", "1", "2"]


def test_trace_logger_does_not_propagate(tmp_path):
    trace = setup_trace_logger(str(tmp_path))
    assert trace is logging.getLogger("training.trace")
    assert not trace.propagate
    assert trace.handlers


def test_trace_logger_falls_back_to_the_console():
    trace = setup_trace_logger(None)
    assert not trace.propagate
    assert len(trace.handlers) == 1
    assert isinstance(trace.handlers[0], logging.StreamHandler)
    assert not isinstance(trace.handlers[0], logging.FileHandler)


def test_trace_logger_switches_to_a_file(tmp_path):
    setup_trace_logger(None)
    trace = setup_trace_logger(str(tmp_path))
    assert len(trace.handlers) == 1
    assert isinstance(trace.handlers[0], logging.FileHandler)
    trace.info("0 1.0e-01 2.0e-02")
    trace.handlers[0].flush()
    assert "0 1.0e-01 2.0e-02" in (tmp_path / "training_trace.log").read_text()
    setup_trace_logger(None)


def test_setup_logging_always_installs_the_trace_logger():
    logging.getLogger("training.trace").handlers.clear()
    setup_logging()
    assert logging.getLogger("training.trace").handlers
