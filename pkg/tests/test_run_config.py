# -*- coding: utf-8 -*-
import json

import numpy as np
import pytest

from spectral_core import to_spectral
from operators import GevreyIndex
from solver import Integrator
from diagnostics import BourgainIndex
from run_config import (
    DEFAULT_SETTINGS, ConfigError, build_run_config, config_hash, deep_merge,
    load_run_config, parse_run_config, parse_text,
)


def test_defaults_build():
    config = build_run_config(DEFAULT_SETTINGS)
    assert config.model.p == 1 and config.model.l == 0.5
    assert config.grid.n_points == 512
    assert config.solver.integrator is Integrator.ETDRK4
    assert config.diagnostics.radius is not None
    assert config.diagnostics.gevrey == []
    assert config.study.sigmas == [0.4, 0.2, 0.1, 0.05]
    assert config.log_level == 'INFO'
    assert len(config.hash) == 64


def test_text_format_with_comments():
    config = parse_run_config(
        "# 小网格\n"
        "model.p = 3   # 三次\n"
        "grid.n_points = 64\n"
        "\n"
        "diagnostics.gevrey = 0.1:1, 0.2\n"
        "diagnostics.bourgain = 0.1:0:0.6\n"
        "output.spectra = yes\n"
        "solver.integrator = ifrk4\n"
    )
    assert config.model.p == 3
    assert config.diagnostics.gevrey == [GevreyIndex(0.1, 1.0), GevreyIndex(0.2, 0.0)]
    assert config.diagnostics.bourgain == [BourgainIndex(0.1, 0.0, 0.6)]
    assert config.output.spectra is True
    assert config.solver.integrator is Integrator.IFRK4
    assert config.lines['grid.n_points'] == 3


@pytest.mark.parametrize("text, line", [
    ("model.p = 1\nmodel.q = 2\n", 2),
    ("model.p = 1\n\nmodel.l 0.5\n", 3),
    ("model.p = 1\nmodel.p = 3\n", 2),
    ("grid.n_points = many\n", 1),
    ("model.p = 1.5\n", 1),
    ("output.spectra = maybe\n", 1),
    ("model = 1\n", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_text(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"<string>:{line}: ")


@pytest.mark.parametrize("text, key", [
    ("grid.n_points = 63\n", 'grid.n_points'),
    ("model.l = 1.0\n", 'model.l'),
    ("diagnostics.gevrey = 40\n", 'diagnostics.gevrey'),
    ("model.p = 2\ninitial_data.type = soliton\n", 'model.p'),
    ("initial_data.type = soliton\ninitial_data.c = -0.01\n", 'initial_data.c'),
    ("initial_data.type = bump\n", 'initial_data.type'),
    ("solver.dt = -0.1\n", 'solver.dt'),
    ("study.kind = other\n", 'study.kind'),
    ("probe.theta_max = 1.5\n", 'probe.theta_max'),
    ("diagnostics.epsilon = 0\n", 'diagnostics.epsilon'),
])
def test_semantic_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_run_config(text)
    assert key in str(info.value)
    assert info.value.line is not None


def test_hash_ignores_run_length_and_output():
    a = parse_run_config("solver.t_end = 1\noutput.directory = a\n")
    b = parse_run_config("solver.t_end = 5\noutput.directory = b\nlogging.level = debug\n")
    c = parse_run_config("solver.dt = 0.002\n")
    assert a.hash == b.hash
    assert a.hash != c.hash
    assert b.log_level == 'DEBUG'
    assert config_hash(deep_merge(DEFAULT_SETTINGS, {})) == config_hash(DEFAULT_SETTINGS)


def test_with_overrides_revalidates():
    base = parse_run_config("grid.n_points = 64\n")
    longer = base.with_overrides({'solver.t_end': 2.0})
    assert longer.solver.t_end == 2.0
    assert longer.hash == base.hash
    assert base.solver.t_end == 1.0
    assert base.with_overrides({'model.p': 2}).hash != base.hash
    with pytest.raises(ConfigError):
        base.with_overrides({'model.l': 2.0})


def test_json_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({'model': {'p': 3}, 'grid': {'n_points': 64}}), encoding='utf-8')
    config = load_run_config(path)
    assert config.model.p == 3 and config.grid.n_points == 64
    path.write_text(json.dumps({'model': {'r': 3}}), encoding='utf-8')
    with pytest.raises(ConfigError):
        load_run_config(path)
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.cfg")


def test_gaussian_spectrum_initial_data():
    config = parse_run_config(
        "grid.n_points = 64\ngrid.length = 6.283185307179586\n"
        "initial_data.type = gaussian_spectrum\ninitial_data.sigma0 = 0.5\ninitial_data.s = 1\n"
    )
    u0 = config.initial_data.build(config.grid, config.model)
    k = config.grid.wavenumbers
    expected = (1.0 + k) ** -1.0 * np.exp(-0.5 * k)
    np.testing.assert_allclose(to_spectral(u0).coeffs.real, expected, atol=1e-12)


def test_file_initial_data(tmp_path):
    path = tmp_path / "u0.txt"
    values = np.linspace(-1.0, 1.0, 16)
    np.savetxt(path, values)
    config = parse_run_config(f"grid.n_points = 16\ninitial_data.type = file\ninitial_data.path = {path}\n")
    u0 = config.initial_data.build(config.grid, config.model)
    np.testing.assert_array_equal(u0.values, values)
    with pytest.raises(ConfigError):
        parse_run_config(f"grid.n_points = 32\ninitial_data.type = file\ninitial_data.path = {path}\n")
    with pytest.raises(ConfigError):
        parse_run_config("initial_data.type = file\ninitial_data.path = nowhere.txt\n")


def test_random_theta_range_includes_zero():
    config = parse_run_config("probe.theta_min = 0\nprobe.theta_max = 0\n")
    assert config.probe.theta_min == 0.0 and config.probe.theta_max == 0.0
    assert build_run_config(DEFAULT_SETTINGS).probe.theta_min == 0.0
    with pytest.raises(ConfigError):
        parse_run_config("probe.theta_min = -0.1\n")
