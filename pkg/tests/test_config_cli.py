import numpy as np
import pytest

from martensite1d import cli
from martensite1d.config import (
    Config,
    config_text,
    default_config,
    load_config,
    make_initial,
    make_model,
    make_params,
    parse_config,
    random_compatible_data,
)
from martensite1d.errors import ConfigError
from martensite1d.evolution import prepare_initial

SMALL = """
nodes = 81
t_end = 0.05
dt = 2.5e-3
output_stride = 2
"""


def test_default_config_matches_dataclass_defaults():
    assert default_config() == Config()


def test_parse_values_and_alias():
    cfg = parse_config("lambda = 2.5  # first Lame\nmisfit = 0.1, 0.2 0 0 0 0\ndt = none\nfixed_point = true\n")
    assert cfg.lam == 2.5
    assert cfg.misfit == (0.1, 0.2, 0.0, 0.0, 0.0, 0.0)
    assert cfg.dt is None and cfg.fixed_point is True


def test_config_text_roundtrip():
    cfg = Config(nu=1 / 3, kappa_sequence=(0.3, 0.1 / 3), dt=None, D_upper=tuple(np.arange(21.0)))
    assert parse_config(config_text(cfg)) == cfg


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("nodes = 11\nfoo = 1\n", "<string>:2: unknown key 'foo'"),
        ("nu = 1\nnu = 2\n", "<string>:2: duplicate key 'nu'"),
        ("nodes 11\n", "<string>:1: expected"),
        ("nodes = 1.5\n", "must be an integer"),
        ("kappa = abc\n", "cannot parse kappa"),
        ("kappa = none\n", "may not be none"),
        ("mollify = yes\n", "true or false"),
        ("misfit = 1 2 3\n", "six entries"),
        ("initial = spike\n", "unknown initial"),
        ("kappa_sequence = 0.1 0.2\n", "strictly decreasing"),
    ],
)
def test_parse_errors_name_location(text, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert fragment in str(exc.value)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")


def test_make_params_rejects_indefinite_tensor():
    upper = np.zeros(21)
    upper[0] = -1.0
    with pytest.raises(ConfigError, match="elasticity tensor"):
        make_params(Config(D_upper=tuple(upper)))


@pytest.mark.parametrize("initial", ["bump", "front", "zero"])
def test_initial_profiles_compatible(initial):
    cfg = Config(initial=initial)
    grid = make_model(cfg).grid
    S = make_initial(cfg, grid)
    assert S[0] == S[-1] == 0.0
    prepare_initial(S, cfg.kappa, grid)


def test_random_compatible_data_is_compatible():
    grid = make_model(Config()).grid
    rng = np.random.default_rng(0)
    for _ in range(5):
        S = random_compatible_data(grid, rng)
        assert S[0] == S[-1] == 0.0
        assert np.abs(S).max() > 0
        prepare_initial(S, 0.05, grid)


def _write(tmp_path, text):
    p = tmp_path / "case.cfg"
    p.write_text(text)
    return p


def test_cli_run_writes_outputs_and_is_deterministic(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    for name in ("config.cfg", "diagnostics.csv", "states.csv", "summary.txt"):
        assert (tmp_path / "a" / name).is_file()
    a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
    assert a == (tmp_path / "b" / "diagnostics.csv").read_bytes()
    # the echoed configuration reproduces the run
    echo = load_config(tmp_path / "a" / "config.cfg")
    assert echo == parse_config(SMALL)


def test_cli_overrides(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert cli.main(["run", "--config", str(cfg), "--kappa", "0.1", "--grid", "41", "--out", str(tmp_path / "o")]) == 0
    echo = load_config(tmp_path / "o" / "config.cfg")
    assert echo.kappa == 0.1 and echo.nodes == 41


@pytest.mark.parametrize(
    "text",
    ["t_end = 0\n", "nodes = 11\nbogus\n", "kappa = 2\n", "nodes = 2\n", "scheme = rk4\n"],
)
def test_cli_bad_config_exit_code(tmp_path, text):
    assert cli.main(["run", "--config", str(_write(tmp_path, text)), "--out", str(tmp_path / "o")]) == 2


def test_cli_missing_config_exit_code(tmp_path):
    assert cli.main(["check", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_cli_check_passes(tmp_path, capsys):
    assert cli.main(["check", "--config", str(_write(tmp_path, SMALL))]) == 0
    out = capsys.readouterr().out
    assert "projection_idempotent" in out and "fail" not in out
