import pytest

from models.config import Command, NumericsConfig
from models.errors import ConfigError
from models.hbar_estimate import Method
from services.config import ConfigManager, _env_flag, parse_config, render_config


def test_env_flag_unset_uses_default(monkeypatch):
    monkeypatch.delenv("NTFY_ENABLED", raising=False)
    assert _env_flag("NTFY_ENABLED", True) is True
    assert _env_flag("NTFY_ENABLED", False) is False


def test_env_flag_truthy(monkeypatch):
    for value in ("true", "1", "yes", "on", "TRUE"):
        monkeypatch.setenv("NTFY_ENABLED", value)
        assert _env_flag("NTFY_ENABLED", False) is True


def test_env_flag_falsy(monkeypatch):
    for value in ("false", "0", "no", "off", ""):
        monkeypatch.setenv("NTFY_ENABLED", value)
        assert _env_flag("NTFY_ENABLED", True) is False


def _clear_env(monkeypatch):
    for name in ("GFLAME_OUTPUT_DIR", "GFLAME_WORKERS", "NTFY_ENABLED", "NTFY_SERVER", "NTFY_TOPIC"):
        monkeypatch.delenv(name, raising=False)


def test_config_manager_reads_yaml(tmp_path, monkeypatch):
    _clear_env(monkeypatch)
    monkeypatch.chdir(tmp_path)
    path = tmp_path / "config.yaml"
    path.write_text(
        "numerics:\n  grid: 64\n  workers: 2\noutput_dir: results\n"
        "audit:\n  log_path: results/runs.jsonl\nntfy:\n  enabled: true\n  topic: flames\n"
    )

    config = ConfigManager(str(path)).config

    assert config.numerics.grid == 64
    assert config.numerics.workers == 2
    assert config.numerics.n_angles == 64
    assert config.output_dir == "results"
    assert config.audit.log_path == "results/runs.jsonl"
    assert config.audit.summary_path == "output/last_run.txt"
    assert config.ntfy.enabled is True
    assert config.ntfy.topic == "flames"


def test_config_manager_env_overrides(tmp_path, monkeypatch):
    _clear_env(monkeypatch)
    monkeypatch.chdir(tmp_path)
    path = tmp_path / "config.yaml"
    path.write_text("output_dir: results\nntfy:\n  enabled: true\n  topic: flames\n")
    monkeypatch.setenv("GFLAME_OUTPUT_DIR", "elsewhere")
    monkeypatch.setenv("GFLAME_WORKERS", "8")
    monkeypatch.setenv("NTFY_ENABLED", "off")
    monkeypatch.setenv("NTFY_TOPIC", "other")

    config = ConfigManager(str(path)).config

    assert config.output_dir == "elsewhere"
    assert config.numerics.workers == 8
    assert config.ntfy.enabled is False
    assert config.ntfy.topic == "other"


def test_config_manager_missing_file_uses_defaults(tmp_path, monkeypatch):
    _clear_env(monkeypatch)
    monkeypatch.chdir(tmp_path)
    config = ConfigManager(str(tmp_path / "absent.yaml")).config
    assert config.numerics == NumericsConfig()
    assert config.ntfy.enabled is False


def test_parse_evolve_config():
    run = parse_config("command=evolve\nA=2\nd=0.1\np1=1\np2=0\ngrid=128\nT=40")

    assert run.command is Command.EVOLVE
    assert (run.A, run.d, run.p, run.grid, run.T) == (2.0, 0.1, (1.0, 0.0), 128, 40.0)


def test_parse_skips_comments_and_blank_lines():
    run = parse_config("# laminar check\n\ncommand=hbar\n  methods = front_speed, game \nlambdas=0.4 0.2\n")

    assert run.methods == (Method.FRONT_SPEED, Method.GAME)
    assert run.lambdas == (0.4, 0.2)


def test_negative_amplitude_names_the_rule():
    with pytest.raises(ConfigError, match=r"line 2: A must be >= 0"):
        parse_config("command=evolve\nA=-1")


def test_non_finite_values_are_rejected():
    with pytest.raises(ConfigError, match=r"line 2: A must be finite"):
        parse_config("command=hbar\nA=inf\n")
    with pytest.raises(ConfigError, match=r"line 3: lambdas must be finite"):
        parse_config("command=hbar\nA=1\nlambdas=0.2,nan\n")


def test_game_burn_in_must_precede_horizon():
    with pytest.raises(ConfigError, match=r"line 3: game_burn_in must lie in \[0, game_T\)"):
        parse_config("command=game\ngame_T=2\ngame_burn_in=2\n")
    assert parse_config("command=game\ngame_T=2\ngame_burn_in=0.5\n").game_burn_in == 0.5


def test_empty_file_is_missing_command():
    with pytest.raises(ConfigError, match="missing command"):
        parse_config("")


def test_unknown_command():
    with pytest.raises(ConfigError, match="unknown command 'plot'"):
        parse_config("command=plot")


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r"line 3: unknown key 'seed'"):
        parse_config("command=evolve\nA=1\nseed=4")


def test_malformed_value():
    with pytest.raises(ConfigError, match="malformed value for grid"):
        parse_config("command=evolve\ngrid=large")


def test_line_without_equals():
    with pytest.raises(ConfigError, match="expected key=value"):
        parse_config("command=evolve\nA 2")


def test_duplicate_key():
    with pytest.raises(ConfigError, match=r"line 3: duplicate key 'A'"):
        parse_config("command=evolve\nA=1\nA=2")


def test_lambdas_must_decrease():
    with pytest.raises(ConfigError, match="strictly decreasing"):
        parse_config("command=hbar\nmethods=discounted\nlambdas=0.05,0.1")


def test_grid_lower_bound():
    with pytest.raises(ConfigError, match="grid must be >= 16"):
        parse_config("command=evolve\ngrid=8")


def test_sweep_requires_amplitudes():
    with pytest.raises(ConfigError, match="missing required key A_list"):
        parse_config("command=sweep\nd=0")


def test_burn_in_must_precede_horizon_for_front_speed():
    with pytest.raises(ConfigError, match="burn_in"):
        parse_config("command=hbar\nT=5\nburn_in=5")
    assert parse_config("command=evolve\nT=5\nburn_in=5").T == 5.0


def test_thetas_inside_margin():
    with pytest.raises(ConfigError, match="thetas"):
        parse_config("command=appendix-check\ndelta=0.4\nthetas=0.3,0.5")


def test_defaults_fill_numerics():
    defaults = NumericsConfig(grid=64, n_angles=32, tol=1e-6)
    run = parse_config("command=game\ngrid=32", defaults)

    assert run.grid == 32
    assert run.n_angles == 32
    assert run.tol == 1e-6


def test_render_round_trips():
    run = parse_config(
        "command=sweep\nA_list=2,4,8\nd=0.05\nmethods=front_speed,discounted\nacceptance_tol=0.1\noutput=out.csv"
    )
    assert parse_config(render_config(run)) == run
