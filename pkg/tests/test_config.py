import pytest

from homtoc.config import (
    OUTPUT_ENV,
    ConfigError,
    build_problem,
    load_config,
    parse_config,
    settings_of,
    sweep_config_of,
)

MINIMAL = '[problem]\noperator = "diffusion"\nr = 1.0\n'


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_file_gets_defaults(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL))
    assert cfg.problem.n_interior == 255
    assert cfg.problem.omega == [0.3, 0.8]
    assert cfg.solver.n_t == 201
    assert cfg.sweep.epsilons == [0.25, 0.125, 0.0625, 0.03125]
    assert cfg.output == "homtoc_out"
    assert settings_of(cfg).tol_el == 1e-7


def test_unknown_key_named(tmp_path):
    with pytest.raises(ConfigError, match="verify.tolernace"):
        load_config(write(tmp_path, MINIMAL + "[verify]\ntolernace = 1e-6\n"))
    with pytest.raises(ConfigError, match="'extra'"):
        load_config(write(tmp_path, "extra = 1\n" + MINIMAL))


def test_range_violation_shows_value(tmp_path):
    with pytest.raises(ConfigError, match=r"problem\.r = -1 out of range"):
        load_config(write(tmp_path, '[problem]\noperator = "diffusion"\nr = -1\n'))
    with pytest.raises(ConfigError, match="solver.n_t = 200"):
        load_config(write(tmp_path, MINIMAL + "[solver]\nn_t = 200\n"))
    with pytest.raises(ConfigError, match="problem.coefficient"):
        load_config(write(tmp_path, MINIMAL + 'coefficient = "wavy"\n'))


def test_syntax_error_has_line_number(tmp_path):
    with pytest.raises(ConfigError, match="line 3"):
        load_config(write(tmp_path, '[problem]\noperator = "diffusion"\nr = = 1\n'))


def test_missing_file_and_required_keys(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.toml")
    with pytest.raises(ConfigError, match="problem.r"):
        parse_config({"problem": {"operator": "diffusion"}})
    with pytest.raises(ConfigError, match=r"\[problem\]"):
        parse_config({})


def test_output_env_override(tmp_path, monkeypatch):
    cfg = load_config(write(tmp_path, 'output = "here"\n' + MINIMAL))
    assert str(cfg.output_dir) == "here"
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "elsewhere"))
    assert cfg.output_dir == tmp_path / "elsewhere"


def test_dict_roundtrip():
    cfg = parse_config({"problem": {"operator": "modal", "r": 1.0, "eigenvalues": [1.0]}, "time": {"M": 2.0}})
    assert parse_config(cfg.as_dict()) == cfg


def test_builders():
    cfg = parse_config({"problem": {"operator": "modal", "r": 1.0, "eigenvalues": [1.0, 4.0], "n_interior": 31}})
    prob = build_problem(cfg)
    assert prob.op.k_modes == 2
    with pytest.raises(ConfigError):
        sweep_config_of(cfg)
    cfg = parse_config({"problem": {"operator": "reaction", "r": 1.0, "coefficient": "sine_perturbation",
                                    "coefficient_params": {}, "epsilon": 0.25, "n_interior": 31}})
    assert build_problem(cfg).op.lambda_1 > 0
    with pytest.raises(ConfigError, match="bad parameters"):
        build_problem(parse_config({"problem": {"operator": "diffusion", "r": 1.0, "psi_params": {"nope": 1}}}))
