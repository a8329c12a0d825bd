import json
import subprocess
import sys

import numpy as np
import pytest

from demixkit.cli import ConfigError, main, parse_config


def write(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return str(path)


# --- parse_config -------------------------------------------------------------------


def test_parse_sdim_example():
    cfg = parse_config('{"command":"sdim","cone":{"kind":"orthant","d":64},"samples":20000,"seed":7}')
    assert cfg.command == "sdim" and cfg.seed == 7 and cfg.params["samples"] == 20000


def test_missing_command_is_named():
    with pytest.raises(ConfigError, match="'command'"):
        parse_config("{}")


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="unknownKey"):
        parse_config('{"command":"demix","unknownKey":1,"observation":[1],"components":[{"gauge":"L1"}]}')
    with pytest.raises(ConfigError, match="typo"):
        parse_config('{"command":"sdim","cone":{"kind":"orthant","d":4,"typo":1}}')
    with pytest.raises(ConfigError, match="rh0"):
        parse_config('{"command":"sdim","cone":{"kind":"orthant","d":4},"solver":{"rh0":1}}')


def test_malformed_json_reports_line_and_column():
    with pytest.raises(ConfigError, match=r"line 2, column 5"):
        parse_config('{"command": "sdim",\n    ,}')


def test_solver_defaults():
    cfg = parse_config('{"command":"sdim","cone":{"kind":"orthant","d":4},"solver":{"rho":2}}')
    assert cfg.solver.rho == 2.0
    assert cfg.solver.max_iter == 5000
    assert cfg.solver.primal_tol == 1e-8 and cfg.solver.dual_tol == 1e-8
    with pytest.raises(ConfigError):
        parse_config('{"command":"sdim","cone":{"kind":"orthant","d":4},"solver":{"rho":-1}}')


def test_demo_params_are_strict():
    parse_config('{"command":"demo","name":"doa","params":{"snr_db":-5}}')
    with pytest.raises(ConfigError, match="snr"):
        parse_config('{"command":"demo","name":"doa","params":{"snr":-5}}')
    with pytest.raises(ConfigError, match="unknown demo"):
        parse_config('{"command":"demo","name":"nope"}')


def test_type_errors():
    with pytest.raises(ConfigError):
        parse_config('{"command":"sdim","cone":{"kind":"orthant","d":4},"seed":"x"}')
    with pytest.raises(ConfigError):
        parse_config('[1, 2]')
    with pytest.raises(ConfigError):
        parse_config(b'\xff\xfe')


# --- main / exit codes ---------------------------------------------------------------


def test_sdim_run(tmp_path):
    cfg = write(tmp_path, {"command": "sdim", "cone": {"kind": "subspace", "k": 16, "d": 64}, "samples": 20000})
    assert main(["sdim", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "sdim.csv").read_text().splitlines()
    assert lines[0] == "cone,d,samples,mean,stderr"
    assert lines[1].startswith("subspace(k=16),64,20000,")


def test_seed_and_threads_flags(tmp_path, monkeypatch):
    cfg = write(tmp_path, {"command": "sdim", "cone": {"kind": "descent_l1", "s": 4, "d": 32}, "samples": 6000})
    assert main(["sdim", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "3", "--threads", "3"]) == 0
    monkeypatch.setenv("DEMIXKIT_THREADS", "2")
    assert main(["sdim", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "3"]) == 0
    assert main(["sdim", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "4"]) == 0
    a = (tmp_path / "a" / "sdim.csv").read_bytes()
    assert a == (tmp_path / "b" / "sdim.csv").read_bytes()
    assert a != (tmp_path / "c" / "sdim.csv").read_bytes()
    monkeypatch.setenv("DEMIXKIT_THREADS", "zero")
    assert main(["sdim", "--config", cfg, "--out", str(tmp_path / "d")]) == 2


def test_demix_run(tmp_path):
    d = 8
    from demixkit.operators import Dct

    z0 = np.eye(d)[2] + Dct(d).adjoint(np.eye(d)[4])
    cfg = write(tmp_path, {
        "command": "demix",
        "observation": z0.tolist(),
        "components": [{"gauge": "L1"}, {"gauge": "L1", "weight": 1.0, "transform": {"kind": "dct", "d": d}}],
    })
    out = tmp_path / "o"
    assert main(["demix", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "Converged" and summary["kkt_max_violation"] < 1e-6
    rows = (out / "components.csv").read_text().splitlines()
    assert rows[0] == "component,index,value" and len(rows) == 1 + 2 * d


def test_demix_with_measurement(tmp_path):
    cfg = write(tmp_path, {
        "command": "demix",
        "observation": np.convolve([1.0, 2.0], [3.0, -1.0, 0.5]).tolist(),
        "components": [{"gauge": "Schatten1"}],
        "measurement": {"kind": "conv_lift", "m": 2, "d": 3},
        "solver": {"max_iter": 50000, "primal_tol": 1e-10, "dual_tol": 1e-10},
    })
    assert main(["demix", "--config", cfg, "--out", str(tmp_path / "o")]) == 0


@pytest.mark.parametrize("name", ["spikes-sines", "texture", "doa", "blind-deconv"])
def test_demo_runs_are_byte_identical(tmp_path, name):
    params = {"doa": {"runs": 2}, "spikes-sines": {"d": 64, "s_spike": 4, "s_dct": 4}}.get(name, {})
    cfg = write(tmp_path, {"command": "demo", "name": name, "params": params, "seed": 5})
    outs = []
    for tag in ("a", "b"):
        assert main(["demo", "--config", cfg, "--out", str(tmp_path / tag)]) == 0
        outs.append(sorted(p.name for p in (tmp_path / tag).iterdir()))
    assert outs[0] == outs[1]
    for fname in outs[0]:
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()


def test_phase_diagram_run(tmp_path):
    cfg = write(tmp_path, {
        "command": "phase-diagram", "d": 16, "sparsities": [1, 8], "trials": 3, "delta_samples": 500,
    })
    out = tmp_path / "o"
    assert main(["phase-diagram", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "phase.csv").read_text().splitlines()
    assert lines[0] == "s_x,s_y,success_rate,delta" and len(lines) == 5
    assert (out / "phase.svg").read_text().startswith("<?xml")


def test_exit_code_config_errors(tmp_path):
    assert main(["sdim", "--config", write(tmp_path, "{}")]) == 2
    assert main(["sdim", "--config", write(tmp_path, '{"command": ')]) == 2
    demix_cfg = write(tmp_path, {"command": "demix", "observation": [1.0], "components": [{"gauge": "L1"}, {"gauge": "L1"}]})
    assert main(["sdim", "--config", demix_cfg]) == 2
    bad_gauge = write(tmp_path, {"command": "demix", "observation": [1.0], "components": [{"gauge": "L7"}, {"gauge": "L1"}]})
    assert main(["demix", "--config", bad_gauge, "--out", str(tmp_path)]) == 2
    assert main(["frobnicate", "--config", demix_cfg]) == 2


def test_exit_code_numerical_failure(tmp_path):
    cfg = write(tmp_path, '{"command":"demix","observation":[NaN, 1.0],"components":[{"gauge":"L1"},{"gauge":"L1"}]}')
    assert main(["demix", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_exit_code_io_errors(tmp_path):
    assert main(["sdim", "--config", str(tmp_path / "missing.json")]) == 4
    cfg = write(tmp_path, {"command": "sdim", "cone": {"kind": "orthant", "d": 4}, "samples": 200})
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["sdim", "--config", cfg, "--out", str(blocker / "sub")]) == 4
    bad_pgm = tmp_path / "bad.pgm"
    bad_pgm.write_bytes(b"P5\n9 9\n255\n")
    tex = write(tmp_path, {"command": "demo", "name": "texture", "params": {"image": str(bad_pgm)}}, "t.json")
    assert main(["demo", "--config", tex, "--out", str(tmp_path / "t")]) == 4


def test_console_script_entry_point(tmp_path):
    cfg = write(tmp_path, {"command": "sdim", "cone": {"kind": "orthant", "d": 8}, "samples": 200})
    proc = subprocess.run(
        [sys.executable, "-m", "demixkit.cli", "sdim", "--config", cfg, "--out", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "demixkit.cli", "sdim", "--config", write(tmp_path, "{}", "e.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "command" in proc.stderr
