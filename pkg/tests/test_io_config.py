import numpy as np
import pytest
from hypothesis import given, strategies as st

from mondeq import dynamics as dyn
from mondeq.config import RunConfig, load_config, parse_config
from mondeq.equilibrium import SolverOptions, shoot
from mondeq.errors import ValidationError
from mondeq.functionals import AnsatzFunction
from mondeq.interpolation import Family
from mondeq.io import SNAPSHOT_MAGIC, fmt, read_shells, read_snapshot, write_csv, write_shells, write_snapshot
from mondeq.radial import PotentialNormalization


@pytest.fixture(scope="module")
def small_model(sqrt_f):
    return shoot(AnsatzFunction.fluid(1.0, 0.5), 0.5, sqrt_f,
                 SolverOptions(resolution=300, normalization=PotentialNormalization.CENTER_ZERO))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_floats(x):
    assert float(fmt(x)) == x


def test_fmt_integers():
    assert fmt(3) == "3" and fmt(np.int64(7)) == "7" and fmt(0.1) == "0.10000000000000001"


def test_csv_timestamp_toggle(tmp_path):
    p = write_csv(tmp_path / "a" / "x.csv", ("a", "b"), [(1, 0.5), ("s", 2.0)])
    assert p.read_text() == "a,b\n1,0.5\ns,2\n"
    q = write_csv(tmp_path / "y.csv", ("a",), [(1,)], timestamp=True)
    assert q.read_text().startswith("# generated ")


def test_snapshot_roundtrip(tmp_path, small_model):
    p = write_snapshot(tmp_path / "m.snapshot", small_model)
    text = p.read_text()
    assert text.startswith(SNAPSHOT_MAGIC + "\n")
    for key in ("central_value", "cutoff_energy", "ansatz", "lambda.family"):
        assert f"# {key}: " in text
    m = read_snapshot(p)
    assert np.array_equal(m.density.grid, small_model.density.grid)
    assert np.array_equal(m.density.rho, small_model.density.rho)
    assert m.cutoff_energy == small_model.cutoff_energy
    assert m.fields.normalization is PotentialNormalization.CENTER_ZERO
    assert m.ansatz == small_model.ansatz and m.interp.family is Family.SQRT
    # writing again gives identical bytes
    assert write_snapshot(tmp_path / "m2.snapshot", m).read_text() == text


@pytest.mark.parametrize("damage", ["magic", "column", "number", "short", "header", "energy"])
def test_corrupted_snapshot_rejected(tmp_path, small_model, damage):
    p = write_snapshot(tmp_path / "m.snapshot", small_model)
    lines = p.read_text().splitlines()
    body = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
    if damage == "magic":
        lines[0] = "# something else"
    elif damage == "column":
        parts = lines[body + 20].split()
        parts[7] = fmt(float(parts[7]) * 1.01 + 0.1)
        lines[body + 20] = " ".join(parts)
    elif damage == "number":
        lines[body + 5] = lines[body + 5].replace(lines[body + 5].split()[1], "abc", 1)
    elif damage == "short":
        lines[body + 5] = " ".join(lines[body + 5].split()[:-1])
    elif damage == "header":
        lines = [ln for ln in lines if not ln.startswith("# lambda.family")]
    elif damage == "energy":
        lines = [("# cutoff_energy: 12.5" if ln.startswith("# cutoff_energy") else ln) for ln in lines]
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValidationError):
        read_snapshot(p)


def test_missing_snapshot(tmp_path):
    with pytest.raises(ValidationError):
        read_snapshot(tmp_path / "nope")


def test_shell_table_roundtrip(tmp_path):
    e = dyn.ShellEnsemble([0.3, 0.1, 0.2], [0.1, -0.2, 0.3], [0.0, 0.5, 1.0], [1.0, 2.0, 3.0])
    out = read_shells(write_shells(tmp_path / "s.csv", e))
    for name in ("r", "v_r", "L", "w"):
        assert np.array_equal(getattr(out, name), getattr(e, name))
    (tmp_path / "bad.csv").write_text("r,v\n1,2\n")
    with pytest.raises(ValidationError):
        read_shells(tmp_path / "bad.csv")


def test_config_defaults_and_derived_objects():
    cfg = RunConfig()
    assert cfg.interpolation().family is Family.SQRT
    assert cfg.ansatz() == AnsatzFunction.fluid(1.0, 0.5)
    assert cfg.solver_options().resolution == 2000
    assert dict(cfg.items())["dynamics.dt_frac"] == 1 / 2000


def test_parse_config_text():
    cfg = parse_config("""
        # comment line
        lambda.family = simple   # trailing comment
        lambda.a0 = 2
        grid.resolution = 500
        ansatz.kind = kinetic
        ansatz.exponent = 0.5
        ansatz.coefficient = 1
        dynamics.n = 1e4
        potential.normalization = center_zero
    """)
    assert cfg.lambda_family == "simple" and cfg.lambda_a0 == 2.0
    assert cfg.grid_resolution == 500 and cfg.dynamics_n == 10_000
    assert cfg.ansatz().kind.value == "kinetic"


@pytest.mark.parametrize("text", [
    "lambda.famly = sqrt",
    "lambda.family = cubic",
    "grid.resolution = 10.5",
    "lambda.a0 = -1",
    "solver.rtol = 0",
    "ansatz.exponent = 3",
    "ansatz.kind = kinetic\nansatz.exponent = 2",
    "no equals sign here",
    "dynamics.dt_frac = nan",
])
def test_parse_config_rejects(text):
    with pytest.raises(ValidationError):
        parse_config(text)


def test_load_config_with_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("dynamics.seed = 4\noutput.dir = results\n")
    cfg = load_config(str(p), {"dynamics_seed": 9, "lambda_a0": None})
    assert cfg.dynamics_seed == 9 and cfg.output_dir == "results" and cfg.lambda_a0 == 1.0
    with pytest.raises(ValidationError):
        load_config(str(tmp_path / "missing.cfg"))
