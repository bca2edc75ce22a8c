import json

import numpy as np
import pytest

from lyapboussinesq.config import load_config, parse_config
from lyapboussinesq.errors import ConfigError, SnapshotFormatError
from lyapboussinesq.grid import build_grid
from lyapboussinesq.report import Report, plain
from lyapboussinesq.snapshot import read_snapshot, write_snapshot

MINIMAL = {"domain": {"L0": 0, "L1": 1}, "grid": {"J": 10}, "initial": {"profile": "cosine"}}


def doc(**sections):
    d = json.loads(json.dumps(MINIMAL))
    for name, values in sections.items():
        d.setdefault(name, {}).update(values)
    return json.dumps(d)


def test_defaults_filled():
    cfg = parse_config(json.dumps(MINIMAL))
    assert cfg.scheme.alpha == 0.25 and cfg.scheme.right_transpose is False
    assert cfg.coupling.s == 1.0 and cfg.coupling.eps == 1.0
    assert cfg.solver.tol == 1e-12 and cfg.solver.method == "fixed_point"
    # coupled l = 1 * 0.1**3
    assert cfg.coupling.l == pytest.approx(0.001, rel=1e-12)
    echoed = json.loads(cfg.echo())
    assert echoed["coupling"]["l"] == pytest.approx(0.001, rel=1e-12)


def test_echo_is_deterministic():
    a = parse_config(doc(run={"n_steps": 3})).echo()
    b = parse_config(doc(run={"n_steps": 3})).echo()
    assert a == b
    assert parse_config(a).echo() == a


def test_alpha_out_of_range():
    with pytest.raises(ConfigError, match=r"scheme\.alpha ∉ \[0, 0\.5\]"):
        parse_config(doc(scheme={"alpha": 0.7}))


@pytest.mark.parametrize("text,needle", [
    (doc(scheme={"theta": 1}), "scheme.theta"),
    (json.dumps({**MINIMAL, "extra": {}}), "unknown key extra"),
    (json.dumps({"domain": {"L0": 0, "L1": 1}, "grid": {"J": 4}}), "initial"),
    (doc(grid={"J": 1}), "grid.J"),
    (doc(grid={"J": 2.5}), "grid.J"),
    (doc(domain={"L0": 1, "L1": 0}), "L1 > L0"),
    (doc(coupling={"mode": "explicit"}), "coupling.l"),
    (doc(solver={"method": "gmres"}), "solver.method"),
    (doc(initial={"profile": "gauss"}), "initial.profile"),
    (doc(scheme={"right_transpose": 1}), "true or false"),
])
def test_validation_messages(text, needle):
    with pytest.raises(ConfigError, match=needle.replace(".", r"\.")):
        parse_config(text)


def test_json_error_position():
    with pytest.raises(ConfigError, match="line 2, column"):
        parse_config('{"domain": {"L0": 0,\n "L1": }}')


def test_explicit_mode_keeps_l():
    cfg = parse_config(doc(coupling={"mode": "explicit", "l": 0.1}))
    g = cfg.build_grid()
    assert g.l == 0.1 and g.sigma == pytest.approx(1.0) and not g.coupled


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(MINIMAL))
    assert load_config(p).grid.J == 10


def test_snapshot_zero_J2(tmp_path):
    g = build_grid(0, 1, 2)
    p = tmp_path / "z.csv"
    write_snapshot(np.zeros((3, 3)), 0.0, g, p)
    lines = p.read_text().splitlines()
    assert lines[0].startswith("# t=0 J=2 h=0.5")
    assert lines[1:] == ["0,0,0"] * 3
    field, t, meta = read_snapshot(p)
    np.testing.assert_array_equal(field, 0.0)
    assert t == 0.0 and meta["J"] == 2


def test_snapshot_constant_exact(tmp_path):
    g = build_grid(0, 1, 3)
    p = tmp_path / "c.csv"
    write_snapshot(np.full((4, 4), 0.3), 0.1, g, p)
    for line in p.read_text().splitlines()[1:]:
        assert all(float(tok) == 0.3 for tok in line.split(","))


def test_snapshot_round_trip(tmp_path, rng):
    g = build_grid(-1, 2, 7)
    U = rng.standard_normal((8, 8)) * 10.0 ** rng.integers(-300, 300, (8, 8))
    p = tmp_path / "r.csv"
    write_snapshot(U, 1 / 3, g, p)
    field, t, meta = read_snapshot(p)
    np.testing.assert_array_equal(field, U)
    assert t == 1 / 3 and meta == {"J": 7, "h": g.h, "L0": -1.0, "L1": 2.0}


def test_snapshot_truncated(tmp_path):
    g = build_grid(0, 1, 2)
    p = tmp_path / "t.csv"
    write_snapshot(np.ones((3, 3)), 0.0, g, p)
    p.write_text("\n".join(p.read_text().splitlines()[:-1]) + "\n")
    with pytest.raises(SnapshotFormatError, match="expected 3 data rows"):
        read_snapshot(p)


def test_snapshot_short_row(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("# t=0 J=1 h=1 L0=0 L1=1\n1,2\n3\n")
    with pytest.raises(SnapshotFormatError, match="line 3"):
        read_snapshot(p)


def test_snapshot_foreign_header(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("x,y,z\n1,2,3\n")
    with pytest.raises(SnapshotFormatError, match="line 1"):
        read_snapshot(p)


def test_snapshot_shape_checked(tmp_path):
    with pytest.raises(ValueError):
        write_snapshot(np.zeros((2, 2)), 0.0, build_grid(0, 1, 2), tmp_path / "x.csv")


def test_report_round_trip():
    r = Report("oracle", {"a": np.float64(1.5), "b": [np.int64(2)], "c": float("inf")},
               {"seed": 3, "timestamp": "2020-01-01T00:00:00Z"})
    text = r.to_json()
    again = Report.from_json(text)
    assert again.to_json() == text
    assert json.loads(text)["payload"]["c"] == "inf"
    with pytest.raises(ValueError):
        Report("bogus", {})


def test_plain_converts_nested():
    assert plain({"x": (np.bool_(True), np.array([1.0, np.nan]))}) == {"x": [True, [1.0, "nan"]]}


def test_timestamp_pinned(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    assert Report("run", {}).metadata["timestamp"] == "1970-01-01T00:00:00Z"
