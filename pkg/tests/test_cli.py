"""Command-line interface: grammar, exit codes, JSON I/O, reports."""

import json

import pytest

from genimm import cli, qform
from genimm.invariants import ImmersionState5, Component5
from genimm.surfaces import rp3_fixture


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------------------
# dispatch and exit codes


def test_no_arguments_is_a_usage_error(capsys):
    code, _, _ = run(capsys)
    assert code == 2


def test_unknown_command_is_a_usage_error(capsys):
    code, _, _ = run(capsys, "frobnicate")
    assert code == 2


def test_missing_file_is_a_usage_error(capsys):
    code, _, err = run(capsys, "qform", "brown", "--space", "/nonexistent")
    assert code == 2
    assert "/nonexistent" in err


def test_malformed_json_reports_location(capsys, tmp_path):
    bad = tmp_path / "space.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "qform", "brown", "--space", str(bad))
    assert code == 2
    assert "space.json" in err


# ---------------------------------------------------------------------------
# qform / surface


def test_qform_brown_round_trip(capsys, tmp_path):
    space = qform.direct_sum(qform.p_plus(), qform.p_plus())
    path = tmp_path / "space.json"
    path.write_text(space.to_json())
    code, out, _ = run(capsys, "qform", "brown", "--space", str(path),
                       "--json")
    assert code == 0
    data = json.loads(out)
    assert data == {"schema": 1, "dim": 2, "brown": 2}


def test_qform_split_flag(capsys, tmp_path):
    path = tmp_path / "space.json"
    path.write_text(qform.t_zero().to_json())
    code, out, _ = run(capsys, "qform", "split", "--space", str(path))
    assert code == 0 and "yes" in out


def test_surface_info(capsys, tmp_path):
    desc = rp3_fixture().surface
    path = tmp_path / "surface.json"
    path.write_text(desc.to_json())
    code, out, _ = run(capsys, "surface", "info", "--surface", str(path),
                       "--json")
    assert code == 0
    data = json.loads(out)
    assert data["euler"] == 1
    assert data["orientable"] is False
    assert data["beta"] == 1


# ---------------------------------------------------------------------------
# family / numtopo


def test_family_geometry_summary(capsys):
    code, out, _ = run(capsys, "family", "--m", "-1/2", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["m"] == "-1/2"
    assert data["preimage_circles"] == 1
    assert data["preimage_connected"] is True
    assert data["double_point_radius"] == pytest.approx(0.78)


def test_family_integer_member_has_two_circles(capsys):
    code, out, _ = run(capsys, "family", "--m", "2", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["preimage_circles"] == 2
    assert data["preimage_connected"] is False


def test_numtopo_degree_at_missed_value(capsys):
    code, out, _ = run(capsys, "numtopo", "degree", "--m", "1", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["degree"] == 0 and data["preimages"] == 0


def test_numtopo_hopf(capsys):
    code, out, _ = run(capsys, "numtopo", "hopf", "--m", "1/2", "--json")
    assert code == 0
    assert json.loads(out)["hopf"] == -1


def test_numtopo_link_rejects_bad_curve(capsys, tmp_path):
    path = tmp_path / "curve.json"
    path.write_text(json.dumps({"schema": 1, "points": [[0, 0], [1, 1]]}))
    code, _, err = run(capsys, "numtopo", "link", "--m", "1/2",
                       "--curve", str(path))
    assert code == 2
    assert "n x 5" in err


# ---------------------------------------------------------------------------
# invariants


def test_invariants_class_embeddable(capsys):
    code, out, _ = run(capsys, "invariants", "class", "--omega", "24")
    assert code == 0
    assert "embeddable" in out and "sigma=1" in out


def test_invariants_class_generator(capsys):
    code, out, _ = run(capsys, "invariants", "class", "--omega", "1",
                       "--json")
    assert code == 0
    data = json.loads(out)
    assert data["embeddable"] is False
    assert (data["lambda3"], data["beta"]) == (2, 3)


def test_invariants_class_negative_omega(capsys):
    code, out, _ = run(capsys, "invariants", "class", "--omega", "-24",
                       "--json")
    assert code == 0
    assert json.loads(out)["sigma"] == -1


def test_invariants_family_row(capsys):
    code, out, _ = run(capsys, "invariants", "family", "--m", "3/2",
                       "--json")
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row == {"m": "3/2", "omega": -3, "lk": -6, "lambda": 0,
                   "tau": 3, "J": 1, "L": -2, "St": -3,
                   "embeddable": False, "mode": "closed-form"}


def test_invariants_state_file(capsys, tmp_path):
    state = ImmersionState5(1, 2, (Component5(True, 1),))
    path = tmp_path / "state.json"
    path.write_text(state.to_json())
    code, out, _ = run(capsys, "invariants", "state", "--state", str(path),
                       "--json")
    assert code == 0
    data = json.loads(out)
    assert data["lambda"] == 2 and data["St"] == 1 and data["J"] == 1


# ---------------------------------------------------------------------------
# strata


def test_strata_verify_first_order_ok(capsys):
    code, out, _ = run(capsys, "strata", "verify", "--invariant", "J",
                       "--paths", "200", "--seed", "3")
    assert code == 0
    assert "ok" in out


def test_strata_verify_custom_affine(capsys):
    code, out, _ = run(capsys, "strata", "verify", "--invariant", "custom",
                       "--affine", "2,-3,5", "--paths", "150", "--json")
    assert code == 0
    assert json.loads(out)["violations"] == []


def test_strata_custom_requires_affine(capsys):
    code, _, err = run(capsys, "strata", "verify", "--invariant", "custom")
    assert code == 2
    assert "--affine" in err


def test_strata_invariance_finds_witness(capsys):
    code, out, _ = run(capsys, "strata", "invariance", "--invariant", "J",
                       "--paths", "50", "--events", "5", "--json")
    assert code == 1
    data = json.loads(out)
    assert data["violations"]
    assert data["violations"][0]["path"]["schema"] == 1


def test_strata_mu_runs_on_4_space_paths(capsys):
    code, out, _ = run(capsys, "strata", "invariance", "--invariant", "mu",
                       "--paths", "100", "--events", "4")
    assert code == 0
    assert "ok" in out


def test_strata_space_mismatch_rejected(capsys):
    code, _, err = run(capsys, "strata", "verify", "--invariant", "mu",
                       "--space", "5")
    assert code == 2
    assert "4" in err


# ---------------------------------------------------------------------------
# reports


def test_report_covers_the_whole_range(capsys):
    code, out, _ = run(capsys, "report", "paper-table",
                       "--m-range", "-2..2", "--json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["m"] for r in rows] == ["-2", "-3/2", "-1", "-1/2", "0",
                                      "1/2", "1", "3/2", "2"]
    for row in rows:
        assert row["lk"] == 2 * row["omega"]
        assert row["St"] == row["omega"]
        assert row["embeddable"] == (row["omega"] % 24 == 0)


def test_report_is_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run(capsys, "report", "paper-table", "--out", str(a))[0] == 0
    assert run(capsys, "report", "paper-table", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"closed-form" in a.read_bytes()


def test_report_rejects_bad_range(capsys):
    code, _, err = run(capsys, "report", "paper-table", "--m-range", "2..-2")
    assert code == 2
    assert "empty" in err


# ---------------------------------------------------------------------------
# configuration plumbing


def test_config_flag_changes_conventions(capsys, tmp_path):
    cfg = tmp_path / "genimm.cfg"
    cfg.write_text("beta_generator = 5\n")
    code, out, _ = run(capsys, "--config", str(cfg), "invariants", "class",
                       "--omega", "1", "--json")
    assert code == 0
    assert json.loads(out)["beta"] == 5


def test_config_env_var_is_honoured(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "genimm.cfg"
    cfg.write_text("beta_generator = 7\n")
    monkeypatch.setenv("GENIMM_CONFIG", str(cfg))
    code, out, _ = run(capsys, "invariants", "class", "--omega", "1",
                       "--json")
    assert code == 0
    assert json.loads(out)["beta"] == 7


def test_bad_config_is_a_usage_error(capsys, tmp_path):
    cfg = tmp_path / "genimm.cfg"
    cfg.write_text("no_such_key = 3\n")
    code, _, err = run(capsys, "--config", str(cfg), "family", "--m", "0")
    assert code == 2
    assert "config" in err
