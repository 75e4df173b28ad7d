import json
import subprocess
import sys

import numpy as np
import pytest

from distspace import io
from distspace.cli import main
from distspace.degeneracy import enumerate_assemblies
from distspace.geometry import DistanceAssignment, PointConfiguration
from distspace.lattice import LatticeBasis, lattice_distance_spectrum

FIG5 = (1.0, 1.58114, 0.70710, 0.87228, 1.32698, 1.54551)


def write_json(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


@pytest.fixture
def fig5_file(tmp_path):
    return write_json(tmp_path / "fig5.json", io.assignment_to_dict(DistanceAssignment.from_ordered(FIG5)))


# --- formats ----------------------------------------------------------------


def test_configuration_round_trip():
    c = PointConfiguration([[0.0, 0.0], [1.5, 0.0], [0.2, 0.7]])
    assert io.config_from_dict(json.loads(io.dumps(io.config_to_dict(c)))) == c


def test_assignment_round_trip_and_schema():
    a = DistanceAssignment.from_ordered(FIG5)
    data = io.assignment_to_dict(a)
    assert data["n"] == 4 and set(data["distances"]) == {"0,1", "0,2", "0,3", "1,2", "1,3", "2,3"}
    np.testing.assert_array_equal(io.assignment_from_dict(data).matrix, a.matrix)


def test_assignment_csv_layout():
    text = io.assignment_to_csv(DistanceAssignment.from_ordered([1, 2, 3]))
    assert text.splitlines() == ["i,j,distance", "0,1,1.0", "0,2,2.0", "1,2,3.0"]


@pytest.mark.parametrize(
    "data, key",
    [({"distances": {}}, "n"), ({"n": 3}, "distances"), ({"n": 2, "distances": {"1,0": 1.0}}, "1,0")],
)
def test_malformed_assignment_names_key(data, key):
    with pytest.raises(io.FormatError, match=key):
        io.assignment_from_dict(data)


def test_multiset_inputs():
    for data in ([3, 1, 2], {"multiset": [3, 1, 2]}, {"values": [1, 2, 3]},
                 {"n": 3, "distances": {"0,1": 1, "0,2": 2, "1,2": 3}}):
        assert io.multiset_from_json(data).values == (1.0, 2.0, 3.0)
    with pytest.raises(io.FormatError):
        io.multiset_from_json({"points": []})


def test_classes_schema():
    result = enumerate_assemblies(FIG5, 2, tol=1e-4)
    data = io.classes_to_dict(result)
    assert data["order"] == 2 and data["dimension"] == 2
    assert len(data["classes"]) == 2 and data["multiset"] == sorted(FIG5)


def test_spectrum_csv_round_trip():
    spec = lattice_distance_spectrum(LatticeBasis([[1, 0], [0.3, 1.1]]), 3.0)
    again = io.spectrum_from_csv(io.spectrum_to_csv(spec), cutoff=3.0)
    assert again.matches(spec, rtol=0) and again.cutoff == 3.0
    with pytest.raises(io.FormatError):
        io.spectrum_from_csv("a,b\n1,2\n")


def test_basis_dimension_checked():
    with pytest.raises(io.FormatError):
        io.basis_from_dict({"dimension": 3, "vectors": [[1, 0], [0, 1]]})


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out" / "x.json"
    io.atomic_write(target, "{}\n")
    assert target.read_text() == "{}\n"
    assert [p.name for p in target.parent.iterdir()] == ["x.json"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "x.json"
    target.write_text("old")

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(io.os, "replace", boom)
    with pytest.raises(OSError):
        io.atomic_write(target, "new")
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["x.json"]


# --- check / embed ----------------------------------------------------------


def test_check_exit_codes(tmp_path, fig5_file, capsys):
    # printed five-decimal values need the paper tolerance
    assert main(["check", fig5_file, "-d", "2", "--tol-structural", "1e-4", "-o", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["realizable"] is True and report["dimension"] == 2
    bad = write_json(tmp_path / "tri.json", {"n": 3, "distances": {"0,1": 1, "0,2": 1, "1,2": 5}})
    assert main(["check", bad, "-d", "2"]) == 2
    assert main(["check", str(tmp_path / "missing.json"), "-d", "2"]) == 1
    capsys.readouterr()


def test_check_reports_offending_key(tmp_path, capsys):
    bad = write_json(tmp_path / "bad.json", {"n": 3, "dists": {}})
    assert main(["check", bad, "-d", "2"]) == 1
    assert "distances" in capsys.readouterr().err


def test_check_reads_csv(tmp_path, capsys):
    path = tmp_path / "d.csv"
    path.write_text(io.assignment_to_csv(DistanceAssignment.from_ordered([3, 4, 5])))
    assert main(["check", str(path), "-d", "2"]) == 0
    assert main(["check", str(path), "-d", "1"]) == 2
    capsys.readouterr()


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["check"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    capsys.readouterr()


def test_embed_writes_configuration(tmp_path, fig5_file):
    out = tmp_path / "c.json"
    assert main(["embed", fig5_file, "-d", "2", "--tol-structural", "1e-4", "-o", str(out)]) == 0
    c = io.config_from_dict(json.loads(out.read_text()))
    assert c.n == 4 and np.allclose(c.points[0], 0)


# --- degenerate -------------------------------------------------------------


def test_degenerate_fig6(tmp_path, capsys):
    values = [1.0, 1.581144, 0.70710, 1.34371657, 0.37269145, 0.68718528]
    path = write_json(tmp_path / "m.json", {"multiset": values})
    assert main(["degenerate", path, "-d", "2", "--tol-structural", "1e-6"]) == 0
    assert capsys.readouterr().out.strip().splitlines()[-1] == "k = 3"


def test_degenerate_simplex(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["degenerate", "--simplex", "-d", "3", "-o", str(out)]) == 0
    assert capsys.readouterr().out.strip().splitlines()[-1] == "k = 30"
    assert json.loads(out.read_text())["order"] == 30


def test_degenerate_generic_quadrilateral(tmp_path, capsys):
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(4, 2))
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)[np.triu_indices(4, 1)]
    path = write_json(tmp_path / "m.json", list(d))
    assert main(["degenerate", path, "-d", "2"]) == 0
    assert capsys.readouterr().out.strip().splitlines()[-1] == "k = 1"


def test_degenerate_budget_exit(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert main(["degenerate", "--simplex", "-d", "3", "--budget", "20", "-o", str(out)]) == 3
    data = json.loads(out.read_text())
    assert data["complete"] is False and 0 < data["explored_fraction"] < 1
    assert capsys.readouterr().out.strip().splitlines()[-1].startswith("k >= ")


def test_degenerate_needs_input(capsys):
    assert main(["degenerate", "-d", "2"]) == 1
    capsys.readouterr()


# --- construct / circuits / lattice -----------------------------------------


def test_construct_kite_trapezoid(tmp_path):
    out, fam, pts = tmp_path / "kt.json", tmp_path / "fam.csv", tmp_path / "pts.csv"
    assert main(["construct", "kite-trapezoid", "--x", "0.6", "-o", str(out),
                 "--family-csv", str(fam), "--points-csv", str(pts)]) == 0
    data = json.loads(out.read_text())
    assert set(data) >= {"kite", "trapezoid", "edge_lengths"}
    rows = fam.read_text().splitlines()
    assert rows[0] == "x,a,b,c" and len(rows) == 32
    assert pts.read_text().splitlines()[0] == "config,point,x1,x2"
    assert main(["construct", "kite-trapezoid", "--x", "0.3"]) == 2


def test_seed_flag_and_environment(tmp_path, monkeypatch):
    a, b, c = (tmp_path / f"{k}.json" for k in "abc")
    monkeypatch.delenv("DISTSPACE_SEED", raising=False)
    assert main(["construct", "symmetric", "--random", "--seed", "4", "-o", str(a)]) == 0
    assert main(["--seed", "4", "construct", "symmetric", "--random", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    monkeypatch.setenv("DISTSPACE_SEED", "9")
    assert main(["construct", "symmetric", "--random", "--seed", "4", "-o", str(c)]) == 0
    assert c.read_bytes() != a.read_bytes()
    monkeypatch.setenv("DISTSPACE_SEED", "4")
    assert main(["construct", "symmetric", "--random", "--seed", "9", "-o", str(c)]) == 0
    assert c.read_bytes() == a.read_bytes()


def test_circuits_command(tmp_path, capsys):
    path = write_json(tmp_path / "sq.json", {"dimension": 2, "points": [[0, 0], [1, 0], [1, 1], [0, 1]]})
    out = tmp_path / "c.json"
    assert main(["circuits", path, "-o", str(out)]) == 0
    data = json.loads(out.read_text())
    assert len(data["circuits"]) == 3 and data["distinct"] == 2
    assert data["shortest"]["length"] == pytest.approx(4.0)
    capsys.readouterr()


def test_lattice_round_trip_through_files(tmp_path, capsys):
    basis = write_json(tmp_path / "b.json", {"dimension": 2, "vectors": [[1, 0], [0, 1.7]]})
    spec, out = tmp_path / "s.csv", tmp_path / "r.json"
    assert main(["lattice", "spectrum", basis, "--cutoff", "3", "-o", str(spec)]) == 0
    assert main(["lattice", "reconstruct", str(spec), "-d", "2", "--cutoff", "3", "-o", str(out)]) == 0
    found = io.basis_from_dict(json.loads(out.read_text()))
    np.testing.assert_allclose(sorted(found.lengths()), [1.0, 1.7])
    bogus = tmp_path / "bogus.csv"
    bogus.write_text("distance,multiplicity\n1.0,2\n1.3,2\n1.9,2\n2.4,2\n")
    assert main(["lattice", "reconstruct", str(bogus), "-d", "2"]) == 2
    capsys.readouterr()


# --- reproduce --------------------------------------------------------------


@pytest.mark.parametrize("fig", ["fig1", "fig2", "fig5", "fig6", "fig7", "fig8"])
def test_reproduce_passes(tmp_path, capsys, fig):
    assert main(["reproduce", fig, "--out-dir", str(tmp_path)]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith(f"{fig}: PASS")
    data = json.loads((tmp_path / f"{fig}.json").read_text())
    assert data["pass"] is True and data["configurations"]
    assert (tmp_path / f"{fig}_points.csv").read_text().startswith("config,point,x1")


def test_reproduce_fig5_values(tmp_path, capsys):
    main(["reproduce", "fig5", "--out-dir", str(tmp_path)])
    capsys.readouterr()
    data = json.loads((tmp_path / "fig5.json").read_text())
    np.testing.assert_allclose(data["solved"], [1.32698, 1.54551], atol=1e-4)
    assert data["order"] == 2


def test_reproduce_unknown_figure(tmp_path, capsys):
    assert main(["reproduce", "fig3", "--out-dir", str(tmp_path)]) == 1
    assert "fig3" in capsys.readouterr().err


def test_reproduce_is_deterministic(tmp_path, capsys):
    for sub in ("a", "b"):
        main(["reproduce", "fig6", "--out-dir", str(tmp_path / sub)])
    capsys.readouterr()
    for name in ("fig6.json", "fig6_points.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_console_script_module_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "distspace.cli", "reproduce", "fig1", "--out-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "fig1: PASS" in proc.stdout
