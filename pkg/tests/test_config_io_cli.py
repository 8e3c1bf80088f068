import hashlib

import numpy as np
import pytest
import yaml

from nvtflow import cli, runner
from nvtflow.config import ConfigError, build_config, parse_config
from nvtflow.energy import DissipationVerdict
from nvtflow.io import read_energies, read_snapshot_csv, read_snapshot_vtk, write_snapshot
from nvtflow.mesh import FaceField, StaggeredGrid
from nvtflow.mobility import MobilityKind
from nvtflow.presets import load_preset, preset_document
from nvtflow.runner import build_initial_state, droplet_mask, initial_densities, simulate
from nvtflow.state import FieldState, bulk_energy, total_moles


def small_doc(**over):
    doc = preset_document("binary_c1c5_310K")
    doc["grid"].update(nx=10, ny=10)
    doc["time"]["steps"] = 3
    for k, v in over.items():
        doc[k] = v
    return doc


def test_binary_preset_values():
    cfg = load_preset("binary_c1c5_310K")
    assert cfg.mixture.temperature == 310.0
    assert cfg.background == pytest.approx([7430.2, 673.6], rel=1e-14)
    assert cfg.droplets[0].density == pytest.approx([6866.3, 4791.5], rel=1e-14)
    assert cfg.mobility.kind is MobilityKind.MOLAR_AVERAGE and cfg.mobility.d_ij[0, 1] == 1e-8
    sc = cfg.scheme_config
    assert (sc.xi, sc.eta, sc.dt, cfg.steps, cfg.scheme) == (1e-4, 1e-4, 1e-12, 200, "coupled")
    assert np.all(sc.c_t == 0)
    assert (cfg.grid.nx, cfg.grid.ny) == (40, 40) and cfg.grid.lx == pytest.approx(20e-9)


def test_ternary_preset_values():
    cfg = load_preset("ternary_c1c5c10_323K")
    assert cfg.mixture.temperature == 323.0
    assert cfg.background == pytest.approx([10516, 770, 184], rel=1e-14)
    assert cfg.droplets[1].density == pytest.approx([7841.2, 1992.5, 1433], rel=1e-14)
    assert cfg.mobility.kind is MobilityKind.DIAGONAL and np.all(cfg.mobility.d_i == 3e-8)
    assert (cfg.steps, cfg.scheme, cfg.dt) == (1000, "componentwise", 1e-12)


def test_componentwise_needs_diagonal():
    with pytest.raises(ConfigError, match="^scheme"):
        build_config(small_doc(scheme="componentwise"))


@pytest.mark.parametrize("mutate,path", [
    (lambda d: d["grid"].update(spacing=1), "grid.spacing"),
    (lambda d: d.update(extra=1), "extra"),
    (lambda d: d["time"].update(dt=-1.0), "time.dt"),
    (lambda d: d["mixture"].update(components=["methane", "helium"]), "mixture.components[1]"),
    (lambda d: d["initial"]["droplets"][0].update(size_nm=[10, -1]), "initial.droplets[0].size_nm[1]"),
    (lambda d: d["initial"]["droplets"][0].update(center_nm=[1, 10]), "initial.droplets[0]"),
    (lambda d: d["viscosity"].update(xi=1e-5), "viscosity"),
    (lambda d: d["mobility"].update(kind="magic"), "mobility.kind"),
    (lambda d: d.update(C_T=[0.0, -1.0]), "C_T[1]"),
    (lambda d: d["mixture"].update(beta_ij=1.0), "mixture.beta_ij"),
    (lambda d: d["time"].pop("steps"), "time.steps"),
])
def test_errors_carry_field_path(mutate, path):
    doc = small_doc()
    mutate(doc)
    with pytest.raises(ConfigError) as err:
        build_config(doc)
    assert err.value.path == path


def test_overlapping_droplets():
    doc = small_doc()
    doc["initial"]["droplets"].append(dict(doc["initial"]["droplets"][0], center_nm=[12, 12]))
    with pytest.raises(ConfigError, match="overlaps"):
        build_config(doc)


def test_yaml_roundtrip_and_inline_component():
    doc = small_doc()
    doc["mixture"]["components"][1] = {"name": "pentane", "p_crit_bar": 33.70, "t_crit": 469.7,
                                       "acentric": 0.251, "molar_weight_g_mol": 72.15}
    cfg = parse_config(yaml.safe_dump(doc))
    assert cfg.mixture.components[1].p_crit == pytest.approx(3.37e6)
    assert cfg.mixture.components[1].molar_weight == pytest.approx(0.07215)
    with pytest.raises(ConfigError):
        parse_config("mixture: [unclosed")


def test_centered_droplet_is_20_by_20():
    cfg = load_preset("binary_c1c5_310K")
    mask = droplet_mask(cfg.droplets[0], cfg.grid)
    assert mask.sum() == 400
    idx = np.argwhere(mask)
    assert idx.min(axis=0).tolist() == [10, 10] and idx.max(axis=0).tolist() == [29, 29]


def test_no_droplets_uniform():
    doc = small_doc()
    doc["initial"].pop("droplets")
    n = initial_densities(build_config(doc))
    assert np.all(n[0] == 7430.2) and np.all(n[1] == 673.6)


def test_initial_h_includes_shift():
    cfg = build_config(small_doc(C_T=[100.0, 50.0]))
    s = build_initial_state(cfg)
    fb = bulk_energy(s.n, cfg.mixture, cfg.grid)
    shift = float(np.dot([100.0, 50.0], total_moles(s.n, cfg.grid)))
    assert s.H ** 2 - fb == pytest.approx(shift, rel=1e-12)


def test_snapshot_roundtrip(tmp_path):
    grid = StaggeredGrid(5, 4, 5e-9, 4e-9)
    rng = np.random.default_rng(9)
    n = rng.uniform(100, 9000, (2, 5, 4)) * (1 + 1e-13 * rng.normal(size=(2, 5, 4)))
    u = FaceField(rng.normal(size=(6, 4)), rng.normal(size=(5, 5)))
    s = FieldState(n, u, 1.234, t=3e-12, step=3)
    vtk, csv = write_snapshot(s, grid, tmp_path / "snap", names=["methane", "pentane"])
    back, uc, vc = read_snapshot_csv(csv, grid)
    assert np.array_equal(back, n)
    assert np.array_equal(uc, 0.5 * (u.x[:-1] + u.x[1:]))
    fields = read_snapshot_vtk(vtk, grid)
    assert np.array_equal(fields["methane"], n[0]) and np.array_equal(fields["pentane"], n[1])
    assert np.array_equal(fields["velocity"][1], vc)
    text = vtk.read_text()
    assert text.startswith("# vtk DataFile Version 3.0") and "STRUCTURED_POINTS" in text


def test_snapshot_uniform_rows(tmp_path):
    grid = StaggeredGrid(3, 3, 1e-9, 1e-9)
    s = FieldState(np.full((1, 3, 3), 42.0), FaceField.zeros(grid), 1.0)
    _, csv = write_snapshot(s, grid, tmp_path / "u.vtk")
    rows = csv.read_text().splitlines()[1:]
    assert len({r.split(",", 2)[2] for r in rows}) == 1


def _run(tmp_path, *args):
    return cli.run(["--output-dir", str(tmp_path)] + list(args))


def _config_file(tmp_path, doc):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_cli_zero_steps(tmp_path):
    assert _run(tmp_path, "--preset", "binary_c1c5_310K", "--steps", "0") == 0
    recs = read_energies(tmp_path / "energies.csv")
    assert len(recs) == 1 and recs[0].step == 0
    assert sorted(p.name for p in tmp_path.glob("snapshot_*")) == ["snapshot_000000.csv", "snapshot_000000.vtk"]


def test_cli_config_file_and_rows(tmp_path):
    cfgfile = _config_file(tmp_path, small_doc())
    out = tmp_path / "o"
    assert cli.run(["--config", cfgfile, "--output-dir", str(out), "--snapshot-every", "1"]) == 0
    recs = read_energies(out / "energies.csv")
    assert [r.step for r in recs] == [0, 1, 2, 3]
    assert len(list(out.glob("snapshot_*.vtk"))) == 4


def test_cli_energy_every(tmp_path):
    cfgfile = _config_file(tmp_path, small_doc())
    assert cli.run(["--config", cfgfile, "--output-dir", str(tmp_path / "e"), "--energy-every", "2"]) == 0
    assert [r.step for r in read_energies(tmp_path / "e" / "energies.csv")] == [0, 2, 3]


def test_cli_config_error(tmp_path):
    doc = small_doc()
    doc["grid"]["nx"] = 1
    assert cli.run(["--config", _config_file(tmp_path, doc), "--output-dir", str(tmp_path)]) == 2
    assert cli.run(["--config", str(tmp_path / "missing.yaml")]) == 2
    assert _run(tmp_path, "--preset", "binary_c1c5_310K", "--scheme", "componentwise") == 2


def test_cli_solver_failure(tmp_path):
    doc = small_doc()
    doc["initial"]["droplets"][0]["density_kmol_m3"] = [30.0, 9.0]  # beyond the covolume limit
    assert cli.run(["--config", _config_file(tmp_path, doc), "--output-dir", str(tmp_path)]) == 3


def test_cli_strict_energy(tmp_path, monkeypatch):
    monkeypatch.setattr(runner, "assert_dissipation", lambda recs, tol_rel: DissipationVerdict(False, 1, 1.0))
    cfgfile = _config_file(tmp_path, small_doc())
    assert cli.run(["--config", cfgfile, "--output-dir", str(tmp_path / "a")]) == 0
    assert cli.run(["--config", cfgfile, "--output-dir", str(tmp_path / "b"), "--strict-energy"]) == 4


def test_deterministic_energies(tmp_path):
    cfg = build_config(small_doc())
    simulate(cfg, out_dir=tmp_path / "a")
    simulate(cfg, out_dir=tmp_path / "b")
    digest = [hashlib.sha256((tmp_path / d / "energies.csv").read_bytes()).hexdigest() for d in "ab"]
    assert digest[0] == digest[1]


def test_ternary_reduced_run_budget(tmp_path):
    import time
    t0 = time.perf_counter()
    res = simulate(load_preset("ternary_c1c5c10_323K"), steps=50, out_dir=tmp_path)
    assert time.perf_counter() - t0 < 120
    assert res.state.step == 50
