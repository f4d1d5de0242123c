import json
import subprocess
import sys

import numpy as np
import pytest

from asgproto import fb_iou, iou
from asgproto.cli import main
from asgproto.tensorio import read_pgm, read_tensor, write_tensor


def make_fixture(root, seed=0, shots=1, fg=0.6, size=(20, 20), c=4):
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    support = []
    for k in range(shots):
        feat = rng.normal(size=(c,) + size).astype(np.float32)
        mask = rng.random(size) < fg
        write_tensor(root / f"s{k}.asgt", feat)
        write_tensor(root / f"m{k}.asgt", mask)
        support.append({"feature": f"s{k}.asgt", "mask": f"m{k}.asgt"})
    write_tensor(root / "q.asgt", rng.normal(size=(c,) + size).astype(np.float32))
    manifest = {"support": support, "query": "q.asgt", "out": "out"}
    (root / "run.json").write_text(json.dumps(manifest))
    return root / "run.json"


def test_fallback_single_shot(tmp_path, capsys):
    root = tmp_path / "fx"
    root.mkdir()
    rng = np.random.default_rng(1)
    feat = rng.normal(size=(3, 10, 10)).astype(np.float32)
    mask = np.zeros((10, 10), bool)
    mask[:5] = True
    write_tensor(root / "s.asgt", feat)
    write_tensor(root / "m.asgt", mask)
    write_tensor(root / "q.asgt", feat)
    code = main(["run", "--support", str(root / "s.asgt"), str(root / "m.asgt"),
                 "--query", str(root / "q.asgt"), "--out", str(tmp_path / "o")])
    assert code == 0
    out = capsys.readouterr().out
    assert "N_m=50" in out and "masked average pooling" in out and "total N_sp=1" in out
    assert read_tensor(tmp_path / "o" / "prototypes.asgt").shape == (1, 3)


def test_five_shots_merge_to_25(tmp_path, capsys):
    manifest = make_fixture(tmp_path / "fx", shots=5, fg=1.0, size=(24, 24), c=3)
    assert main(["run", "--manifest", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert out.count("N_sp=5") >= 5
    assert "total N_sp=25" in out
    assert read_tensor(tmp_path / "fx" / "out" / "prototypes.asgt").shape == (25, 3)


def test_artifacts(tmp_path, capsys):
    manifest = make_fixture(tmp_path / "fx", fg=0.8)
    out_dir = tmp_path / "res"
    assert main(["run", "--manifest", str(manifest), "--out", str(out_dir), "--csv",
                 "--s-sp", "50", "--n-max", "3", "--iters", "4"]) == 0
    protos = read_tensor(out_dir / "prototypes.asgt")
    assert protos.shape == (3, 4)
    merged = read_tensor(out_dir / "merged.asgt")
    assert merged.shape == (9, 20, 20)
    guide = read_pgm(out_dir / "guide_map.pgm")
    sim = np.stack([read_tensor(out_dir / f"similarity_{i:02d}.asgt") for i in range(3)])
    assert guide.max() < 3
    np.testing.assert_array_equal(guide, np.argmax(sim, axis=0))
    prob = read_tensor(out_dir / "probability_map.asgt")
    np.testing.assert_allclose(prob, sim.astype(np.float64).sum(axis=0), atol=1e-5)
    csv = np.loadtxt(out_dir / "similarity_00.csv", delimiter=",")
    np.testing.assert_allclose(csv, sim[0], atol=1e-6)
    assert read_pgm(out_dir / "similarity_01.pgm").max() <= 255
    assert (out_dir / "prototype_shots.csv").read_text().splitlines()[0] == "index,shot"


def test_projection(tmp_path, capsys):
    manifest = make_fixture(tmp_path / "fx", fg=0.8, c=2)
    rng = np.random.default_rng(3)
    w = rng.normal(size=(6, 5)).astype(np.float32)
    b = rng.normal(size=(1, 6)).astype(np.float32)
    write_tensor(tmp_path / "w.asgt", w)
    write_tensor(tmp_path / "b.asgt", b)
    assert main(["run", "--manifest", str(manifest), "--proj", str(tmp_path / "w.asgt"),
                 "--proj-bias", str(tmp_path / "b.asgt")]) == 0
    assert read_tensor(tmp_path / "fx" / "out" / "merged.asgt").shape == (6, 20, 20)
    write_tensor(tmp_path / "bad.asgt", np.ones((2, 7), np.float32))
    assert main(["run", "--manifest", str(manifest), "--proj", str(tmp_path / "bad.asgt")]) == 3


def test_figures(tmp_path, capsys):
    manifest = make_fixture(tmp_path / "fx", fg=0.9)
    assert main(["run", "--manifest", str(manifest), "--figures"]) == 0
    figs = tmp_path / "fx" / "out" / "figures"
    for name in ("similarity.png", "guide_probability.png"):
        assert (figs / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "--manifest", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 1
    manifest = make_fixture(tmp_path / "fx")
    (tmp_path / "fx" / "q.asgt").write_bytes(b"JUNKJUNKJUNK")
    assert main(["run", "--manifest", str(manifest)]) == 2
    manifest = make_fixture(tmp_path / "fy")
    write_tensor(tmp_path / "fy" / "m0.asgt", np.ones((5, 5), bool))
    assert main(["run", "--manifest", str(manifest)]) == 3
    write_tensor(tmp_path / "fy" / "m0.asgt", np.zeros((20, 20), bool))
    assert main(["run", "--manifest", str(manifest)]) == 3
    assert main(["run", "--manifest", str(manifest), "--iters", "0"]) == 3


class TestCompare:
    def run(self, tmp_path, capsys, a, b):
        write_tensor(tmp_path / "a.asgt", a)
        write_tensor(tmp_path / "b.asgt", b)
        code = main(["compare", str(tmp_path / "a.asgt"), str(tmp_path / "b.asgt")])
        return code, capsys.readouterr().out.split("\n")

    def test_identical(self, tmp_path, capsys):
        m = np.eye(4, dtype=bool)
        code, lines = self.run(tmp_path, capsys, m, m)
        assert code == 0 and lines[0] == "iou 1.0000" and lines[1] == "fb_iou 1.0000"

    def test_complementary(self, tmp_path, capsys):
        m = np.eye(4, dtype=bool)
        _, lines = self.run(tmp_path, capsys, m, ~m)
        assert lines[:2] == ["iou 0.0000", "fb_iou 0.0000"]

    def test_random_matches_core(self, tmp_path, capsys, rng):
        a, b = rng.random((8, 8)) < 0.5, rng.random((8, 8)) < 0.5
        _, lines = self.run(tmp_path, capsys, a, b)
        assert lines[0] == f"iou {iou(a, b):.4f}" and lines[1] == f"fb_iou {fb_iou(a, b):.4f}"

    def test_shape_mismatch(self, tmp_path, capsys):
        code, _ = self.run(tmp_path, capsys, np.ones((2, 2), bool), np.ones((3, 3), bool))
        assert code == 3


def test_module_entry_point(tmp_path):
    manifest = make_fixture(tmp_path / "fx")
    proc = subprocess.run([sys.executable, "-m", "asgproto", "run", "--manifest", str(manifest)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "total N_sp" in proc.stdout
