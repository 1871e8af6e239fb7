import json

import numpy as np
import pytest

from greedyepl.cli import main
from greedyepl.io import (
    DataError,
    read_edge_list,
    read_sample,
    read_trace,
    write_edge_list,
    write_sample,
    write_trace,
)


@pytest.fixture
def gmm_data(tmp_path):
    p = tmp_path / "y.txt"
    p.write_text("\n".join(str(v) for v in [0.0, 0.2, 0.1, 4.0, 4.2, 4.1]) + "\n")
    return p


@pytest.fixture
def sampled(tmp_path, gmm_data):
    out = tmp_path / "s.txt"
    rc = main(["sample", str(gmm_data), "--model", "gmm", "--out", str(out), "--kup", "4",
               "--keep", "100", "--thin", "3", "--seed", "1", "--tau", "0.1", "--gamma", "2"])
    assert rc == 0
    return out


def test_sample_file_roundtrip(tmp_path):
    draws = np.array([[1, 2, 2], [3, 1, 1]])
    p = tmp_path / "d.txt"
    write_sample(p, draws, 3)
    back, k_up = read_sample(p)
    assert k_up == 3 and np.array_equal(back, draws)
    t = tmp_path / "t.txt"
    write_trace(t, [-1.25, -3.0000000000000004])
    assert read_trace(t).tolist() == [-1.25, -3.0000000000000004]


def test_edge_list_roundtrip(tmp_path):
    adj = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    p = tmp_path / "e.txt"
    write_edge_list(p, adj)
    assert np.array_equal(read_edge_list(p), adj)


def test_parse_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("N=3 KUP=2\n1,2,2\n1,x,2\n")
    with pytest.raises(DataError, match=":3:"):
        read_sample(p)
    p.write_text("N=3 KUP=2\n1,2,3\n")
    with pytest.raises(DataError, match="outside 1..2"):
        read_sample(p)
    p.write_text("nodes=3\n1 2\n2 9\n")
    with pytest.raises(DataError, match=":3:"):
        read_edge_list(p)


def test_sample_writes_matrix_and_trace(sampled, capsys):
    draws, k_up = read_sample(sampled)
    assert draws.shape == (100, 6) and k_up == 4
    assert read_trace(f"{sampled}.trace").shape == (100,)


def test_sample_prints_rate_and_time(tmp_path, gmm_data, capsys):
    main(["sample", str(gmm_data), "--model", "gmm", "--out", str(tmp_path / "o.txt"),
          "--kup", "3", "--keep", "5", "--seed", "2"])
    out = capsys.readouterr().out
    assert "acceptance rate" in out and "wall time" in out


def test_usage_errors(tmp_path, gmm_data):
    out = str(tmp_path / "o.txt")
    with pytest.raises(SystemExit) as exc:
        main(["sample", str(gmm_data), "--model", "gmm", "--out", out, "--keep", "0"])
    assert exc.value.code == 2
    assert main(["sample", str(gmm_data), "--model", "gmm", "--out", out, "--kup", "1"]) == 2


def test_data_errors(tmp_path):
    bad = tmp_path / "y.txt"
    bad.write_text("1.0\nabc\n")
    assert main(["sample", str(bad), "--model", "gmm", "--out", str(tmp_path / "o"),
                 "--keep", "2", "--seed", "0"]) == 3
    assert main(["summarize", str(tmp_path / "missing.txt"), "--seed", "0"]) == 3
    s = tmp_path / "s.txt"
    s.write_text("N=3 KUP=3\n1,2,3\n")
    assert main(["summarize", str(s), "--kup", "2", "--seed", "0"]) == 3


def test_summarize_single_row(tmp_path):
    s = tmp_path / "s.txt"
    s.write_text("N=4 KUP=3\n2,2,3,1\n")
    rep = tmp_path / "r.json"
    for loss in ("binder", "vi", "nvi", "nid", "zeroone"):
        assert main(["summarize", str(s), "--loss", loss, "--out", str(rep), "--seed", "0"]) == 0
        report = json.loads(rep.read_text())
        assert report["partition"] == [1, 1, 2, 3]
        assert report["epl"] == pytest.approx(0.0, abs=1e-12)


def test_summarize_report_contents_and_reproducibility(tmp_path, sampled):
    rep = tmp_path / "r.json"
    args = ["summarize", str(sampled), "--trace", f"{sampled}.trace", "--restarts", "4",
            "--seed", "11", "--out", str(rep)]
    assert main(args) == 0
    a = json.loads(rep.read_text())
    assert main(args) == 0
    b = json.loads(rep.read_text())
    for key in ("manifest", "partition", "epl", "restarts", "compression", "k_histogram", "loss"):
        assert a[key] == b[key]
    assert a["manifest"]["arguments"]["seed"] == 11
    assert len(a["restarts"]) == 4
    assert 0 < a["compression"]["ratio"] <= 1
    assert sum(a["k_histogram"].values()) == pytest.approx(1.0)
    assert a["partition"] == [1, 1, 1, 2, 2, 2]


def test_generated_seed_is_reported(tmp_path, sampled, capsys):
    rep = tmp_path / "r.json"
    assert main(["summarize", str(sampled), "--restarts", "2", "--out", str(rep)]) == 0
    err = capsys.readouterr().err
    seed = json.loads(rep.read_text())["manifest"]["arguments"]["seed"]
    assert f"seed: {seed}" in err


def test_init_from_file(tmp_path, sampled):
    init = tmp_path / "init.txt"
    init.write_text("1,2,1,2,1,2\n")
    rep = tmp_path / "r.json"
    assert main(["summarize", str(sampled), "--init", f"file:{init}", "--restarts", "2",
                 "--seed", "0", "--out", str(rep)]) == 0
    assert main(["summarize", str(sampled), "--init", "bogus", "--seed", "0"]) == 2


def test_psm_command(tmp_path):
    s = tmp_path / "s.txt"
    s.write_text("N=3 KUP=2\n1,1,2\n1,2,2\n")
    out = tmp_path / "psm.csv"
    assert main(["psm", str(s), "--out", str(out)]) == 0
    b = np.loadtxt(out, delimiter=",")
    assert np.array_equal(b, [[1, 0.5, 0], [0.5, 1, 0.5], [0, 0.5, 1]])


def test_report_command(tmp_path):
    rng = np.random.default_rng(0)
    adj = np.zeros((6, 6), dtype=int)
    for block in ([0, 1, 2], [3, 4, 5]):
        for i in block:
            for j in block:
                if i != j:
                    adj[i, j] = 1
    net = tmp_path / "net.txt"
    write_edge_list(net, adj)
    s = tmp_path / "s.txt"
    draws = np.tile([2, 1, 2, 1, 1, 2], (5, 1))
    draws[0] = rng.integers(1, 3, size=6)
    write_sample(s, draws, 3)
    out = tmp_path / "rep"
    assert main(["report", str(s), "--out-dir", str(out), "--reorder", "--data", str(net),
                 "--seed", "0", "--restarts", "2"]) == 0
    hist = np.loadtxt(out / "k_histogram.csv", delimiter=",", skiprows=1, ndmin=2)
    assert hist[:, 1].sum() == pytest.approx(1.0)
    order = np.loadtxt(out / "ordering.csv", dtype=int)
    assert sorted(order.tolist()) == list(range(1, 7))
    assert main(["report", str(s), "--out-dir", str(out), "--reorder"]) == 2


def test_compress_stats(tmp_path, capsys):
    s = tmp_path / "s.txt"
    s.write_text("N=3 KUP=3\n1,1,2\n2,2,1\n1,2,3\n")
    assert main(["compress-stats", str(s)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["draws"] == 3 and stats["unique"] == 2 and stats["total_weight"] == 3
    assert stats["top"][0] == {"weight": 2, "partition": [1, 1, 2]}


def test_lbm_sampling(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("1,1,0\n1,1,0\n0,0,1\n")
    out = tmp_path / "s.txt"
    assert main(["sample", str(m), "--model", "lbm", "--out", str(out), "--kup", "3",
                 "--keep", "20", "--seed", "4"]) == 0
    rows, _ = read_sample(out)
    cols, _ = read_sample(f"{out}.cols")
    assert rows.shape == (20, 3) and cols.shape == (20, 3)
