import pytest

from vanetlab import cli
from vanetlab.errors import InvalidConfigError
from vanetlab.trace_io import parse_trace


def test_int_lists():
    assert cli.parse_int_list("15,30,50") == [15, 30, 50]
    assert cli.parse_int_list("1..5") == [1, 2, 3, 4, 5]
    assert cli.parse_int_list("1..2,9") == [1, 2, 9]
    with pytest.raises(InvalidConfigError):
        cli.parse_int_list(" , ")


def test_precedence(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("# comment\nmodel = mm\nvehicles = 7\nseed = 3\nout = a.txt\n")
    flags = {"config": str(conf), "model": None, "vehicles": 9, "duration": None,
             "seed": None, "out": None}
    o = cli.resolve("generate", flags, environ={})
    assert (o["model"], o["vehicles"], o["seed"], o["duration"]) == ("mm", 9, 3, 300.0)
    flags["seed"] = 4
    assert cli.resolve("generate", flags, environ={})["seed"] == 4
    assert cli.resolve("generate", flags, environ={"VANETLAB_SEED": "8"})["seed"] == 8


def test_unknown_key_rejected(tmp_path):
    conf = tmp_path / "bad.cfg"
    conf.write_text("colour = blue\n")
    with pytest.raises(InvalidConfigError):
        cli.resolve("generate", {"config": str(conf)}, environ={})


def test_missing_required(capsys):
    assert cli.main(["generate", "--model", "sm"]) == 2
    assert "--vehicles" in capsys.readouterr().err


def test_generate_and_simulate(tmp_path, monkeypatch):
    monkeypatch.delenv("VANETLAB_SEED", raising=False)
    trace = tmp_path / "t.txt"
    assert cli.main(["generate", "--model", "dm", "--vehicles", "8", "--duration", "20",
                     "--seed", "2", "--out", str(trace)]) == 0
    ts = parse_trace(trace.read_text())
    assert ts.n_vehicles == 8
    out = tmp_path / "m.csv"
    log = tmp_path / "events.log"
    assert cli.main(["simulate", "--trace", str(trace), "--connections", "2", "--seed", "2",
                     "--duration", "20", "--out", str(out), "--log", str(log)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("n_vehicles,seed,throughput,mean_delay,overhead")
    assert lines[1].startswith("8,2,")
    assert "APP_SEND" in log.read_text()


def test_sweep_and_plot_data(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--models", "flow,mm", "--vehicles", "5,6", "--seeds", "1..2",
                     "--duration", "10", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 8
    figs = tmp_path / "figs"
    assert cli.main(["plot-data", "--in", str(out), "--out-dir", str(figs)]) == 0
    assert sorted(p.name for p in figs.iterdir()) == ["mean_delay.csv", "overhead.csv",
                                                      "throughput.csv"]
