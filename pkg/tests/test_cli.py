from ccnsim.cli import main

TOPO = "node a\nnode b\nnode c\nlink a b 1ms 10Mbps\nlink b c 1ms 10Mbps\n"
CFG = "stopTime = 13s\nproducer.a = ccnx:/name=p\nconsumer.c = ccnx:/name=p\nrepetitions = 2\n"


def _files(tmp_path, cfg=CFG, topo=TOPO):
    t, c = tmp_path / "topo.txt", tmp_path / "cfg.txt"
    t.write_text(topo)
    c.write_text(cfg)
    return str(t), str(c)


def test_run_deterministic_byte_identical(tmp_path):
    t, c = _files(tmp_path)
    for out in ("o1", "o2"):
        assert main(["run", "--topology", t, "--config", c, "--out", str(tmp_path / out),
                     "--deterministic", "--seed", "4"]) == 0
    for name in ("results.csv", "runs.txt"):
        assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()


def test_run_timestamp_header_without_flag(tmp_path):
    t, c = _files(tmp_path)
    assert main(["run", "--topology", t, "--config", c, "--out", str(tmp_path / "o"), "--reps", "1"]) == 0
    assert (tmp_path / "o" / "results.csv").read_text().startswith("# ")


def test_config_error_exit_code(tmp_path):
    t, c = _files(tmp_path, cfg="nope = 1\n")
    assert main(["run", "--topology", t, "--config", c, "--out", str(tmp_path / "o")]) == 2
    t, c = _files(tmp_path, topo="link a b 1ms 1Mbps\n")
    assert main(["run", "--topology", t, "--config", c, "--out", str(tmp_path / "o")]) == 2


def test_abort_exit_code(tmp_path, monkeypatch):
    import ccnsim.harness as h
    from ccnsim.engine import SimulationError

    def boom(*a, **k):
        raise SimulationError(1, "a", RuntimeError("x"))

    monkeypatch.setattr(h, "run_simulation", boom)
    t, c = _files(tmp_path)
    assert main(["run", "--topology", t, "--config", c, "--out", str(tmp_path / "o")]) == 3


def test_pktdump_hex_and_binary(tmp_path, capsys):
    hexfile = tmp_path / "p.hex"
    hexfile.write_text("01 00 00 15 ff 00 00 08 00 01 00 09 00 00 00 05 00 01 00 01 61\n")
    assert main(["pktdump", str(hexfile)]) == 0
    out = capsys.readouterr().out
    assert "Interest" in out and "NameSegment" in out
    binfile = tmp_path / "p.bin"
    binfile.write_bytes(bytes.fromhex(hexfile.read_text()))
    assert main(["pktdump", str(binfile)]) == 0
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"\x01\x00\x00")
    assert main(["pktdump", str(bad)]) == 2
