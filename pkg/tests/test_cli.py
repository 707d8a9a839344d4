import numpy as np
import pytest

from hallbraid.cli import main
from hallbraid.io import read_snapshot


def _read_tsv(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    header = lines[0].split("\t")
    return header, [list(map(float, l.split("\t"))) for l in lines[1:]]


def test_run_decoupled_mode_ledger(tmp_path):
    out = tmp_path / "run"
    rc = main(["run", "--nx", "8", "--ny", "8", "--beta", "0.5", "--initial", "cos:1",
               "--amplitude", "1", "--t-end", "0.2", "--output-dir", str(out)])
    assert rc == 0
    header, rows = _read_tsv(out / "ledger.tsv")
    assert header == ["t", "energy", "dissipation_cum", "balance_residual", "gronwall_margin"]
    assert all(r[4] <= 1e-6 for r in rows)
    final, hdr = read_snapshot(sorted(out.glob("snap_*.txt"))[-1])
    assert final.time == pytest.approx(0.2)
    assert abs(final.coeffs[0, 0] - 0.5 * np.exp(-0.2)) < 1e-12
    for name in ("config.txt", "picard.log", "ledger.tsv"):
        assert "config_sha256" in (out / name).read_text()


def test_run_rejects_zero_t_end(tmp_path, capsys):
    out = tmp_path / "bad"
    assert main(["run", "--t-end", "0.0", "--output-dir", str(out)]) == 2
    assert not out.exists()
    assert "t_end" in capsys.readouterr().err


def test_run_from_config_file_and_stride(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("nx = 8\nny = 8\nt_end = 0.05\nsnapshot_stride = 2\nseed = 4\namplitude = 0.05\n")
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--output-dir", str(out)]) == 0
    names = sorted(p.name for p in out.glob("snap_*.txt"))
    assert names == ["snap_000000.txt", "snap_000002.txt", "snap_000004.txt", "snap_000005.txt"]
    cfg.write_text("nope = 1\n")
    assert main(["run", "--config", str(cfg), "--output-dir", str(out)]) == 2


def test_run_is_deterministic(tmp_path):
    args = ["run", "--nx", "8", "--ny", "8", "--t-end", "0.03", "--seed", "11"]
    assert main(args + ["--output-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--output-dir", str(tmp_path / "b")]) == 0
    a = sorted((tmp_path / "a").iterdir())
    b = sorted((tmp_path / "b").iterdir())
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        if pa.name == "config.txt":  # records the output directory itself
            strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("output_dir")]
            assert strip(pa) == strip(pb)
        else:
            assert pa.read_bytes() == pb.read_bytes()


def test_run_contraction_failure_writes_partial_output(tmp_path):
    out = tmp_path / "f"
    rc = main(["run", "--nx", "8", "--ny", "8", "--t-end", "1.0", "--window", "0.5",
               "--picard-max-iter", "2", "--picard-tol", "1e-15", "--amplitude", "0.5",
               "--output-dir", str(out)])
    assert rc == 3
    assert (out / "snap_000000.txt").exists()
    assert (out / "config.txt").exists()


def test_diagnose(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "--nx", "8", "--ny", "8", "--t-end", "0.03", "--output-dir", str(out)]) == 0
    capsys.readouterr()
    assert main(["diagnose", str(out)]) == 0
    header, rows = _read_tsv(out / "diagnostics.tsv")
    assert header[:3] == ["t", "energy", "gronwall_margin"]
    assert len(rows) == 4
    assert all(r[3] <= 1e-13 for r in rows)
    assert main(["diagnose", str(tmp_path / "missing")]) == 2


def test_verify_kernel_small(tmp_path, capsys):
    out = tmp_path / "k"
    rc = main(["verify-kernel", "--mmax", "4", "--nmax", "4", "--tau-probes", "2",
               "--plateau-threshold", "1.0", "--output-dir", str(out)])
    assert rc == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith("sup=") and " plateau=" in line
    sup = float(line.split()[0][4:])
    assert np.isfinite(sup) and sup > 0
    labels = [l.split("\t")[0] for l in (out / "partition_summary.tsv").read_text().splitlines()[2:]]
    assert labels == ["B0", "B1", "S_c", "T_c", "S1capT", "S0capT"]
    assert (out / "kernel_report.tsv").exists()


def test_verify_kernel_threshold_and_bad_exponents(tmp_path):
    out = tmp_path / "k"
    assert main(["verify-kernel", "--mmax", "2", "--nmax", "2", "--tau-probes", "0",
                 "--plateau-threshold", "0", "--output-dir", str(out)]) == 4
    assert main(["verify-kernel", "--b", "0.7", "--output-dir", str(out)]) == 2
    assert main(["verify-kernel", "--b", "0.7", "--bprime", "0.75", "--override-exponents",
                 "--mmax", "2", "--nmax", "2", "--plateau-threshold", "1", "--output-dir", str(out)]) == 0


def test_check_lemmas(tmp_path, capsys):
    out = tmp_path / "l"
    assert main(["check-lemmas", "--grid-density", "3", "--output-dir", str(out)]) == 0
    text = (out / "lemma_report.tsv").read_text()
    for name in ("[pointwise]", "[two_kink]", "[cubic]"):
        assert name in text
    assert "config_sha256" in text
    assert main(["check-lemmas", "--b", "0.4", "--output-dir", str(out)]) == 2
