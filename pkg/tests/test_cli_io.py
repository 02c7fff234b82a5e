"""Config parsing, checkpoint format, run artifacts, and the CLI surface."""

from __future__ import annotations

import math
import struct
import textwrap

import numpy as np
import pytest

from edns import (
    CheckpointError,
    ConfigError,
    parse_config,
    read_checkpoint,
    sobolev_norm,
    write_checkpoint,
)
from edns.cli_io import main
from edns.energy_ledger import read_ledger_csv

from conftest import make_grid, random_spectral, single_mode


def cfg_text(**overrides):
    base = {
        "grid.n": 8,
        "run.t_end": 0.05,
        "stepper.dt": 5e-3,
    }
    base.update(overrides)
    sections: dict[str, list[str]] = {}
    for full, val in base.items():
        if val is None:
            continue
        sect, key = full.split(".", 1)
        sections.setdefault(sect, []).append(f"{key} = {val}")
    return "\n".join(
        f"[{sect}]\n" + "\n".join(lines)
        for sect, lines in sections.items()
    ) + "\n"


def write_cfg(tmp_path, name="run.cfg", **overrides):
    path = tmp_path / name
    path.write_text(cfg_text(**overrides))
    return str(path)


# ---------------------------------------------------------------------------
# config parsing

def test_minimal_config_gets_defaults():
    cfg = parse_config("[grid]\nn = 16\n[run]\nt_end = 0.1\n")
    assert cfg.grid.n_per_axis == 16
    assert cfg.grid.box_length == pytest.approx(2.0 * math.pi)
    assert cfg.grid.friedrich_radius == pytest.approx(16.0 / 3.0)
    assert cfg.params.nu_h == 1.0 and cfg.params.nu_3 == 1.0
    assert cfg.params.damping.alpha == 1.0
    assert cfg.stepper.dt == "auto"
    assert cfg.stepper.dt_max == 1e-2
    assert cfg.t_end == 0.1
    assert cfg.sample_every == 1
    assert cfg.seed == 0
    assert cfg.initial.kind == "taylor_green"
    assert cfg.checks == ("eqth1", "eqth2", "eqth3", "continuity")
    assert cfg.tol == 1e-3


def test_config_inline_comments_and_spacing():
    cfg = parse_config(textwrap.dedent("""\
        # a full-line comment
        [grid]
        n = 8          # power of two
        [run]
        t_end = 0.25
    """))
    assert cfg.grid.n_per_axis == 8
    assert cfg.t_end == 0.25


def test_config_rejections_name_key_and_line():
    text = "[grid]\nn = 16\n[params]\nbeta = -2.0\n[run]\nt_end = 1\n"
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    assert ei.value.key == "params.beta"
    assert ei.value.line == 4
    assert "params.beta" in str(ei.value)

    with pytest.raises(ConfigError) as ei:
        parse_config("[grid]\nn = 16\nbogus = 1\n[run]\nt_end = 1\n")
    assert ei.value.key == "grid.bogus"
    assert ei.value.line == 3

    with pytest.raises(ConfigError) as ei:
        parse_config("[nonsense]\nx = 1\n")
    assert ei.value.line == 1

    with pytest.raises(ConfigError) as ei:
        parse_config("[grid]\nn = 16\nn = 32\n[run]\nt_end = 1\n")
    assert "duplicate" in str(ei.value)

    with pytest.raises(ConfigError) as ei:
        parse_config("n = 16\n")  # key before any section header
    assert ei.value.line == 1

    with pytest.raises(ConfigError) as ei:
        parse_config("[grid]\nn = sixteen\n[run]\nt_end = 1\n")
    assert ei.value.key == "grid.n"


def test_config_missing_required_key():
    with pytest.raises(ConfigError) as ei:
        parse_config("[grid]\nn = 16\n")
    assert ei.value.key == "run.t_end"
    with pytest.raises(ConfigError) as ei:
        parse_config("[run]\nt_end = 1\n")
    assert ei.value.key == "grid.n"


@pytest.mark.parametrize("snippet,key", [
    ("[grid]\nn = 12\n[run]\nt_end = 1\n", "grid.n"),
    ("[grid]\nn = 16\nfriedrich_radius = 6.0\n[run]\nt_end = 1\n",
     "grid.friedrich_radius"),
    ("[grid]\nn = 16\nbox_length = -1\n[run]\nt_end = 1\n", "grid.box_length"),
    ("[grid]\nn = 16\n[params]\nalpha = -1\n[run]\nt_end = 1\n", "params.alpha"),
    ("[grid]\nn = 16\n[params]\nnu_h = 0\n[run]\nt_end = 1\n", "params.nu_h"),
    ("[grid]\nn = 16\n[params]\nnu_3 = -1\n[run]\nt_end = 1\n", "params.nu_3"),
    ("[grid]\nn = 16\n[params]\noverflow_guard = 701\n[run]\nt_end = 1\n",
     "params.overflow_guard"),
    ("[grid]\nn = 16\n[stepper]\ndt = -0.1\n[run]\nt_end = 1\n", "stepper.dt"),
    ("[grid]\nn = 16\n[stepper]\ncfl_safety = 1.5\n[run]\nt_end = 1\n",
     "stepper.cfl_safety"),
    ("[grid]\nn = 16\n[stepper]\ndt_max = 0\n[run]\nt_end = 1\n",
     "stepper.dt_max"),
    ("[grid]\nn = 16\n[stepper]\nscheme = RK4\n[run]\nt_end = 1\n",
     "stepper.scheme"),
    ("[grid]\nn = 16\n[run]\nt_end = 0\n", "run.t_end"),
    ("[grid]\nn = 16\n[run]\nt_end = 1\nsample_every = 0\n",
     "run.sample_every"),
    ("[grid]\nn = 16\n[run]\nt_end = 1\n[initial]\nkind = vortex\n",
     "initial.kind"),
    ("[grid]\nn = 16\n[run]\nt_end = 1\n[initial]\nkind = random_divfree\n"
     "band_lo = 0\n", "initial.band_lo"),
    ("[grid]\nn = 16\n[run]\nt_end = 1\n[initial]\nkind = random_divfree\n"
     "band_lo = 3\nband_hi = 2\n", "initial.band_hi"),
    ("[grid]\nn = 16\n[run]\nt_end = 1\n[initial]\nkind = checkpoint\n",
     "initial.path"),
    ("[grid]\nn = 16\n[run]\nt_end = 1\n[verify]\ntol = 0\n", "verify.tol"),
    ("[grid]\nn = 16\n[run]\nt_end = 1\n[verify]\nchecks = eqth1, bogus\n",
     "verify.checks"),
])
def test_config_value_validation(snippet, key):
    with pytest.raises(ConfigError) as ei:
        parse_config(snippet)
    assert ei.value.key == key


def test_config_rejects_keys_of_other_initial_kinds():
    text = ("[grid]\nn = 16\n[run]\nt_end = 1\n"
            "[initial]\nkind = taylor_green\nseed = 3\n")
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    assert ei.value.key == "initial.seed"
    # the same key is fine for the kind it belongs to
    ok = ("[grid]\nn = 16\n[run]\nt_end = 1\n"
          "[initial]\nkind = random_divfree\nseed = 3\n")
    assert parse_config(ok).initial.seed == 3


def test_check_selection_modes():
    assert parse_config(
        "[grid]\nn = 8\n[run]\nt_end = 1\n[verify]\nchecks = none\n"
    ).checks == ()
    assert parse_config(
        "[grid]\nn = 8\n[run]\nt_end = 1\n[verify]\nchecks = eqth1, continuity\n"
    ).checks == ("eqth1", "continuity")
    # auto keys off the parameter regime
    aniso = parse_config(
        "[grid]\nn = 8\n[params]\nnu_3 = 0\n[run]\nt_end = 1\n")
    assert aniso.checks == ("eqth21", "eqth22", "continuity")
    weak = parse_config(
        "[grid]\nn = 8\n[params]\nnu_h = 0.5\nnu_3 = 0.5\n[run]\nt_end = 1\n")
    assert weak.checks == ("eqth1", "continuity")
    undamped = parse_config(
        "[grid]\nn = 8\n[params]\nalpha = 0\n[run]\nt_end = 1\n")
    assert undamped.checks == ("eqth1", "continuity")


# ---------------------------------------------------------------------------
# checkpoints

def test_checkpoint_round_trip_bit_exact(tmp_path):
    g = make_grid(8, L=1.7)
    F = random_spectral(g, seed=30)
    path = tmp_path / "field.ckpt"
    write_checkpoint(path, F, t=0.625)
    back, t = read_checkpoint(path)
    assert t == 0.625
    assert back.grid == g
    assert np.array_equal(back.coeffs, F.coeffs)
    assert back.coeffs.dtype == np.complex128


def test_checkpoint_layout_is_lexicographic(tmp_path):
    # independently decode one coefficient from the raw bytes
    g = make_grid(4)
    c = 1.25 - 0.5j
    F = single_mode(g, (0, 0, 1), [0.0, c, 0.0])
    path = tmp_path / "mode.ckpt"
    write_checkpoint(path, F, t=0.0)
    data = path.read_bytes()
    assert data[:4] == b"EDNS"
    assert data[4] == 1
    n, L, radius, t = struct.unpack_from("<Qddd", data, 5)
    assert n == 4 and t == 0.0
    assert L == pytest.approx(2.0 * math.pi)
    # wavevectors ascend from -n/2: (0,0,1) sits at per-axis indices (2,2,3)
    flat_index = (2 * 4 + 2) * 4 + 3
    offset = 5 + struct.calcsize("<Qddd") + flat_index * 48 + 1 * 16
    re, im = struct.unpack_from("<dd", data, offset)
    assert complex(re, im) == c


def test_checkpoint_error_paths(tmp_path):
    g = make_grid(4)
    F = random_spectral(g, seed=31)
    good = tmp_path / "good.ckpt"
    write_checkpoint(good, F, t=0.0)
    raw = bytearray(good.read_bytes())

    bad_magic = tmp_path / "magic.ckpt"
    bad_magic.write_bytes(b"XXXX" + bytes(raw[4:]))
    with pytest.raises(CheckpointError):
        read_checkpoint(bad_magic)

    bad_version = tmp_path / "version.ckpt"
    bad_version.write_bytes(bytes(raw[:4]) + bytes([9]) + bytes(raw[5:]))
    with pytest.raises(CheckpointError):
        read_checkpoint(bad_version)

    truncated = tmp_path / "short.ckpt"
    truncated.write_bytes(bytes(raw[:-8]))
    with pytest.raises(CheckpointError):
        read_checkpoint(truncated)

    with pytest.raises(OSError):
        read_checkpoint(tmp_path / "missing.ckpt")


# ---------------------------------------------------------------------------
# run artifacts

def run_cli(*argv):
    return main(list(argv))


def test_run_writes_artifacts_and_passes(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    code = run_cli("run", "--config", cfg, "--out", str(out))
    assert code == 0
    for name in ("ledger.csv", "u0.ckpt", "final.ckpt",
                 "margins.txt", "margins.kv"):
        assert (out / name).exists(), name
    printed = capsys.readouterr().out
    assert "EQTH1" in printed and "PASS" in printed and "FAIL" not in printed

    rows, meta = read_ledger_csv(out / "ledger.csv")
    assert meta["n"] == "8"
    assert meta["verify"] == "eqth1,eqth2,eqth3,continuity"
    assert rows[0].t == 0.0
    assert rows[-1].t == pytest.approx(0.05, abs=1e-12)

    u0, t0 = read_checkpoint(out / "u0.ckpt")
    assert t0 == 0.0
    assert sobolev_norm(u0, 0.0) > 0.0
    _, t1 = read_checkpoint(out / "final.ckpt")
    assert t1 == pytest.approx(0.05, abs=1e-12)


def test_run_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, **{"initial.kind": "random_divfree",
                                 "run.seed": 7})
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("run", "--config", cfg, "--out", str(a)) == 0
    assert run_cli("run", "--config", cfg, "--out", str(b)) == 0
    for name in ("ledger.csv", "u0.ckpt", "final.ckpt", "margins.kv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_master_seed_override_changes_field(tmp_path):
    cfg = write_cfg(tmp_path, **{"initial.kind": "random_divfree"})
    a, b, c = (tmp_path / d for d in ("a", "b", "c"))
    run_cli("run", "--config", cfg, "--out", str(a), "--seed", "1")
    run_cli("run", "--config", cfg, "--out", str(b), "--seed", "2")
    run_cli("run", "--config", cfg, "--out", str(c), "--seed", "1")
    assert (a / "u0.ckpt").read_bytes() != (b / "u0.ckpt").read_bytes()
    assert (a / "u0.ckpt").read_bytes() == (c / "u0.ckpt").read_bytes()


def test_resume_matches_uninterrupted_run(tmp_path):
    seed_cfg = {"initial.kind": "random_divfree", "run.seed": 11}
    first = write_cfg(tmp_path, name="first.cfg", **seed_cfg,
                      **{"run.t_end": 0.06})
    full = write_cfg(tmp_path, name="full.cfg", **seed_cfg,
                     **{"run.t_end": 0.12})
    out1, outf = tmp_path / "part1", tmp_path / "full"
    assert run_cli("run", "--config", first, "--out", str(out1)) == 0
    assert run_cli("run", "--config", full, "--out", str(outf)) == 0

    resume = write_cfg(
        tmp_path, name="resume.cfg",
        **{"run.t_end": 0.12,
           "initial.kind": "checkpoint",
           "initial.path": str(out1 / "final.ckpt")})
    out2 = tmp_path / "part2"
    assert run_cli("run", "--config", resume, "--out", str(out2)) == 0

    tail, meta2 = read_ledger_csv(out2 / "ledger.csv")
    whole, _ = read_ledger_csv(outf / "ledger.csv")
    # %.17g metadata round-trips the checkpoint time exactly
    assert float(meta2["t_start"]) == tail[0].t
    assert tail[0].t == pytest.approx(0.06, abs=1e-12)
    offset = len(whole) - len(tail)
    base = whole[offset]
    assert base.t == pytest.approx(tail[0].t, abs=1e-12)
    for i, row in enumerate(tail):
        ref = whole[offset + i]
        assert row.t == pytest.approx(ref.t, abs=1e-12)
        # instantaneous quantities agree to rounding
        for attr in ("l2_sq", "grad_sq", "grad_h_sq", "d3_sq", "lap_sq"):
            assert getattr(row, attr) == pytest.approx(
                getattr(ref, attr), rel=1e-12), attr
        assert row.damping.d0 == pytest.approx(ref.damping.d0, rel=1e-12)
        # running integrals restart at the resume time
        assert row.cum.grad_sq == pytest.approx(
            ref.cum.grad_sq - base.cum.grad_sq, rel=1e-10, abs=1e-15)


def test_verify_reproduces_run_verdicts(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    run_cli("run", "--config", cfg, "--out", str(out))
    run_kv = (out / "margins.kv").read_text()
    capsys.readouterr()

    code = run_cli("verify", str(out / "ledger.csv"), str(out / "u0.ckpt"))
    assert code == 0
    from edns.cli_io import _verify_artifacts
    from edns.energy_ledger import margins_to_kv

    reports = _verify_artifacts(out / "ledger.csv", out / "u0.ckpt")
    assert margins_to_kv(reports) == run_kv  # bit-identical re-verification


def test_verify_flags_tampered_ledger(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    run_cli("run", "--config", cfg, "--out", str(out))
    ledger = out / "ledger.csv"
    lines = ledger.read_text().splitlines()
    # inflate l2_sq of the last sample far beyond the initial energy
    cells = lines[-1].split(",")
    cells[1] = f"{float(cells[1]) * 50.0:.17g}"
    lines[-1] = ",".join(cells)
    ledger.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    code = run_cli("verify", str(ledger), str(out / "u0.ckpt"))
    assert code == 1
    assert "FAIL" in capsys.readouterr().out


def test_run_exit_one_when_a_check_fails(tmp_path, capsys):
    # an unresolved step size (dt far above dt_max) breaks the trapezoid
    # budget: eqth1 margin blows past the tolerance and run exits 1
    cfg = write_cfg(tmp_path, **{"stepper.dt": 0.025, "run.t_end": 0.2,
                                 "verify.tol": 1e-9})
    out = tmp_path / "out"
    code = run_cli("run", "--config", cfg, "--out", str(out))
    assert code == 1
    assert "FAIL" in capsys.readouterr().out


def test_checkpoint_grid_mismatch_is_config_error(tmp_path, capsys):
    g = make_grid(8)
    F = random_spectral(g, seed=32)
    ckpt = tmp_path / "other.ckpt"
    write_checkpoint(ckpt, F, t=0.0)
    cfg = write_cfg(tmp_path, **{"grid.n": 16,
                                 "initial.kind": "checkpoint",
                                 "initial.path": str(ckpt)})
    code = run_cli("run", "--config", cfg, "--out", str(tmp_path / "out"))
    assert code == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# other subcommands

def test_lemmas_subcommand(capsys):
    code = run_cli("lemmas", "--suite", "c2k")
    assert code == 0
    out = capsys.readouterr().out
    assert "c2k" in out
    assert "total failures: 0" in out


def test_lemmas_all_suites_small_budget(capsys):
    code = run_cli("lemmas", "--trials", "2000", "--seed", "5")
    assert code == 0
    out = capsys.readouterr().out
    for name in ("lemma4", "lemma44", "c2k", "gronwall"):
        assert name in out
    assert "total failures: 0" in out


def test_stability_subcommand(tmp_path, capsys):
    cfg = write_cfg(tmp_path, **{"run.t_end": 0.02, "stepper.dt": 2e-3})
    code = run_cli("stability", "--config", cfg, "--delta", "1e-6")
    assert code == 0
    out = capsys.readouterr().out
    assert "sup_t" in out
    assert "STABILITY_ISO" in out and "PASS" in out


def test_stability_rejects_anisotropic_config(tmp_path, capsys):
    cfg = write_cfg(tmp_path, **{"params.nu_3": 0.0})
    code = run_cli("stability", "--config", cfg)
    assert code == 2
    assert "isotropic" in capsys.readouterr().err


def test_plotdata_selects_columns(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    run_cli("run", "--config", cfg, "--out", str(out))
    rows, _ = read_ledger_csv(out / "ledger.csv")
    capsys.readouterr()

    code = run_cli("plotdata", str(out / "ledger.csv"),
                   "--columns", "t,l2_sq")
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    header = lines[0].split("\t")
    assert header[:2] == ["t", "l2_sq"]
    # enabled checks contribute lhs/rhs series
    assert "eqth1_lhs" in header and "eqth1_rhs" in header
    assert len(lines) == 1 + len(rows)
    first = lines[1].split("\t")
    assert float(first[0]) == rows[0].t
    assert float(first[1]) == rows[0].l2_sq


def test_plotdata_rejects_unknown_column(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    run_cli("run", "--config", cfg, "--out", str(out))
    capsys.readouterr()
    code = run_cli("plotdata", str(out / "ledger.csv"),
                   "--columns", "t,enstrophy")
    assert code == 2
    assert "enstrophy" in capsys.readouterr().err


def test_cli_error_reporting(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[params]\nbeta = -1\n[grid]\nn = 8\n[run]\nt_end = 1\n")
    code = run_cli("run", "--config", str(bad))
    assert code == 2
    err = capsys.readouterr().err
    assert "error: line 2" in err and "params.beta" in err

    code = run_cli("run", "--config", str(tmp_path / "absent.cfg"))
    assert code == 2

    with pytest.raises(SystemExit):
        run_cli("frobnicate")
    with pytest.raises(SystemExit):
        run_cli("run")  # --config is required
