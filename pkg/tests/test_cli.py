import io
from pathlib import Path

import pytest

from rtmbench.cli import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, main
from rtmbench.demos import DEMOS

GOLDEN = Path(__file__).parent / "golden"


def run(*argv: str):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("name", sorted(DEMOS))
def test_demo_matches_golden_transcript(name):
    code, out, _ = run("demo", name)
    assert code == EXIT_OK
    assert out == (GOLDEN / f"demo-{name}.txt").read_text(encoding="utf-8")


def test_mcrl2_demo_content():
    _, out, _ = run("demo", "mcrl2-counterexample")
    assert "('up,#2,'down)" in out
    assert "transposition (#0 #1)" in out
    assert "verdict: not nominally executable" in out


def test_demo_then_compile_verifies(tmp_path):
    _, text, _ = run("demo", "infinite-alphabet")
    src = tmp_path / "ia.ltsa"
    src.write_text(text)
    code, out, _ = run("compile", "rtma", str(src), "--verify", "--depth", "30")
    assert code == EXIT_OK and "verdict: related" in out and "mode: bb" in out


def test_bisim_same_file_exits_zero(tmp_path):
    f = tmp_path / "x.aut"
    f.write_text('des (0,2,2)\n(0,"a",1)\n(1,"tau",0)\n')
    code, out, _ = run("bisim", str(f), str(f))
    assert code == EXIT_OK and "verdict: related" in out
    g = tmp_path / "y.aut"
    g.write_text('des (0,1,2)\n(0,"b",1)\n')
    code, out, _ = run("bisim", str(f), str(g), "--mode", "dpbb")
    assert code == EXIT_NEGATIVE and "distinguishing:" in out


def test_errors_exit_two(tmp_path):
    code, _, err = run("validate", str(tmp_path / "missing.aut"))
    assert code == EXIT_ERROR and "rtmbench:" in err
    bad = tmp_path / "bad.aut"
    bad.write_text("des (0,1,2)\n(0,a\n")
    code, _, err = run("lts", str(bad))
    assert code == EXIT_ERROR and "line 2" in err
    code, _, err = run("lts", str(bad), "--no-such-flag")
    assert code == EXIT_ERROR and "unrecognized arguments: --no-such-flag" in err
    code, _, err = run("validate", str(tmp_path / "file.txt"))
    assert code == EXIT_ERROR and "extension" in err


def test_validate_reports_problems(tmp_path):
    f = tmp_path / "m.rtma"
    f.write_text("support:\ninitial: 'up\nschema: 'up '_ #7 '_ R 'up\n")
    code, out, _ = run("validate", str(f))
    assert code == EXIT_NEGATIVE and "#7" in out


def test_lts_text_and_aut(tmp_path):
    f = tmp_path / "m.rtm"
    f.write_text("initial: q0\nrule: q0 '_ a '1 R q1\n")
    code, out, _ = run("lts", str(f))
    assert code == EXIT_OK and out == 'des (0,1,2)\n(0,"a",1)\n'
    code, out, _ = run("lts", str(f), "--format", "text")
    assert "state 1: 'q1 | '1 ^'_" in out


def test_compile_writes_machine_file(tmp_path):
    src = tmp_path / "c.aut"
    src.write_text('des (0,2,2)\n(0,"a",1)\n(1,"b",0)\n')
    target = tmp_path / "c.rtm"
    code, out, _ = run("compile", "rtm-inf", str(src), "--out", str(target), "--verify")
    assert code == EXIT_OK and "verdict: related" in out and "mode: dpbb" in out
    assert run("validate", str(target))[0] == EXIT_OK
    assert "rule: t 'q1 b 'q0 R s" in target.read_text()


def test_pi_commands(tmp_path):
    f = tmp_path / "t.pi"
    f.write_text("a<b>.0 | a(x).x<c>.0\n")
    code, out, _ = run("pi", "lts", str(f), "--depth", "2", "--format", "text")
    assert code == EXIT_OK and "--tau-->" in out
    code, out, _ = run("pi", "compile", str(f), "--depth", "6", "--verify")
    assert code == EXIT_OK and "verdict: related" in out
    code, out, _ = run("support-check", str(f))
    assert code == EXIT_OK and "certificate: none found" in out


def test_support_check_finds_a_broken_support(tmp_path):
    f = tmp_path / "bad.ltsa"
    f.write_text("support:\ninitial: 'up\nstate: orbit 'up\ntrans: orbit ('up,#3,'up)\n")
    code, out, _ = run("support-check", str(f))
    assert code == EXIT_NEGATIVE and "#3" in out


def test_plot_writes_png(tmp_path):
    code, out, _ = run("demo", "infinite-alphabet", "--plot", str(tmp_path))
    png = tmp_path / "infinite-alphabet.png"
    assert code == EXIT_OK and f"figure: {png}" in out
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    f = tmp_path / "t.pi"
    f.write_text("new z.(a<z>.0)\n")
    code, out, _ = run("pi", "compile", str(f), "--depth", "3", "--verify", "--plot", str(tmp_path / "figs"))
    assert code == EXIT_OK
    assert (tmp_path / "figs" / "t-source.png").exists() and (tmp_path / "figs" / "t-machine.png").exists()
