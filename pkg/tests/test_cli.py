import json
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
CASES = REPO / "cases"


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "ubhl.cli", *args],
                          capture_output=True, text=True, cwd=cwd or REPO,
                          timeout=560)


def test_check_rnm_exit_zero():
    out = run_cli("check", str(CASES / "rnm" / "program.ubhl"),
                  str(CASES / "rnm" / "proof.json"), "--quiet")
    assert out.returncode == 0, out.stdout + out.stderr
    assert "ACCEPTED" in out.stdout


def test_check_mwsv_exit_two():
    out = run_cli("check", str(CASES / "mwsv" / "program.ubhl"),
                  str(CASES / "mwsv" / "proof.json"), "--quiet")
    assert out.returncode == 2, out.stdout + out.stderr


def test_check_corrupted_index_exit_one(tmp_path):
    doc = json.loads((CASES / "rnm" / "proof.json").read_text())

    def bad_seq(node):
        if node.get("rule") == "seq":
            node["index"] = "beta/3"
            return True
        return any(bad_seq(c) for c in node.get("children", []))

    bad_seq(doc["root"])
    bad = tmp_path / "proof.json"
    bad.write_text(json.dumps(doc))
    out = run_cli("check", str(CASES / "rnm" / "program.ubhl"), str(bad), "--quiet")
    assert out.returncode == 1
    assert "seq" in out.stdout


def test_run_is_seeded_and_prints_memory(tmp_path):
    prog = tmp_path / "p.ubhl"
    prog.write_text("var x : int;\nproc main(w) { x <$ unifint(0, 9); } return x\n")
    a = run_cli("run", str(prog), "--seed", "5")
    b = run_cli("run", str(prog), "--seed", "5")
    assert a.returncode == 0 and a.stdout == b.stdout
    assert json.loads(a.stdout)["x"] == json.loads(a.stdout)["res"]


def test_exact_subcommand(tmp_path):
    prog = tmp_path / "p.ubhl"
    prog.write_text("var x : bool;\nproc main(w) { x <$ bern(1/2); } return x\n")
    out = run_cli("exact", str(prog))
    assert out.returncode == 0
    assert "support: 2 memories" in out.stdout


def test_validate_writes_reports(tmp_path):
    out = run_cli("validate", "sv", "--Q", "5", "--trials", "40", "--seed", "7",
                  "--adversary", "fixed", "--out", str(tmp_path))
    assert out.returncode == 0, out.stdout + out.stderr
    report_path = tmp_path / "validate-sv-fixed-seed7.json"
    payload = json.loads(report_path.read_text())
    assert payload["verdict"] is True
    assert payload["estimate"]["trials"] == 40
    # identical invocation produces byte-identical artifacts
    first = report_path.read_bytes()
    out2 = run_cli("validate", "sv", "--Q", "5", "--trials", "40", "--seed", "7",
                   "--adversary", "fixed", "--out", str(tmp_path))
    assert out2.returncode == 0
    assert report_path.read_bytes() == first


def test_obligations_export(tmp_path):
    out = run_cli("obligations", str(CASES / "mwsv" / "program.ubhl"),
                  str(CASES / "mwsv" / "proof.json"),
                  "--export", str(tmp_path), "--open-only")
    assert out.returncode == 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    exported = [m for m in manifest if m["file"]]
    assert len(exported) >= 4
    text = (tmp_path / exported[0]["file"]).read_text()
    assert text.startswith("(set-logic ALL)")
    assert "(check-sat)" in text


def test_embed_subcommand(tmp_path):
    out = run_cli("embed", str(CASES / "rnm" / "program.ubhl"),
                  str(CASES / "rnm" / "proof.json"), "--out", str(tmp_path))
    assert out.returncode == 0, out.stdout + out.stderr
    inst = (tmp_path / "instrumented.ubhl").read_text()
    assert "havoc noisy[r];" in inst
    assert "assume" in inst
    manifest = json.loads((tmp_path / "wp-manifest.json").read_text())
    assert manifest["consistent"] is True
