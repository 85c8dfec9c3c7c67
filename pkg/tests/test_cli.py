import json
from pathlib import Path

import jsonschema

from rtcnlab import cli

SCHEMA_DIR = Path(cli.__file__).parent / "data" / "schemas"


def _schema(name):
    return json.loads((SCHEMA_DIR / name).read_text())


def run(argv):
    return cli.main(argv)


def test_generate_two_leaves(tmp_path):
    out = tmp_path / "net.events"
    assert run(["generate", "--leaves", "2", "--seed", "1",
                "--format", "events", "--out", str(out)]) == 0
    assert out.read_text() == "RTCN v1 n=2\n"
    manifest = json.loads((tmp_path / "net.events.manifest.json").read_text())
    jsonschema.validate(manifest, _schema("manifest.schema.json"))


def test_generate_reproducible_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["generate", "--leaves", "100", "--seed", "7",
                    "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    ma = json.loads((tmp_path / "a.manifest.json").read_text())
    mb = json.loads((tmp_path / "b.manifest.json").read_text())
    assert ma["outputs"][str(a)] == mb["outputs"][str(b)]


def test_generate_usage_error():
    assert run(["generate", "--leaves", "1"]) == 1


def test_generate_dot(tmp_path):
    out = tmp_path / "net.dot"
    assert run(["generate", "--leaves", "8", "--seed", "2", "--format",
                "dot", "--out", str(out)]) == 0
    assert out.read_text().startswith("digraph")


def test_count_cherry_on_two_leaves(tmp_path):
    net = tmp_path / "net.events"
    run(["generate", "--leaves", "2", "--seed", "1", "--out", str(net)])
    out = tmp_path / "count.json"
    assert run(["count", "--input", str(net), "--pattern", "cherry",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, _schema("count.schema.json"))
    assert doc["count"] == 1


def test_count_trident_single_reticulation(tmp_path):
    net = tmp_path / "net.events"
    net.write_text("RTCN v1 n=3\nR 0 1\n")
    out = tmp_path / "count.json"
    assert run(["count", "--input", str(net), "--pattern", "trident",
                "--out", str(out)]) == 0
    assert json.loads(out.read_text())["count"] == 1


def test_count_unknown_pattern(tmp_path):
    net = tmp_path / "net.events"
    net.write_text("RTCN v1 n=2\n")
    assert run(["count", "--input", str(net), "--pattern", "zebra"]) == 1


def test_count_malformed_network(tmp_path):
    net = tmp_path / "net.events"
    net.write_text("RTCN v1 n=3\nQ 0\n")
    assert run(["count", "--input", str(net), "--pattern", "cherry"]) == 2


def test_classify_catalog_ids(tmp_path):
    out = tmp_path / "c.json"
    assert run(["classify", "--pattern", "cherry", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, _schema("classify.schema.json"))
    assert doc["label"] == "Poisson" and not doc["conjectural"]
    assert run(["classify", "--pattern", "trident", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["label"] == "Normal"


def test_classify_custom_pattern_file(tmp_path):
    spec = {"initial_lineages": 1,
            "events": [{"type": "branch", "a": 0}] * 4}
    path = tmp_path / "pat.json"
    path.write_text(json.dumps(spec))
    out = tmp_path / "c.json"
    assert run(["classify", "--pattern-file", str(path),
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["conjectural"] is True


def test_verify_conjecture_suite(tmp_path):
    out = tmp_path / "report.json"
    assert run(["verify", "--suite", "conjecture", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, _schema("verify.schema.json"))
    assert doc["passed"] is True


def test_verify_moments_with_perturbed_sigma(tmp_path):
    good = json.loads((Path(cli.__file__).parent / "data" /
                       "sigma.json").read_text())
    good["matrix"][2][2] = "25/637"
    bad = tmp_path / "sigma.json"
    bad.write_text(json.dumps(good))
    out = tmp_path / "report.json"
    code = run(["verify", "--suite", "moments", "--sigma-file", str(bad),
                "--out", str(out)])
    assert code == 3
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, _schema("verify.schema.json"))
    assert doc["passed"] is False


def test_classify_malformed_pattern_file(tmp_path):
    path = tmp_path / "pat.json"
    path.write_text("{not json")
    assert run(["classify", "--pattern-file", str(path)]) == 2
    path.write_text(json.dumps({"initial_lineages": 2,
                                "events": [{"type": "branch", "a": 0}]}))
    assert run(["classify", "--pattern-file", str(path)]) == 2


def test_verify_coupling_small(tmp_path):
    out = tmp_path / "coupling.json"
    assert run(["verify", "--suite", "coupling", "--leaves", "4",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, _schema("verify.schema.json"))
    assert all(c["passed"] for c in doc["checks"])


def test_verify_unknown_suite():
    assert run(["verify", "--suite", "nonsense"]) == 1


def test_bad_subcommand_is_usage_error():
    assert run(["frobnicate"]) == 1


def test_manifest_replay_reproduces_output(tmp_path):
    out = tmp_path / "net.events"
    assert run(["generate", "--leaves", "60", "--seed", "13",
                "--out", str(out)]) == 0
    manifest = json.loads((tmp_path / "net.events.manifest.json").read_text())
    cfg = manifest["config"]
    replay_out = tmp_path / "replay.events"
    argv = [manifest["subcommand"], "--leaves", str(cfg["leaves"]),
            "--seed", str(cfg["seed"]), "--format", cfg["format"],
            "--out", str(replay_out)]
    assert run(argv) == 0
    replay_manifest = json.loads(
        (tmp_path / "replay.events.manifest.json").read_text())
    assert manifest["outputs"][str(out)] == \
        replay_manifest["outputs"][str(replay_out)]
