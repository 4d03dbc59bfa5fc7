import json
import os
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from imagestar import Conv2dLayer, FCLayer, MaxPoolLayer, Network, ParseError, ReLULayer, ShapeError, fileio
from imagestar.cli import main
from imagestar.robustness import brightening_set


def small_net():
    # 2x2 image -> conv -> relu -> fc with two logits
    return Network(
        [
            Conv2dLayer(np.array([[1.0, -0.5], [0.25, 1.0]]), [0.1], padding=(0, 1, 0, 1)),
            ReLULayer(),
            MaxPoolLayer((2, 2), stride=1),
            FCLayer([[-1.0], [1.0]], [60.0, 0.0]),
        ],
        (2, 2, 1),
        labels=["bright", "dark"],
    )


@pytest.fixture
def files(tmp_path):
    net_path = tmp_path / "net.json"
    fileio.save_network(small_net(), net_path)
    img_path = tmp_path / "img.csv"
    fileio.save_image(np.array([[250.0, 10.0], [30.0, 5.0]]), img_path)
    return tmp_path, str(net_path), str(img_path)


def test_network_round_trip(tmp_path, rng):
    net = small_net()
    path = tmp_path / "n.json"
    fileio.save_network(net, path)
    back = fileio.load_network(path)
    jsonschema.validate(json.loads(path.read_text()), fileio.schema("network"))
    x = rng.normal(size=(2, 2, 1))
    assert np.array_equal(net.evaluate(x), back.evaluate(x))
    assert back.labels == ["bright", "dark"]
    assert fileio.dumps_network(back) == fileio.dumps_network(net)


def test_image_round_trip_is_lossless(tmp_path, rng):
    img = rng.normal(size=(3, 2, 2)) * 1e3
    path = tmp_path / "x.csv"
    fileio.save_image(img, path)
    assert np.array_equal(fileio.load_image(path), img)
    lines = path.read_text().splitlines()
    assert lines[0] == "3,2,2" and len(lines) == 7


@pytest.mark.parametrize(
    "text, msg",
    [
        ("", "empty"),
        ("2,2\n1,2,3,4\n", "header"),
        ("1,1,2\n1\n", "announces 2"),
        ("1,1,1\nabc\n", "line 2"),
    ],
)
def test_image_parse_errors(text, msg):
    with pytest.raises(ParseError, match=msg):
        fileio.parse_image(text)


@pytest.mark.parametrize(
    "doc, msg",
    [
        ({"layers": []}, "input_shape"),
        ({"input_shape": [1, 1, 1], "layers": [{"type": "pool"}]}, r"layers\[0\].type"),
        ({"input_shape": [1, 1, 1], "layers": [{"type": "fc", "weights": [[1.0]]}]}, r"layers\[0\].bias"),
        ({"input_shape": [1, 1, 1], "layers": [{"type": "relu", "alpha": 1}]}, "unexpected"),
        ({"input_shape": [2, 2, 1], "layers": [{"type": "maxpool", "pool_size": [1.5, 2]}]}, "integers"),
    ],
)
def test_network_parse_errors(doc, msg):
    with pytest.raises(ParseError, match=msg):
        fileio.network_from_dict(doc)


def test_network_shape_error():
    doc = {"input_shape": [2, 2, 1], "layers": [{"type": "fc", "weights": [[1.0, 1.0]], "bias": [0.0]}]}
    with pytest.raises(ShapeError):
        fileio.network_from_dict(doc)


def test_bad_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"input_shape": [1,1,1],\n "layers": [}')
    with pytest.raises(ParseError, match="line 2"):
        fileio.load_network(p)


def run(argv):
    return main([str(a) for a in argv])


def test_verify_exact_not_robust_writes_counterexamples(files):
    tmp, net, img = files
    out = tmp / "rep.json"
    ranges = tmp / "ranges.csv"
    code = run(["verify", "--network", net, "--image", img, "--attack", "brightening", "--d", 240,
                "--delta", 1.0, "--scheme", "exact", "--target", "bright", "--out", out, "--ranges", ranges])
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, fileio.schema("report"))
    assert code == 1 and rep["verdict"] == "NotRobust" and rep["exit_code"] == 1
    assert rep["counterexamples"]
    s = brightening_set(fileio.load_image(img), 240, 1.0)
    model = fileio.load_network(net)
    for c in rep["counterexamples"]:
        x = fileio.load_image(tmp / c["file"])
        assert s.contains_image(x)
        y = model.evaluate(x)
        assert y[1] >= y[0]
    # the ranges enclose the logits of every counterexample and of random members
    rows = fileio.load_ranges(ranges)
    assert [r[0] for r in rows] == ["bright", "dark"]
    for x in s.sample(50, seed=0):
        y = model.evaluate(x)
        assert all(lo - 1e-9 <= v <= hi + 1e-9 for (_, lo, hi), v in zip(rows, y))


def test_verify_robust_and_unknown(files):
    tmp, net, img = files
    base = ["verify", "--network", net, "--image", img, "--attack", "brightening", "--d", 240, "--target", "0"]
    assert run(base + ["--delta", 0.01, "--scheme", "exact"]) == 0
    assert run(base + ["--delta", 0.01]) == 0
    code = run(base + ["--delta", 1.0, "--scheme", "approx", "--out", tmp / "a.json"])
    assert code == 2
    rep = json.loads((tmp / "a.json").read_text())
    assert rep["verdict"] == "Unknown" and rep["counterexamples"] == []
    assert run(base + ["--delta", 1.0, "--falsify-samples", 200, "--out", tmp / "f.json"]) == 1


def test_error_exit_codes(files, tmp_path, capsys):
    _, net, img = files
    assert run(["verify", "--network", net, "--image", img, "--attack", "brightening", "--target", "0"]) == 3
    assert run(["verify", "--network", net, "--image", img, "--attack", "zono", "--delta", 0.1,
                "--target", "cow"]) == 3
    assert run(["reach", "--network", tmp_path / "missing.json", "--image", img, "--attack", "zono",
                "--delta", 0.1]) == 3
    with pytest.raises(SystemExit) as info:
        run(["verify", "--bogus"])
    assert info.value.code == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("1,1,1\n")
    assert run(["reach", "--network", net, "--image", bad, "--attack", "zono", "--delta", 0.1]) == 3
    assert "error" in capsys.readouterr().err


def test_reach_report_and_determinism(files, capsys):
    tmp, net, img = files
    args = ["reach", "--network", net, "--image", img, "--attack", "brightening", "--d", 200,
            "--delta", 0.5, "--scheme", "exact"]
    assert run(args + ["--out", tmp / "r1.json"]) == 0
    assert run(args + ["--out", tmp / "r2.json", "--workers", 3]) == 0
    r1 = json.loads((tmp / "r1.json").read_text())
    r2 = json.loads((tmp / "r2.json").read_text())
    jsonschema.validate(r1, fileio.schema("report"))
    for r in (r1, r2):
        r.pop("elapsed_seconds")
    assert r1 == r2
    assert run(args) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["command"] == "reach"


def test_interp_attack(files):
    tmp, net, img = files
    adv = tmp / "adv.csv"
    fileio.save_image(np.array([[0.0, 10.0], [30.0, 5.0]]), adv)
    code = run(["verify", "--network", net, "--image", img, "--attack", "interp", "--adv", adv,
                "--l", 0.0, "--delta-max", 1.0, "--scheme", "exact", "--target", "bright"])
    assert code == 1


def test_console_script(files):
    tmp, net, img = files
    proc = subprocess.run(
        [sys.executable, "-m", "imagestar.cli", "verify", "--network", net, "--image", img,
         "--attack", "zono", "--delta", "0.1", "--target", "dark"],
        capture_output=True, text=True, env={**os.environ},
    )
    assert proc.returncode == 0, proc.stderr
    assert "Robust" in proc.stderr
