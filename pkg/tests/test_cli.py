"""End-to-end command-line runs against temporary CSV files."""

import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from idr.cli import EXIT_IO, EXIT_PARSE, EXIT_VALIDATION, main

runner = CliRunner()


def invoke(*args):
    return runner.invoke(main, [str(a) for a in args])


def all_output(result):
    try:
        return result.output + result.stderr
    except ValueError:
        return result.output


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def chain_files(tmp_path):
    """The worked three-point chain plus a fitted model file."""
    data = tmp_path / "train.csv"
    write_csv(data, ["x", "y"], [[1, 3], [2, 1], [3, 2]])
    model = tmp_path / "model.json"
    res = invoke("fit", "--data", data, "--response", "y", "--order", "x:total", "--out", model)
    assert res.exit_code == 0, all_output(res)
    return data, model, res


def test_fit_worked_chain(chain_files):
    _, model, res = chain_files
    assert "n=3" in res.output
    assert "nodes=3" in res.output
    assert "edges=2" in res.output
    assert "mean_crps=" in res.output
    doc = json.loads(model.read_text())
    assert doc["version"] == "1.0"
    assert doc["thresholds"] == [1.0, 2.0, 3.0]
    want = [[0.5, 2 / 3, 1.0], [0.5, 2 / 3, 1.0], [0.0, 2 / 3, 1.0]]
    assert np.allclose(doc["cdf_matrix"], want, atol=1e-15)


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    r1 = invoke("simulate", "--n", 600, "--seed", 7, "--out", a)
    r2 = invoke("simulate", "--n", 600, "--seed", 7, "--out", b)
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    xs = np.array([float(row["x"]) for row in read_csv(a)])
    assert xs.size == 600
    assert np.all((xs > 0) & (xs < 10))


def test_simulated_conditional_mean_near_four(tmp_path):
    out = tmp_path / "big.csv"
    res = invoke("simulate", "--n", 1_000_000, "--seed", 12, "--out", out)
    assert res.exit_code == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    sel = (data[:, 0] > 3.9) & (data[:, 0] < 4.1)
    assert sel.sum() > 1000
    assert abs(data[sel, 1].mean() - 8.0) / 8.0 < 0.02


def test_subagged_fit_is_byte_identical(tmp_path):
    sim = tmp_path / "sim.csv"
    invoke("simulate", "--n", 300, "--seed", 1, "--out", sim)
    outs = []
    for name in ("m1.json", "m2.json"):
        out = tmp_path / name
        res = invoke(
            "fit", "--data", sim, "--response", "y", "--order", "x:total",
            "--out", out, "--subagg-count", 5, "--subagg-size", 100, "--seed", 1,
        )
        assert res.exit_code == 0, all_output(res)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_ensemble_order_string_runs_end_to_end(tmp_path):
    rng = np.random.default_rng(3)
    n = 60
    header = ["hres", "ctr"] + [f"p{i}" for i in range(1, 51)] + ["y"]
    base = rng.uniform(0, 5, size=n)
    rows = np.column_stack([
        base + rng.normal(scale=0.2, size=n),
        base + rng.normal(scale=0.4, size=n),
        base[:, None] + rng.normal(scale=0.5, size=(n, 50)),
        base + rng.normal(scale=0.3, size=n),
    ])
    data = tmp_path / "ens.csv"
    write_csv(data, header, rows.tolist())
    model = tmp_path / "ens.json"
    res = invoke(
        "fit", "--data", data, "--response", "y",
        "--order", "hres:total;ctr:total;p1-p50:icx", "--out", model,
    )
    assert res.exit_code == 0, all_output(res)
    assert "nodes=" in res.output
    # spot check a prediction run on the same table
    pred = tmp_path / "pred.csv"
    res = invoke("predict", "--model", model, "--data", data, "--out", pred,
                 "--quantiles", "0.25,0.75")
    assert res.exit_code == 0, all_output(res)
    rows = read_csv(pred)
    assert len(rows) == n
    assert all(float(r["q0.25"]) <= float(r["q0.75"]) for r in rows)


def test_predict_at_training_points(chain_files):
    data, model, _ = chain_files
    out = data.parent / "pred.csv"
    res = invoke("predict", "--model", model, "--data", data, "--out", out,
                 "--quantiles", "0.5,0.9", "--thresholds", "1,2")
    assert res.exit_code == 0, all_output(res)
    rows = read_csv(out)
    assert [r["provenance"] for r in rows] == ["at_training_point"] * 3
    # medians from the fitted matrix rows
    assert [float(r["q0.5"]) for r in rows] == [1.0, 1.0, 2.0]
    assert [float(r["p_le_1"]) for r in rows] == [0.5, 0.5, 0.0]


def test_predict_interpolates_linearly(chain_files):
    data, model, _ = chain_files
    query = data.parent / "q.csv"
    write_csv(query, ["x"], [[2.25]])
    out = data.parent / "interp.csv"
    res = invoke("predict", "--model", model, "--data", query, "--out", out,
                 "--thresholds", "1", "--interpolate")
    assert res.exit_code == 0, all_output(res)
    row = read_csv(out)[0]
    assert row["provenance"] == "interpolated"
    # 0.75 * F(x=2) + 0.25 * F(x=3) at threshold 1
    assert float(row["p_le_1"]) == pytest.approx(0.75 * 0.5 + 0.25 * 0.0)
    # plain averaging of the two neighbors gives a different value
    res = invoke("predict", "--model", model, "--data", query, "--out", out,
                 "--thresholds", "1")
    assert float(read_csv(out)[0]["p_le_1"]) == pytest.approx(0.25)


def test_predict_incomparable_query_is_climatological(tmp_path):
    data = tmp_path / "cw.csv"
    write_csv(data, ["a", "b", "y"], [[0, 0, 1], [1, 1, 2], [2, 2, 3]])
    model = tmp_path / "cw.json"
    assert invoke("fit", "--data", data, "--response", "y", "--order", "a,b:cw",
                  "--out", model).exit_code == 0
    query = tmp_path / "q.csv"
    write_csv(query, ["a", "b"], [[9, -9]])
    out = tmp_path / "p.csv"
    res = invoke("predict", "--model", model, "--data", query, "--out", out,
                 "--quantiles", "0.5")
    assert res.exit_code == 0, all_output(res)
    row = read_csv(out)[0]
    assert row["provenance"] == "climatological"
    assert float(row["q0.5"]) == 2.0  # pooled responses (1,2,3)


def test_score_perfect_model_has_zero_crps(tmp_path):
    data = tmp_path / "perfect.csv"
    write_csv(data, ["x", "y"], [[1, 1], [2, 2], [3, 3]])
    model = tmp_path / "m.json"
    invoke("fit", "--data", data, "--response", "y", "--order", "x:total", "--out", model)
    out = tmp_path / "scores.csv"
    res = invoke("score", "--model", model, "--data", data, "--response", "y",
                 "--out", out, "--thresholds", "2", "--alphas", "0.5")
    assert res.exit_code == 0, all_output(res)
    assert "mean_crps=0.0" in res.output
    rows = read_csv(out)
    assert [float(r["crps"]) for r in rows] == [0.0, 0.0, 0.0]
    assert [float(r["qs_0.5"]) for r in rows] == [0.0, 0.0, 0.0]


def test_score_model_crps_matches_library(tmp_path):
    rng = np.random.default_rng(8)
    n = 50
    x = rng.uniform(0, 10, size=n)
    y = x + rng.normal(size=n)
    train = tmp_path / "train.csv"
    write_csv(train, ["x", "y"], np.column_stack([x, y]).tolist())
    model = tmp_path / "m.json"
    invoke("fit", "--data", train, "--response", "y", "--order", "x:total", "--out", model)

    test = tmp_path / "test.csv"
    xt = rng.uniform(0, 10, size=20)
    yt = xt + rng.normal(size=20)
    write_csv(test, ["x", "y"], np.column_stack([xt, yt]).tolist())
    out = tmp_path / "s.csv"
    res = invoke("score", "--model", model, "--data", test, "--response", "y", "--out", out)
    assert res.exit_code == 0, all_output(res)

    from idr import crps, load_model, predict_cdf

    m = load_model(model)
    want = [crps(predict_cdf(m, [v]).cdf, t) for v, t in zip(xt, yt)]
    got = [float(r["crps"]) for r in read_csv(out)]
    assert got == pytest.approx(want, abs=1e-10)


def test_true_gamma_scores_are_seed_stable(tmp_path):
    means = []
    for seed in (101, 102):
        sim = tmp_path / f"sim{seed}.csv"
        invoke("simulate", "--n", 10_000, "--seed", seed, "--out", sim)
        out = tmp_path / f"sc{seed}.csv"
        res = invoke("score", "--true-gamma", "--data", sim, "--response", "y",
                     "--out", out, "--seed", seed)
        assert res.exit_code == 0, all_output(res)
        line = next(l for l in res.output.splitlines() if l.startswith("mean_crps="))
        means.append(float(line.split("=", 1)[1]))
    assert abs(means[0] - means[1]) / means[0] < 0.02


def test_pit_histogram_of_true_model_is_flat(tmp_path):
    sim = tmp_path / "sim.csv"
    invoke("simulate", "--n", 10_000, "--seed", 21, "--out", sim)
    scores = tmp_path / "scores.csv"
    res = invoke("score", "--true-gamma", "--data", sim, "--response", "y",
                 "--out", scores, "--seed", 21)
    assert res.exit_code == 0, all_output(res)
    hist = tmp_path / "hist.csv"
    res = invoke("pit-hist", "--scores", scores, "--bins", 10, "--out", hist)
    assert res.exit_code == 0, all_output(res)
    rows = read_csv(hist)
    assert len(rows) == 10
    freqs = [float(r["frequency"]) for r in rows]
    assert sum(int(r["count"]) for r in rows) == 10_000
    assert all(0.08 <= f <= 0.12 for f in freqs), freqs


def test_reliability_table(tmp_path):
    rng = np.random.default_rng(5)
    n = 400
    x = rng.uniform(0, 10, size=n)
    y = x + rng.normal(size=n)
    data = tmp_path / "d.csv"
    write_csv(data, ["x", "y"], np.column_stack([x, y]).tolist())
    model = tmp_path / "m.json"
    invoke("fit", "--data", data, "--response", "y", "--order", "x:total", "--out", model)
    out = tmp_path / "rel.csv"
    res = invoke("reliability", "--model", model, "--data", data, "--response", "y",
                 "--threshold", 5.0, "--bins", 10, "--out", out)
    assert res.exit_code == 0, all_output(res)
    rows = read_csv(out)
    assert len(rows) == 10
    assert sum(int(r["count"]) for r in rows) == n


# ---------------------------------------------------------------------------
# failure modes and exit codes
# ---------------------------------------------------------------------------

def test_bad_order_string_is_a_parse_error(tmp_path):
    data = tmp_path / "d.csv"
    write_csv(data, ["x", "y"], [[1, 1]])
    res = invoke("fit", "--data", data, "--response", "y", "--order", "x:sideways",
                 "--out", tmp_path / "m.json")
    assert res.exit_code == EXIT_PARSE
    assert "error" in all_output(res)


def test_unknown_order_column_is_a_parse_error(tmp_path):
    data = tmp_path / "d.csv"
    write_csv(data, ["x", "y"], [[1, 1]])
    res = invoke("fit", "--data", data, "--response", "y", "--order", "z:total",
                 "--out", tmp_path / "m.json")
    assert res.exit_code == EXIT_PARSE
    assert "z" in all_output(res)


def test_missing_file_is_an_io_error(tmp_path):
    res = invoke("fit", "--data", tmp_path / "nope.csv", "--response", "y",
                 "--order", "x:total", "--out", tmp_path / "m.json")
    assert res.exit_code == EXIT_IO


def test_empty_data_is_a_validation_error(tmp_path):
    data = tmp_path / "empty.csv"
    data.write_text("x,y\n")
    res = invoke("fit", "--data", data, "--response", "y", "--order", "x:total",
                 "--out", tmp_path / "m.json")
    assert res.exit_code == EXIT_VALIDATION


def test_malformed_rows_report_line_numbers(tmp_path):
    data = tmp_path / "bad.csv"
    data.write_text("x,y\n1,2\n,3\n4,oops\n")
    res = invoke("fit", "--data", data, "--response", "y", "--order", "x:total",
                 "--out", tmp_path / "m.json")
    assert res.exit_code == EXIT_PARSE
    err = all_output(res)
    assert "lines 3, 4" in err
    assert "'x'" in err and "'y'" in err


def test_exit_codes_documented_in_help():
    res = invoke("--help")
    assert res.exit_code == 0
    for token in ("2", "3", "4"):
        assert token in res.output


def test_order_range_and_duplicate_detection(tmp_path):
    header = ["a", "b", "c", "y"]
    data = tmp_path / "d.csv"
    write_csv(data, header, [[1, 2, 3, 4], [2, 3, 4, 5]])
    # ranges use header positions: a-c covers a, b, c
    res = invoke("fit", "--data", data, "--response", "y", "--order", "a-c:st",
                 "--out", tmp_path / "m.json")
    assert res.exit_code == 0, all_output(res)
    res = invoke("fit", "--data", data, "--response", "y", "--order", "a:total;a-c:st",
                 "--out", tmp_path / "m2.json")
    assert res.exit_code == EXIT_PARSE  # 'a' appears twice
