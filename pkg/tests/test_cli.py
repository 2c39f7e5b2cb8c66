from __future__ import annotations

import json

import pytest

from sparse_agreement.cli import main

REPORT_KEYS = {
    "pa", "spa_by_scheme", "fleiss_kappa", "observed_disagreement",
    "items_excluded", "class_distribution", "per_item", "provenance", "warnings",
}


@pytest.fixture(autouse=True)
def pinned_clock(monkeypatch):
    # pin the report timestamp so byte-identity tests see stable provenance
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    monkeypatch.delenv("SPA_SEED", raising=False)


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_single_item(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "validate", "--input", str(fixtures_dir / "single_item.csv"))
        assert code == 0
        assert "n=11: 1 item(s)" in out
        assert "0 items below pairable threshold" in out

    def test_shallow_histogram(self, capsys, tmp_path):
        rows = ["item_id,annotator_id,label"]
        for k in range(4):
            rows.append(f"s{k},a1,x")
        for k in range(4):
            rows.append(f"d{k},a1,x")
            rows.append(f"d{k},a2,y")
        path = tmp_path / "mix.csv"
        path.write_text("\n".join(rows) + "\n")
        code, out, _ = run(capsys, "validate", "--input", str(path))
        assert code == 0
        assert "4 items below pairable threshold" in out

    def test_empty_file(self, capsys, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        code, _, err = run(capsys, "validate", "--input", str(path))
        assert code == 2
        assert "EmptyTableError" in err

    def test_bad_header(self, capsys, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        code, _, err = run(capsys, "validate", "--input", str(path))
        assert code == 2
        payload = json.loads(err)
        assert payload["error"]["type"] == "FormatError"
        assert "line 1" in payload["error"]["message"]

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "validate", "--input", str(tmp_path / "nope.csv"))
        assert code == 2


class TestCompute:
    def test_single_item_flat(self, capsys, fixtures_dir):
        code, out, _ = run(
            capsys, "compute", "--input", str(fixtures_dir / "single_item.csv"), "--scheme", "flat"
        )
        assert code == 0
        payload = json.loads(out)
        assert set(payload) == REPORT_KEYS
        assert payload["spa_by_scheme"]["flat"] == pytest.approx(14 / 55, abs=1e-12)
        assert payload["pa"] == pytest.approx(14 / 55, abs=1e-12)

    def test_full_table_all_schemes(self, capsys, fixtures_dir):
        code, out, _ = run(
            capsys, "compute", "--input", str(fixtures_dir / "full.csv"), "--scheme", "all"
        )
        assert code == 0
        payload = json.loads(out)
        # flat-weighted sparse agreement reduces to joint PA on a full table
        assert payload["spa_by_scheme"]["flat"] == pytest.approx(payload["pa"], abs=1e-12)
        assert set(payload["spa_by_scheme"]) == {
            "flat", "annotations", "annotations_m1", "edge", "inv_var", "inv_var_class",
        }
        assert payload["fleiss_kappa"] is not None

    def test_sparse_fixture_m1(self, capsys, fixtures_dir):
        code, out, _ = run(
            capsys, "compute", "--input", str(fixtures_dir / "sparse.csv"),
            "--scheme", "annotations_m1",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["items_excluded"] == 1
        assert payload["spa_by_scheme"]["annotations_m1"] == pytest.approx(2 / 3, abs=1e-12)
        assert payload["pa"] is None
        assert payload["fleiss_kappa"] is None
        assert any("unavailable" in w for w in payload["warnings"])
        by_item = {row["item_id"]: row for row in payload["per_item"]}
        assert by_item["i3"]["agreement"] is None
        assert by_item["i3"]["weights"]["annotations_m1"] == 0.0

    def test_class_dist_flag(self, capsys, fixtures_dir):
        code, out, _ = run(
            capsys, "compute", "--input", str(fixtures_dir / "sparse.csv"),
            "--scheme", "inv_var_class", "--class-dist", str(fixtures_dir / "dist.json"),
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["class_distribution"] == {"x": 0.75, "y": 0.25}

    def test_class_dist_conflict_is_usage_error(self, capsys, fixtures_dir):
        code, _, _ = run(
            capsys, "compute", "--input", str(fixtures_dir / "sparse.csv"),
            "--scheme", "flat", "--class-dist", str(fixtures_dir / "dist.json"),
        )
        assert code == 64

    def test_unknown_flag_is_usage_error(self, capsys, fixtures_dir):
        with pytest.raises(SystemExit) as exc:
            main(["compute", "--input", str(fixtures_dir / "single_item.csv"), "--bogus"])
        assert exc.value.code == 64

    def test_csv_format(self, capsys, fixtures_dir):
        code, out, _ = run(
            capsys, "compute", "--input", str(fixtures_dir / "sparse.csv"),
            "--scheme", "annotations", "--format", "csv",
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "metric,scheme,value"
        assert any(line.startswith("spa,annotations,") for line in lines)
        assert any(line.startswith("fleiss_kappa,,") for line in lines)

    def test_output_file_and_determinism(self, capsys, fixtures_dir, tmp_path):
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        for out_path in (out_a, out_b):
            code, _, _ = run(
                capsys, "compute", "--input", str(fixtures_dir / "full.csv"),
                "--scheme", "all", "--output", str(out_path), "--seed", "9",
            )
            assert code == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_duplicate_error_names_pair(self, capsys, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("item_id,annotator_id,label\ni1,a1,x\ni1,a1,y\n")
        code, _, err = run(capsys, "compute", "--input", str(path))
        assert code == 2
        payload = json.loads(err)
        assert payload["error"]["type"] == "DuplicateAnnotationError"

    def test_all_items_unpairable(self, capsys, tmp_path):
        path = tmp_path / "thin.csv"
        path.write_text("item_id,annotator_id,label\ni1,a1,x\ni2,a1,y\n")
        code, _, err = run(capsys, "compute", "--input", str(path))
        assert code == 2
        assert "NoComputableItemsError" in err


class TestWeightCurve:
    def test_edge_rows(self, capsys):
        code, out, _ = run(capsys, "weight-curve", "--scheme", "edge", "--n-max", "4")
        assert code == 0
        assert out.splitlines() == [
            "n,normalized_weight",
            "1,0",
            "2,0.166666666667",
            "3,0.5",
            "4,1",
        ]

    def test_flat_rows(self, capsys):
        code, out, _ = run(capsys, "weight-curve", "--scheme", "flat", "--n-max", "3")
        assert code == 0
        assert out.splitlines()[1:] == ["1,0", "2,1", "3,1"]

    def test_inv_var_class_count_insensitive(self, capsys):
        outputs = []
        for classes in ("2", "7"):
            code, out, _ = run(
                capsys, "weight-curve", "--scheme", "inv_var", "--n-max", "10",
                "--classes", classes,
            )
            assert code == 0
            outputs.append(out)
        rows_a = [line.split(",") for line in outputs[0].splitlines()[1:]]
        rows_b = [line.split(",") for line in outputs[1].splitlines()[1:]]
        for (n_a, w_a), (n_b, w_b) in zip(rows_a, rows_b):
            assert n_a == n_b
            assert float(w_a) == pytest.approx(float(w_b), rel=1e-6, abs=1e-12)

    def test_inv_var_needs_classes(self, capsys):
        code, _, _ = run(capsys, "weight-curve", "--scheme", "inv_var", "--n-max", "5")
        assert code == 64

    def test_classes_rejected_for_simple_scheme(self, capsys):
        code, _, _ = run(
            capsys, "weight-curve", "--scheme", "edge", "--n-max", "5", "--classes", "3"
        )
        assert code == 64

    def test_inv_var_class_from_json(self, capsys, fixtures_dir):
        code, out, _ = run(
            capsys, "weight-curve", "--scheme", "inv_var_class", "--n-max", "6",
            "--class-dist", str(fixtures_dir / "dist.json"),
        )
        assert code == 0
        assert out.splitlines()[0] == "n,normalized_weight"

    def test_bad_range_is_usage_error(self, capsys):
        code, _, err = run(capsys, "weight-curve", "--scheme", "edge", "--n-max", "0")
        assert code == 64


class TestSimulate:
    def test_unbiasedness_deterministic(self, capsys, tmp_path, fixtures_dir):
        dirs = [tmp_path / "r1", tmp_path / "r2"]
        for out_dir in dirs:
            code, out, _ = run(
                capsys, "simulate", "--input", str(fixtures_dir / "full.csv"),
                "--mode", "unbiasedness", "--trials", "50", "--seed", "7",
                "--removals", "3", "--schemes", "flat,annotations",
                "--output-dir", str(out_dir),
            )
            assert code == 0
            assert "flat:" in out
        for name in ("unbiasedness.csv", "manifest.json"):
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
        manifest = json.loads((dirs[0] / "manifest.json").read_text())
        assert manifest["removal_policy"] == {"kind": "uniform_random", "bias_inducing": False}
        assert manifest["results"][0]["trials_used"] == 50

    def test_variance_curves_flat_delta(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", "--synthetic", "items=20,annotators=4,classes=3,seed=2",
            "--mode", "variance-curves", "--trials", "60", "--seed", "5",
            "--schemes", "flat", "--budgets", "48,64,80",
            "--output-dir", str(tmp_path),
        )
        assert code == 0
        rows = (tmp_path / "variance_curves.csv").read_text().splitlines()
        assert rows[0] == "scheme,annotation_count,variance,variance_minus_flat"
        assert all(row.endswith(",0") for row in rows[1:])

    def test_constant_k_infeasible_exit_code(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "simulate", "--synthetic", "items=6,annotators=3,classes=2,seed=1",
            "--mode", "constant-k", "--trials", "20", "--seed", "3",
            "--k-values", "9", "--output-dir", str(tmp_path),
        )
        assert code == 3

    def test_constant_k_partial_success(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", "--synthetic", "items=10,annotators=3,classes=2,seed=1",
            "--mode", "constant-k", "--trials", "20", "--seed", "3",
            "--k-values", "2,9", "--output-dir", str(tmp_path),
        )
        assert code == 0
        assert "warning: k=9" in out

    def test_item_biased_policy_labeled(self, capsys, tmp_path, fixtures_dir):
        bias_path = tmp_path / "bias.json"
        bias_path.write_text(json.dumps({"i1": 5.0, "i2": 1.0, "i3": 1.0, "i4": 1.0}))
        code, _, _ = run(
            capsys, "simulate", "--input", str(fixtures_dir / "full.csv"),
            "--mode", "unbiasedness", "--trials", "30", "--seed", "2",
            "--removals", "25%", "--schemes", "flat",
            "--policy", "item-biased", "--bias", str(bias_path),
            "--output-dir", str(tmp_path / "out"),
        )
        assert code == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["removal_policy"] == {"kind": "item_biased", "bias_inducing": True}

    def test_synthetic_spec_errors(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "simulate", "--synthetic", "items=10,annotators=0,classes=2",
            "--mode", "unbiasedness", "--output-dir", str(tmp_path),
        )
        assert code == 64
        code, _, err = run(
            capsys, "simulate", "--synthetic", "items=10,annotators=2,classes=2,bogus=1",
            "--mode", "unbiasedness", "--output-dir", str(tmp_path),
        )
        assert code == 64

    def test_input_and_synthetic_conflict(self, capsys, fixtures_dir, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main([
                "simulate", "--input", str(fixtures_dir / "full.csv"),
                "--synthetic", "items=5,annotators=2,classes=2",
                "--mode", "unbiasedness", "--output-dir", str(tmp_path),
            ])
        assert exc.value.code == 64

    def test_zero_trials_is_usage_error(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "simulate", "--synthetic", "items=5,annotators=2,classes=2",
            "--mode", "unbiasedness", "--trials", "0", "--output-dir", str(tmp_path),
        )
        assert code == 64


class TestMatrixInput:
    def test_validate_and_compute(self, capsys, tmp_path):
        path = tmp_path / "matrix.csv"
        path.write_text("item_id,a1,a2,a3\ni1,x,x,y\ni2,,y,y\ni3,x,,\n")
        code, out, _ = run(capsys, "validate", "--input", str(path), "--matrix")
        assert code == 0
        assert "1 items below pairable threshold" in out
        code, out, _ = run(
            capsys, "compute", "--input", str(path), "--matrix", "--scheme", "flat"
        )
        assert code == 0
        payload = json.loads(out)
        # items: [2,1] -> 1/3, [0,2] -> 1, [1,0] excluded
        assert payload["spa_by_scheme"]["flat"] == pytest.approx((1 / 3 + 1) / 2, abs=1e-12)
        assert payload["items_excluded"] == 1


class TestSeedFallback:
    def test_spa_seed_env(self, capsys, monkeypatch, tmp_path, fixtures_dir):
        monkeypatch.setenv("SPA_SEED", "33")
        out_env = tmp_path / "env"
        code, _, _ = run(
            capsys, "simulate", "--input", str(fixtures_dir / "full.csv"),
            "--mode", "unbiasedness", "--trials", "40", "--removals", "4",
            "--schemes", "flat", "--output-dir", str(out_env),
        )
        assert code == 0
        out_flag = tmp_path / "flag"
        code, _, _ = run(
            capsys, "simulate", "--input", str(fixtures_dir / "full.csv"),
            "--mode", "unbiasedness", "--trials", "40", "--removals", "4",
            "--schemes", "flat", "--seed", "33", "--output-dir", str(out_flag),
        )
        assert code == 0
        assert (out_env / "unbiasedness.csv").read_text() == (out_flag / "unbiasedness.csv").read_text()
        manifest_env = json.loads((out_env / "manifest.json").read_text())
        assert manifest_env["seed"] == 33

    def test_flag_beats_env(self, capsys, monkeypatch, tmp_path, fixtures_dir):
        monkeypatch.setenv("SPA_SEED", "33")
        out_dir = tmp_path / "win"
        code, _, _ = run(
            capsys, "simulate", "--input", str(fixtures_dir / "full.csv"),
            "--mode", "unbiasedness", "--trials", "40", "--removals", "4",
            "--schemes", "flat", "--seed", "44", "--output-dir", str(out_dir),
        )
        assert code == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["seed"] == 44

    def test_bad_env_seed(self, capsys, monkeypatch, fixtures_dir, tmp_path):
        monkeypatch.setenv("SPA_SEED", "not-a-number")
        code, _, _ = run(
            capsys, "simulate", "--input", str(fixtures_dir / "full.csv"),
            "--mode", "unbiasedness", "--output-dir", str(tmp_path),
        )
        assert code == 64
