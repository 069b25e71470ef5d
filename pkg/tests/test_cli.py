import csv
import json

import pytest

from fdw.cli import main

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def run_cli(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestDensities:
    def test_full_report_on_annotated_corpus(self, capsys, tmp_path, toy_jsonl):
        out = tmp_path / "rep"
        rc, stdout, _ = run_cli(capsys, "densities", "--corpus", toy_jsonl,
                                "--pipelines", "all", "--out", str(out))
        assert rc == 0
        rows = list(csv.DictReader(stdout.splitlines()))
        assert len(rows) == 68
        fds = [float(r["fd"]) for r in rows]
        assert fds == sorted(fds)
        assert (out / "densities.csv").exists()
        assert (out / "density_profile.png").read_bytes()[:8] == PNG_MAGIC

    def test_plain_corpus_skips_with_warning(self, capsys, tmp_path):
        corpus = tmp_path / "plain.tsv"
        corpus.write_text("1\tyou zap pow\n0\tcalm mild ok\n" * 10, encoding="utf-8")
        rc, stdout, stderr = run_cli(capsys, "densities", "--corpus", str(corpus),
                                     "--format", "plain")
        assert rc == 0
        rows = list(csv.DictReader(stdout.splitlines()))
        assert 0 < len(rows) < 68
        assert {r["pipeline"] for r in rows} == {"TOK", "TOKSTOP", "TOKALPHA",
                                                 "TOKSTOPALPHA"}
        assert "skipping" in stderr

    def test_conllu_corpus_end_to_end(self, capsys, tmp_path):
        lines = []
        for i in range(12):
            label = int(i < 5)
            sig = "zap" if label else "calm"
            lines.append(
                f"# doc_id = s{i}\n# label = {label}\n"
                f"1\t{sig}\t{sig}\tNOUN\tNN\t_\t2\tnsubj\t_\tEnt=THING\n"
                f"2\tworks\twork\tVERB\tVBZ\t_\t0\troot\t_\t_\n"
                f"3\t!\t!\tPUNCT\t.\t_\t2\tpunct\t_\t_\n"
            )
        corpus = tmp_path / "c.conllu"
        corpus.write_text("\n".join(lines), encoding="utf-8")
        rc, stdout, _ = run_cli(capsys, "densities", "--corpus", str(corpus),
                                "--format", "conllu")
        assert rc == 0
        rows = list(csv.DictReader(stdout.splitlines()))
        names = {r["pipeline"] for r in rows}
        # everything except the chunk family is runnable
        assert len(rows) == 56
        assert "LEMNERSTOP" in names and "DEP" in names
        assert not any(n.startswith("CHNK") for n in names)

    def test_no_figures_flag(self, capsys, tmp_path, toy_jsonl):
        out = tmp_path / "rep"
        rc, _, _ = run_cli(capsys, "densities", "--corpus", toy_jsonl,
                           "--pipelines", "TOK", "--out", str(out), "--no-figures")
        assert rc == 0
        assert not (out / "density_profile.png").exists()

    def test_missing_corpus_is_data_error(self, capsys, tmp_path):
        rc, _, stderr = run_cli(capsys, "densities", "--corpus", str(tmp_path / "nope"))
        assert rc == 2
        assert "data error" in stderr

    def test_unknown_pipeline_is_usage_error(self, capsys, toy_jsonl):
        rc, _, stderr = run_cli(capsys, "densities", "--corpus", toy_jsonl,
                                "--pipelines", "TOKQUX")
        assert rc == 1
        assert "usage error" in stderr


@pytest.fixture(scope="module")
def run_outputs(tmp_path_factory, toy_jsonl):
    out = tmp_path_factory.mktemp("run")
    rc = main(["run", "--corpus", toy_jsonl, "--pipelines", "TOK,TOKSTOP,LEMSTOP,DEP",
               "--classifiers", "mnb,svm_sgd", "--folds", "5", "--seed", "3",
               "--jobs", "1", "--out", str(out)])
    assert rc == 0
    return out


class TestRun:
    def test_report_files_written(self, run_outputs):
        for name in ("results.csv", "densities.csv", "f1_matrix.csv", "correlation.csv",
                     "summary.json", "config.json", "seed.txt", "leakage.json",
                     "f1_vs_fd.png"):
            assert (run_outputs / name).exists(), name

    def test_results_schema(self, run_outputs):
        with open(run_outputs / "results.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert set(rows[0]) == {"pipeline", "classifier", "fold", "precision",
                                "recall", "f1", "runtime_s"}
        assert len(rows) == 4 * 2 * 5

    def test_summary_contents(self, run_outputs):
        summary = json.loads((run_outputs / "summary.json").read_text())
        assert summary["seed"] == 3
        assert summary["assumptions"]["smote"]["k"] == 5
        assert "svm_sgd" in summary["best_by_classifier"]

    def test_config_rerun_reproduces_reports(self, run_outputs, tmp_path, capsys):
        out2 = tmp_path / "rerun"
        rc, _, _ = run_cli(capsys, "run", "--corpus", "ignored", "--config",
                           str(run_outputs / "config.json"), "--out", str(out2))
        assert rc == 0
        for name in ("densities.csv", "f1_matrix.csv", "correlation.csv"):
            assert (out2 / name).read_bytes() == (run_outputs / name).read_bytes()

    def test_pooled_flag_adds_summary_block(self, capsys, tmp_path, toy_jsonl):
        out = tmp_path / "pooled"
        rc, _, _ = run_cli(capsys, "run", "--corpus", toy_jsonl, "--pipelines", "TOK",
                           "--classifiers", "mnb", "--folds", "5", "--jobs", "1",
                           "--pooled", "--out", str(out))
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert "pooled_f1_by_classifier" in summary
        assert "TOK" in summary["pooled_f1_by_classifier"]["mnb"]

    def test_unavailable_classifier_fails_fast(self, capsys, toy_jsonl):
        rc, _, stderr = run_cli(capsys, "run", "--corpus", toy_jsonl,
                                "--classifiers", "xgboost")
        assert rc == 1
        assert "xgboost" in stderr and "not trainable" in stderr

    def test_unknown_classifier_lists_valid_names(self, capsys, toy_jsonl):
        rc, _, stderr = run_cli(capsys, "run", "--corpus", toy_jsonl,
                                "--classifiers", "zzz")
        assert rc == 1
        assert "mnb" in stderr and "svm_sgd" in stderr

    def test_band_prefilter(self, capsys, tmp_path, toy_jsonl):
        out = tmp_path / "banded"
        # the toy corpus measures TOK fd ~0.017 and DEP fd ~0.082
        rc, stdout, stderr = run_cli(capsys, "run", "--corpus", toy_jsonl,
                                     "--pipelines", "TOK,DEP", "--classifiers", "mnb",
                                     "--folds", "5", "--band", "0.0:0.05",
                                     "--jobs", "1", "--out", str(out))
        assert rc == 0
        rows = list(csv.DictReader(stdout.splitlines()))
        names = {r["pipeline"] for r in rows}
        assert "DEP" not in names and "TOK" in names
        assert "band-pruned DEP" in stderr

    def test_hp_override(self, capsys, toy_jsonl, tmp_path):
        rc, stdout, _ = run_cli(capsys, "run", "--corpus", toy_jsonl, "--pipelines", "TOK",
                                "--classifiers", "svm_sgd", "--folds", "5", "--jobs", "1",
                                "--hp", "svm_sgd.epochs=2")
        assert rc == 0
        rc_bad, _, stderr = run_cli(capsys, "run", "--corpus", toy_jsonl,
                                    "--pipelines", "TOK", "--classifiers", "svm_sgd",
                                    "--folds", "5", "--hp", "svm_sgd.bogus=1")
        assert rc_bad == 1
        assert "bogus" in stderr


class TestCorrelate:
    def test_from_saved_reports(self, run_outputs, tmp_path, capsys):
        out = tmp_path / "corr"
        rc, stdout, _ = run_cli(capsys, "correlate", "--results",
                                str(run_outputs / "results.csv"), "--densities",
                                str(run_outputs / "densities.csv"), "--out", str(out))
        assert rc == 0
        rows = list(csv.DictReader(stdout.splitlines()))
        assert {r["classifier"] for r in rows} == {"mnb", "svm_sgd"}
        assert (out / "correlation.csv").exists()
        assert (out / "f1_vs_fd.png").exists()


class TestRecommend:
    def test_reference_density_pruning_example(self, capsys, tmp_path):
        out = tmp_path / "rec"
        rc, stdout, stderr = run_cli(capsys, "recommend", "--band", "0.05:0.15",
                                     "--power", "163", "--runtime-estimate", "176.26",
                                     "--out", str(out))
        assert rc == 0
        rec = json.loads(stdout)
        assert rec["kept_count"] == 38
        assert rec["skipped_count"] == 30
        assert abs(rec["estimated_savings"]["wh"] - 35.2) < 0.05
        assert (out / "recommend.json").exists()
        assert "bundled reference" in stderr

    def test_with_run_densities(self, run_outputs, capsys):
        rc, stdout, _ = run_cli(capsys, "recommend", "--densities",
                                str(run_outputs / "densities.csv"), "--band", "0:1")
        assert rc == 0
        rec = json.loads(stdout)
        assert rec["skipped_count"] == 0

    def test_bad_band_is_usage_error(self, capsys):
        rc, _, stderr = run_cli(capsys, "recommend", "--band", "banana")
        assert rc == 1 and "usage error" in stderr


class TestSchedule:
    def test_create_then_refine(self, run_outputs, tmp_path, capsys):
        plan_path = tmp_path / "plan.json"
        rc, stdout, _ = run_cli(capsys, "schedule", "--densities",
                                str(run_outputs / "densities.csv"), "--plan",
                                str(plan_path), "--stride", "2", "--budget", "4")
        assert rc == 0
        round1 = json.loads(stdout)
        assert round1["round"] == 1
        assert len(round1["pipelines"]) >= 2

        rc, stdout, _ = run_cli(capsys, "schedule", "--densities",
                                str(run_outputs / "densities.csv"), "--plan",
                                str(plan_path), "--results",
                                str(run_outputs / "results.csv"))
        assert rc == 0
        refined = json.loads(stdout)
        assert refined["round"] >= 1

    def test_plan_driven_run_rounds(self, tmp_path, toy_jsonl, capsys):
        # schedule round 1, run it, refine, run round 2: the loop the plan
        # JSON exists to support across CLI invocations
        dens = tmp_path / "dens"
        run_cli(capsys, "densities", "--corpus", toy_jsonl, "--out", str(dens))
        plan_path = tmp_path / "plan.json"
        rc, stdout, _ = run_cli(capsys, "schedule", "--densities",
                                str(dens / "densities.csv"), "--plan", str(plan_path),
                                "--stride", "20", "--refine-radius", "0.05",
                                "--budget", "12")
        assert rc == 0
        round1 = json.loads(stdout)["pipelines"]

        out1 = tmp_path / "round1"
        rc, stdout, _ = run_cli(capsys, "run", "--corpus", toy_jsonl, "--plan",
                                str(plan_path), "--classifiers", "mnb", "--folds", "5",
                                "--jobs", "1", "--out", str(out1))
        assert rc == 0
        ran = {r["pipeline"] for r in csv.DictReader(stdout.splitlines())}
        assert ran == set(round1)

        rc, stdout, _ = run_cli(capsys, "schedule", "--densities",
                                str(dens / "densities.csv"), "--plan", str(plan_path),
                                "--results", str(out1 / "results.csv"))
        assert rc == 0
        refined = json.loads(stdout)
        if refined["pipelines"]:
            out2 = tmp_path / "round2"
            rc, stdout, _ = run_cli(capsys, "run", "--corpus", toy_jsonl, "--plan",
                                    str(plan_path), "--classifiers", "mnb", "--folds",
                                    "5", "--jobs", "1", "--out", str(out2))
            assert rc == 0
            ran2 = {r["pipeline"] for r in csv.DictReader(stdout.splitlines())}
            assert ran2 == set(refined["pipelines"])
            assert not ran2 & ran

    def test_refine_without_results_is_usage_error(self, run_outputs, tmp_path, capsys):
        plan_path = tmp_path / "p.json"
        run_cli(capsys, "schedule", "--densities", str(run_outputs / "densities.csv"),
                "--plan", str(plan_path), "--stride", "2", "--budget", "4")
        rc, _, stderr = run_cli(capsys, "schedule", "--densities",
                                str(run_outputs / "densities.csv"), "--plan", str(plan_path))
        assert rc == 1 and "results" in stderr


class TestEnergyCmd:
    def test_json_output(self, capsys):
        rc, stdout, _ = run_cli(capsys, "energy", "--runtime-s", "176.26",
                                "--power", "163", "--folds", "10")
        assert rc == 0
        data = json.loads(stdout)
        assert abs(data["energy_wh"] - 79.81) < 0.01
        assert data["co2_g"] == pytest.approx(data["energy_kwh"] * 275)


class TestReplicatePaper:
    def test_all_checks_pass(self, capsys, tmp_path):
        out = tmp_path / "rep"
        rc, stdout, _ = run_cli(capsys, "replicate-paper", "--out", str(out))
        assert rc == 0
        lines = [l for l in stdout.splitlines() if l.startswith("[")]
        assert len(lines) == 5
        assert all(l.startswith("[PASS]") for l in lines)
        payload = json.loads((out / "replication.json").read_text())
        assert payload["rho-replication"]["passed"]
        matched = payload["rho-replication"]["data"]["matched_by"]
        assert matched["sgd_svm"] == "poss-excluded"
        assert matched["cnn1"] == "all-68"
        assert (out / "f1_vs_fd_reference.png").read_bytes()[:8] == PNG_MAGIC


class TestConsoleScript:
    def test_installed_entry_point(self):
        import shutil
        import subprocess
        import sys

        exe = shutil.which("fdw")
        if exe is None:
            pytest.skip("console script not on PATH (package not installed)")
        proc = subprocess.run(
            [exe, "energy", "--runtime-s", "3600", "--power", "1000", "--folds", "1"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["energy_wh"] == 1000.0

        proc = subprocess.run([exe, "recommend", "--band", "oops"],
                              capture_output=True, text=True)
        assert proc.returncode == 1
        assert "usage error" in proc.stderr


class TestUsage:
    def test_no_command(self, capsys):
        rc, _, stderr = run_cli(capsys)
        assert rc == 1

    def test_unknown_command(self, capsys):
        rc, _, _ = run_cli(capsys, "frobnicate")
        assert rc == 1

    def test_help_exits_zero(self, capsys):
        rc, stdout, _ = run_cli(capsys, "--help")
        assert rc == 0

    def test_warnings_go_to_stderr_not_stdout(self, capsys, tmp_path):
        corpus = tmp_path / "p.tsv"
        corpus.write_text("1\tzap pow\n0\tcalm mild\n" * 8, encoding="utf-8")
        rc, stdout, stderr = run_cli(capsys, "densities", "--corpus", str(corpus),
                                     "--format", "plain")
        assert rc == 0
        assert "skipping" in stderr
        for line in stdout.splitlines():
            assert "skipping" not in line
