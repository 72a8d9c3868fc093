"""Stream CSV parsing, trace persistence, and CLI tests."""

import json
import math

import numpy as np
import pytest

from ddimstream.cli import main
from ddimstream.errors import DataFormatError, SchemaVersionError
from ddimstream.stream_io import (
    Annotations,
    DataBatch,
    RunConfig,
    TraceRecord,
    read_batch_stream,
    read_trace,
    trace_to_alarms_csv,
    trace_to_ddim_csv,
    trace_to_scores_csv,
    write_batch_stream,
    write_trace,
)


class TestDataBatch:
    def test_rejects_empty(self):
        with pytest.raises(DataFormatError):
            DataBatch(t=0, X=np.zeros((0, 2)))

    def test_rejects_non_finite(self):
        with pytest.raises(DataFormatError):
            DataBatch(t=0, X=np.array([[1.0, math.nan]]))

    def test_shape_properties(self):
        b = DataBatch(t=3, X=np.zeros((5, 2)))
        assert b.n == 5 and b.m == 2


class TestBatchStreamCsv:
    def test_two_batch_file(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text(
            "t,x_1,x_2\n"
            "0,1.0,2.0\n0,3.0,4.0\n0,5.0,6.0\n"
            "1,7.0,8.0\n1,9.0,10.0\n1,11.0,12.0\n"
        )
        batches = read_batch_stream(path)
        assert len(batches) == 2
        assert batches[0].X.shape == (3, 2) and batches[1].X.shape == (3, 2)
        assert batches[0].t == 0 and batches[1].t == 1
        assert batches[1].X[0] == pytest.approx([7.0, 8.0])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        assert read_batch_stream(path) == []

    def test_nan_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,x_1\n0,1.0\n0,nan\n")
        with pytest.raises(DataFormatError) as exc:
            read_batch_stream(path)
        assert exc.value.line == 3

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("t,x_1,x_2\n0,1.0,2.0\n0,3.0\n")
        with pytest.raises(DataFormatError) as exc:
            read_batch_stream(path)
        assert exc.value.line == 3

    def test_decreasing_time_rejected(self, tmp_path):
        path = tmp_path / "order.csv"
        path.write_text("t,x_1\n1,1.0\n0,2.0\n")
        with pytest.raises(DataFormatError):
            read_batch_stream(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("time,x_1\n0,1.0\n")
        with pytest.raises(DataFormatError):
            read_batch_stream(path)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        batches = [DataBatch(t=t, X=rng.standard_normal((4, 3))) for t in range(3)]
        path = tmp_path / "rt.csv"
        write_batch_stream(batches, path)
        loaded = read_batch_stream(path)
        assert len(loaded) == 3
        for a, b in zip(batches, loaded):
            assert a.t == b.t
            assert np.array_equal(a.X, b.X)  # repr round-trips doubles exactly


def sample_records():
    return [
        TraceRecord(
            t=t,
            n=100,
            ddim=2.0 + 0.1 * t,
            posterior=[0.5, 0.3, 0.2],
            k_hat=2,
            scores={"th": 0.1 * t, "diff": math.nan if t == 0 else 0.05},
            alarms=(
                [{"t": t, "detector": "th", "score": 0.2, "threshold": 0.1}] if t == 2 else []
            ),
            gamma=0.09,
            beta=0.1,
            entropy=1.0,
            assign_seed=7,
        )
        for t in range(3)
    ]


class TestTracePersistence:
    def test_round_trip_identity(self, tmp_path):
        records = sample_records()
        path = tmp_path / "trace.jsonl"
        write_trace(records, path)
        loaded = read_trace(path)
        assert len(loaded) == len(records)
        for a, b in zip(records, loaded):
            assert a.t == b.t and a.n == b.n and a.k_hat == b.k_hat
            assert a.ddim == b.ddim and a.posterior == b.posterior
            assert a.alarms == b.alarms and a.gamma == b.gamma and a.beta == b.beta
            assert a.scores.keys() == b.scores.keys()
            for key in a.scores:
                x, y = a.scores[key], b.scores[key]
                assert (math.isnan(x) and math.isnan(y)) or x == y

    def test_schema_version_enforced(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        write_trace(sample_records(), path)
        lines = path.read_text().splitlines()
        d = json.loads(lines[0])
        d["schema_version"] = 99
        path.write_text(json.dumps(d) + "\n")
        with pytest.raises(SchemaVersionError):
            read_trace(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text("{not json}\n")
        with pytest.raises(DataFormatError) as exc:
            read_trace(path)
        assert exc.value.line == 1

    def test_projections(self, tmp_path):
        records = sample_records()
        ddim_path = tmp_path / "ddim.csv"
        scores_path = tmp_path / "scores.csv"
        alarms_path = tmp_path / "alarms.csv"
        trace_to_ddim_csv(records, ddim_path)
        trace_to_scores_csv(records, scores_path)
        trace_to_alarms_csv(records, alarms_path)
        assert ddim_path.read_text().splitlines()[0] == "t,ddim"
        assert len(ddim_path.read_text().splitlines()) == 4
        assert scores_path.read_text().splitlines()[1].startswith("0,diff,")
        alarm_lines = alarms_path.read_text().splitlines()
        assert alarm_lines[0] == "t,detector,score" and len(alarm_lines) == 2


class TestAnnotations:
    def test_round_trip(self, tmp_path):
        ann = Annotations(true_k=[2, 2, 3], sign_times=[1], transitions=[(1, 2)])
        path = tmp_path / "ann.json"
        ann.save(path)
        loaded = Annotations.load(path)
        assert loaded.true_k == ann.true_k
        assert loaded.sign_times == ann.sign_times
        assert loaded.transitions == ann.transitions


class TestRunConfig:
    def test_defaults_valid(self):
        cfg = RunConfig()
        assert cfg.family == "gmm" and cfg.k_max == 5

    def test_unknown_detector_rejected(self):
        from ddimstream.errors import ConfigError

        with pytest.raises(ConfigError):
            RunConfig(detectors=("th", "bogus"))

    def test_from_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"family": "ar", "k_max": 3, "detectors": ["th", "sdms"]}))
        cfg = RunConfig.from_json(path)
        assert cfg.family == "ar" and cfg.detectors == ("th", "sdms")


class TestCli:
    def test_usage_error(self, capsys):
        assert main([]) == 1
        assert main(["run"]) == 1

    def test_missing_input_is_data_error(self, tmp_path, capsys):
        out = tmp_path / "t.jsonl"
        code = main(["run", "--family", "gmm", "--input", str(tmp_path / "nope.csv"),
                     "--out", str(out)])
        assert code == 2

    def test_full_cli_round_trip(self, tmp_path):
        stream = tmp_path / "stream.csv"
        cfg = tmp_path / "gen.json"
        cfg.write_text(json.dumps({"n": 60, "m": 2, "T": 14, "tau1": 4, "tau2": 9}))
        assert main(["synth", "gmm", "--config", str(cfg), "--seed", "1",
                     "--out", str(stream)]) == 0
        assert (tmp_path / "stream.csv.ann.json").exists()

        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--family", "gmm", "--input", str(stream),
                     "--out", str(trace), "--k-max", "3", "--seed", "1",
                     "--em-restarts", "2"]) == 0
        records = read_trace(trace)
        assert len(records) == 15

        report = tmp_path / "eval.json"
        assert main(["eval", "--trace", str(trace),
                     "--annotations", str(tmp_path / "stream.csv.ann.json"),
                     "--out", str(report)]) == 0
        payload = json.loads(report.read_text())
        assert "th" in payload["detectors"]
        assert 0.0 <= payload["detectors"]["th"]["auc"] <= 1.0

        plot = tmp_path / "ddim.csv"
        assert main(["plot-data", "--trace", str(trace), "--series", "ddim",
                     "--out", str(plot)]) == 0
        assert plot.read_text().splitlines()[0] == "t,ddim"

    def test_precompute_and_cached_run(self, tmp_path):
        cache = tmp_path / "cache.json"
        assert main(["precompute", "--m", "2", "--n-max", "60", "--k-max", "3",
                     "--R", "500", "--eps", "0.05", "--out", str(cache)]) == 0

        stream = tmp_path / "stream.csv"
        cfg = tmp_path / "gen.json"
        cfg.write_text(json.dumps({"n": 60, "m": 2, "T": 5, "tau1": 1, "tau2": 4}))
        assert main(["synth", "gmm", "--config", str(cfg), "--seed", "2",
                     "--out", str(stream)]) == 0
        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--family", "gmm", "--input", str(stream),
                     "--cache", str(cache), "--out", str(trace),
                     "--k-max", "3", "--em-restarts", "2"]) == 0
        assert len(read_trace(trace)) == 6

    def test_ar_cli_round_trip(self, tmp_path):
        stream = tmp_path / "ar.csv"
        cfg = tmp_path / "gen.json"
        cfg.write_text(json.dumps({"n": 80, "T": 9, "tau1": 2, "tau2": 6}))
        assert main(["synth", "ar", "--config", str(cfg), "--seed", "3",
                     "--out", str(stream)]) == 0
        trace = tmp_path / "trace.jsonl"
        assert main(["run", "--family", "ar", "--input", str(stream),
                     "--out", str(trace), "--k-max", "3"]) == 0
        records = read_trace(trace)
        assert len(records) == 10
        assert all(1.0 <= rec.ddim <= 3.0 for rec in records)
