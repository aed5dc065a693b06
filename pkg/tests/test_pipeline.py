import json
from fractions import Fraction

import numpy as np
import pytest

from annlogic import network, pipeline
from annlogic.network import LabeledDataset, SimpleAnnModel
from annlogic.pipeline import PipelineConfig, run_pipeline

from conftest import WORKED_EPSILON, random_model, synthetic_transfusion


def worked_config(**kw):
    base = dict(n_bits=2, epsilon=WORKED_EPSILON, min_support=1, figures=False)
    base.update(kw)
    return PipelineConfig(**base)


def test_worked_example(worked_model, worked_data):
    res = run_pipeline(worked_config(), worked_data, worked_model, write=False)
    s = res.report["summary"]
    assert s["essential_cells"] == [1]
    assert s["tau_prime"] == pytest.approx(2.35, abs=0.02)
    assert [(c.key(), c.power) for c in res.concepts] == [
        (((1,), (1, 2), (0, 1)), 6), (((1,), (3,), (1,)), 2)]
    assert res.report["relpower_sum"] == "1"
    for k in ("network_accuracy_covered", "quantized_accuracy_covered",
              "concept_accuracy_covered", "concept_accuracy_all"):
        assert s[k] == 1.0
    assert res.report["shapley"] == [{"cell": 1, "values": pytest.approx([6.5, 3.5])}]


def test_report_is_deterministic(tmp_path):
    data = synthetic_transfusion(1, 120)
    outs = []
    for i in range(2):
        cfg = PipelineConfig(output=str(tmp_path / f"r{i}"), epochs=200, relu_count=3,
                             n_bits=5, figures=False, seed=4)
        run_pipeline(cfg, data)
        outs.append((tmp_path / f"r{i}" / "report.json").read_bytes())
    assert outs[0] == outs[1]


@pytest.mark.parametrize("method", ["M1", "M2", "M3", "M4"])
def test_methods_cover_tensor(method):
    rng = np.random.default_rng(0)
    model = random_model(rng, 3, 3)
    X = rng.random((80, 3))
    y = rng.integers(0, 2, 80)
    data = LabeledDataset(X, y)
    model = model.with_threshold(network.fit_threshold(model, data))
    res = run_pipeline(PipelineConfig(n_bits=4, method=method, figures=False), data, model,
                       write=False)
    assert sum((c.relpower for c in res.concepts), Fraction(0)) == 1
    seen = set()
    for c in res.concepts:
        assert not c.cuboid() & seen
        seen |= c.cuboid()
    s = res.report["summary"]
    assert s["max_score_gap"] < 1e-9
    assert s["concept_accuracy_covered"] == s["quantized_accuracy_covered"]


def test_empty_essential_set_warns():
    # every object in a pure cell; requiring mixed cells leaves nothing
    model = SimpleAnnModel((np.ones((1, 4)),), (np.ones((1, 1)),), 0.5, 2)
    data = LabeledDataset([[0.2, 0.3], [0.7, 0.9]], [1, 1])
    res = run_pipeline(PipelineConfig(require_mixed=True, min_support=1, figures=False),
                       data, model, write=False)
    assert res.concepts == [] and res.bit_tensor is None
    assert any("empty essential" in w for w in res.warnings)
    assert "concept_accuracy_covered" not in res.report["summary"]
    assert pipeline.format_report(res.report)


def test_stage_prefix_on_errors(worked_model):
    data = LabeledDataset([[0.8, 0.1, 0.3]], [1])
    with pytest.raises(Exception, match=r"^\[cells\]"):
        run_pipeline(worked_config(), data, worked_model, write=False)


def test_missing_data_is_configuration_error():
    from annlogic.errors import ConfigurationError
    with pytest.raises(ConfigurationError, match="ingest"):
        run_pipeline(PipelineConfig(), write=False)


def test_outputs_written(tmp_path, worked_model, worked_data):
    out = tmp_path / "out"
    run_pipeline(worked_config(output=str(out), figures=True), worked_data, worked_model)
    for name in ("report.json", "report.txt", "artifacts.json", "model.txt",
                 "tables/cells.csv", "tables/shapley.csv", "tables/concepts.csv",
                 "tables/leaf_paths.csv", "tables/implications.csv", "dot/c1.dot",
                 "figures/cells.png", "figures/shapley.png", "figures/concepts.png",
                 "figures/implications.png"):
        assert (out / name).stat().st_size > 0, name
    assert (out / "figures/cells.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    rows = (out / "tables/concepts.csv").read_text().splitlines()
    assert rows[0].startswith("id,cells,minterms") and len(rows) == 3
    text = (out / "report.txt").read_text()
    assert "relpower sum: 1" in text


def test_explain_matches_report(tmp_path):
    data = synthetic_transfusion(2, 100)
    res = run_pipeline(PipelineConfig(epochs=200, relu_count=3, n_bits=5, figures=False),
                       data, write=False)
    art = json.loads(pipeline.dump_json(res.artifacts()))
    covered = {c.number for c in res.essential}
    for x in data.X[:20]:
        e = pipeline.explain(x, art)
        assert e["covered"] == (e["cell"] in covered)
        if e["covered"]:
            assert e["score"] == pytest.approx(e["bit_tensor_score"], abs=1e-9)
            assert e["score"] == pytest.approx(sum(t["contribution"] for t in e["trees"]))
        else:
            assert e["score"] == 0.0 and e["class"] == 0


def test_explain_raw_values(tmp_path):
    csv = tmp_path / "d.csv"
    csv.write_text("a,b,y\n0,10,0\n10,20,1\n5,15,1\n2,18,0\n")
    model = SimpleAnnModel((np.array([[-1.0, 1.0, 2.0, 3.0]]),), (np.ones((1, 1)),), 0.5, 2)
    res = run_pipeline(PipelineConfig(data=str(csv), min_support=1, n_bits=3, figures=False),
                       model=model, write=False)
    art = res.artifacts()
    assert pipeline.explain([5, 15], art, raw=True)["values"] == [0.5, 0.5]


def test_end_to_end_synthetic_surrogate():
    """Four attributes, 5 ReLUs, 7 bits on balanced data with a noisy logic rule."""
    data = synthetic_transfusion(0)
    res = run_pipeline(PipelineConfig(relu_count=5, n_bits=7, figures=False), data, write=False)
    s = res.report["summary"]
    assert s["network_accuracy"] >= 0.70
    assert s["concept_accuracy_covered"] == s["quantized_accuracy_covered"]
    assert s["max_score_gap"] < 1e-9
    assert s["covered_objects"] >= 0.8 * len(data)
