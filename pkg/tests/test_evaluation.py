import json
import math

import numpy as np
import pytest

from srab.attacks import AttackConfig, Mask, center_mask
from srab.errors import ConfigurationError, DataError, EmptyRegionError
from srab.evaluation import (CSV_COLUMNS, SCHEMA, EvalReport, emit_report, evaluate_attack, evaluate_sweep,
                             outer_region_psnr, psnr, report_from_json, report_to_csv, report_to_json,
                             robustness_sweep, spearman, transfer_matrix)
from srab.imageio import Dataset
from srab.models import MicroEdsrConfig, build_micro_edsr


@pytest.fixture(scope="module")
def small_ds():
    r = np.random.default_rng(5)
    images = []
    for _ in range(3):
        base = r.random((3, 5, 5))
        from srab.tensor import bicubic_resize
        images.append(np.clip(bicubic_resize(base, 32, 36), 0, 1))
    return Dataset("tiny", ["a", "b", "c"], images)


@pytest.fixture(scope="module")
def model():
    return build_micro_edsr(MicroEdsrConfig(channels=4, blocks=1), seed=2, name="m")


class TestPsnr:
    def test_identical(self, rng):
        x = rng.random((3, 4, 4))
        assert psnr(x, x) == math.inf

    def test_zero_db(self):
        assert psnr(np.zeros((3, 2, 2)), np.ones((3, 2, 2))) == 0.0

    def test_thirty_db(self):
        a = np.zeros((1, 10, 10))
        b = a.copy()
        b[0, 0, :1] = math.sqrt(0.1)  # one pixel of 100 with squared error 0.1
        assert psnr(a, b) == pytest.approx(30.0, abs=1e-12)

    def test_symmetric(self, rng):
        a, b = rng.random((3, 5, 5)), rng.random((3, 5, 5))
        assert psnr(a, b) == psnr(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            psnr(np.zeros((3, 2, 2)), np.zeros((3, 2, 3)))


class TestOuterRegion:
    def test_inner_corruption_ignored(self, rng):
        mask = center_mask(4, 4)
        a = rng.random((3, 16, 16))
        b = a.copy()
        b[:, mask.hr_mask[0] == 1] += 0.5
        assert outer_region_psnr(a, b, mask) == math.inf

    def test_empty_region(self):
        with pytest.raises(EmptyRegionError):
            outer_region_psnr(np.zeros((3, 8, 8)), np.ones((3, 8, 8)), Mask.from_lr(np.ones((2, 2))))

    def test_twenty_db(self):
        mask = center_mask(4, 4)
        a = np.zeros((3, 16, 16))
        b = np.where(mask.hr_mask == 0, 0.1, 0.9) * np.ones((3, 1, 1))
        assert outer_region_psnr(a, b, mask) == pytest.approx(20.0, abs=1e-12)


class TestSpearman:
    def test_reversed_pair(self):
        rho, ok = spearman([1.0, 2.0], [5.0, 3.0])
        assert ok and rho == pytest.approx(-1.0)

    def test_constant_undefined(self):
        rho, ok = spearman([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
        assert not ok and math.isnan(rho)


class TestEvaluate:
    def test_alpha_zero_all_infinite(self, model, small_ds):
        rep = evaluate_attack(model, small_ds, "basic", AttackConfig(0.0, iterations=2))
        assert all(r.lr_psnr == math.inf and r.sr_psnr == math.inf for r in rep.records)

    @pytest.mark.parametrize("kind", ["basic", "partial", "universal"])
    def test_lr_floor(self, model, small_ds, kind):
        alpha = 8 / 255
        rep = evaluate_attack(model, small_ds, kind, AttackConfig(alpha, iterations=3))
        assert len(rep.records) == 3
        assert all(r.lr_psnr >= -20 * math.log10(alpha) for r in rep.records)
        assert [r.image_id for r in rep.records] == ["a", "b", "c"]

    def test_targeted_records_target_psnr(self, model, small_ds):
        targets = [np.roll(x, 1, axis=-1) for x in small_ds.lr]
        rep = evaluate_attack(model, small_ds, "targeted", AttackConfig(16 / 255, iterations=3), targets=targets)
        assert all(r.target_sr_psnr is not None for r in rep.records)

    def test_jobs_do_not_change_results(self, model, small_ds):
        cfg = AttackConfig(4 / 255, iterations=3)
        a = evaluate_attack(model, small_ds, config=cfg, batch_size=1, jobs=1)
        b = evaluate_attack(model, small_ds, config=cfg, batch_size=1, jobs=3)
        assert report_to_json(a) == report_to_json(b)

    def test_mean_is_arithmetic(self, model, small_ds):
        rep = evaluate_attack(model, small_ds, config=AttackConfig(8 / 255, iterations=2))
        assert rep.mean("sr_psnr") == pytest.approx(np.mean([r.sr_psnr for r in rep.records]), rel=1e-15)

    def test_sweep_rows(self, model, small_ds):
        rep = evaluate_sweep(model, small_ds, [1 / 255, 8 / 255], iterations=2)
        assert len(rep.records) == 6 and rep.alphas() == [1 / 255, 8 / 255]

    def test_unknown_kind(self, model, small_ds):
        with pytest.raises(ConfigurationError):
            evaluate_attack(model, small_ds, "momentum")


class TestTransfer:
    def test_identical_models_symmetric(self, model, small_ds):
        rep = transfer_matrix([model, model], small_ds, AttackConfig(8 / 255, iterations=2))
        m = np.array(rep.transfer["matrix"])
        assert m.shape == (2, 2)
        assert np.all(m == m[0, 0])
        assert rep.transfer["sources"] == ["m", "m#1"]

    def test_alpha_zero(self, model, bicubic, small_ds):
        rep = transfer_matrix([model, bicubic], small_ds, AttackConfig(0.0, iterations=2))
        assert np.all(np.isinf(rep.transfer["matrix"]))

    def test_needs_two(self, model, small_ds):
        with pytest.raises(ConfigurationError):
            transfer_matrix([model], small_ds)

    def test_diagonal_is_basic_attack(self, model, bicubic, small_ds):
        cfg = AttackConfig(8 / 255, iterations=2)
        rep = transfer_matrix([model, bicubic], small_ds, cfg)
        basic = evaluate_attack(model, small_ds, "basic", cfg)
        assert rep.transfer["matrix"][0][0] == pytest.approx(basic.mean("sr_psnr"), rel=1e-12)


class TestRobustnessSweep:
    def test_zero_model_undefined(self, small_ds):
        zero = build_micro_edsr(MicroEdsrConfig(channels=3, blocks=1), zero=True)
        rep = robustness_sweep(zero, small_ds, n_samples=2, iterations=2)
        assert all(r.robustness_index == 0 for r in rep.records)
        assert rep.correlation["defined"] is False and rep.correlation["value"] is None

    def test_pairs_records(self, model, small_ds):
        rep = robustness_sweep(model, small_ds, n_samples=3, iterations=2)
        assert all(r.robustness_index > 0 for r in rep.records)
        assert rep.correlation["method"] == "spearman"


class TestReports:
    @pytest.fixture
    def report(self, model, small_ds):
        return evaluate_attack(model, small_ds, config=AttackConfig(0.0, iterations=2))

    def test_json_round_trip_byte_identical(self, model, bicubic, small_ds):
        rep = transfer_matrix([model, bicubic], small_ds, AttackConfig(8 / 255, iterations=2))
        text = report_to_json(rep)
        assert report_to_json(report_from_json(text)) == text

    def test_infinite_sentinel(self, report):
        d = json.loads(report_to_json(report))
        assert d["schema"] == SCHEMA
        assert d["records"][0]["sr_psnr"] == {"psnr": None, "identical": True}
        assert report_from_json(report_to_json(report)).records[0].sr_psnr == math.inf

    def test_created_from_environment(self, report, model, small_ds, monkeypatch):
        assert report.created is None
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        rep = evaluate_attack(model, small_ds, config=AttackConfig(0.0, iterations=1))
        assert rep.created == "1970-01-01T00:00:00+00:00"

    def test_csv(self, report):
        lines = report_to_csv(report).splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 4
        assert lines[1].startswith("a,0.0,inf,inf,")

    def test_transfer_csv(self, model, bicubic, small_ds):
        rep = transfer_matrix([model, bicubic], small_ds, AttackConfig(8 / 255, iterations=2))
        rows = report_to_csv(rep).splitlines()
        assert rows[0] == "source,m,bicubic" and len(rows) == 3

    def test_emit(self, report, tmp_path):
        p = emit_report(report, "json", tmp_path / "r.json")
        assert report_from_json(p.read_text()).records == report.records
        emit_report(report, "csv", tmp_path / "r.csv")
        with pytest.raises(ConfigurationError):
            emit_report(report, "xml", tmp_path / "r.xml")

    def test_emit_empty(self, tmp_path):
        with pytest.raises(DataError):
            emit_report(EvalReport(["m"], {}), "json", tmp_path / "r.json")

    def test_bad_schema(self):
        with pytest.raises(DataError):
            report_from_json('{"schema": "other"}')
