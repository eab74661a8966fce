"""Result aggregation views against a brute-force oracle."""

from __future__ import annotations

import json
import math
import random
import statistics

import pytest

from shiftbench.aggregate import (
    RESULTS_HEADER,
    AggregateView,
    ArmComparison,
    ResultRecord,
    delta_vs_baseline,
    difficulty_by_count,
    emit_views,
    format_delta,
    load_results,
    scratch_vs_pretrained,
    shift_type_means,
    write_results,
)
from shiftbench.errors import MissingArmError, MissingBaselineError, SchemaError
from shiftbench.shiftgen import SHIFT_SET_ORDER

ALGORITHMS = ("erm", "mixup", "reweight")


def record(shift_set="SC", algorithm="erm", pretrained=False, seed=0,
           dataset="synth", split="test", accuracy=0.5, config_id=None):
    attrs = "-" if shift_set == "UNIFORM" else "object_color"
    return ResultRecord(
        dataset=dataset,
        config_id=config_id or f"{dataset}/{shift_set}/{attrs}/{seed}",
        shift_set=shift_set,
        attributes=attrs,
        algorithm=algorithm,
        pretrained=pretrained,
        seed=seed,
        split=split,
        accuracy=accuracy,
    )


def random_records(rng, n_extra_splits=40):
    """Complete arm x dataset x shift-set x seed grid, ~1000 records."""
    records = []
    for dataset in ("synth", "dsprites"):
        for shift_set in SHIFT_SET_ORDER:
            for algorithm in ALGORITHMS:
                for pretrained in (False, True):
                    for seed in (0, 1, 2):
                        records.append(
                            record(
                                shift_set=shift_set,
                                algorithm=algorithm,
                                pretrained=pretrained,
                                seed=seed,
                                dataset=dataset,
                                accuracy=round(rng.random(), 6),
                                config_id=f"{dataset}/{shift_set}/x/{seed}",
                            )
                        )
    for k in range(n_extra_splits):
        records.append(
            record(
                shift_set="LDD",
                algorithm=ALGORITHMS[k % 3],
                split=("train", "val")[k % 2],
                seed=k,
                accuracy=round(rng.random(), 6),
                config_id=f"synth/LDD/x/extra{k}",
            )
        )
    return records


# -- brute-force oracles ------------------------------------------------------


def oracle_shift_means(records):
    out = {}
    for shift_set in SHIFT_SET_ORDER:
        values = [
            r.accuracy
            for r in records
            if r.split == "test" and r.shift_set == shift_set
        ]
        if not values:
            continue
        mean = statistics.fmean(values)
        sem = (
            statistics.stdev(values) / math.sqrt(len(values))
            if len(values) > 1
            else 0.0
        )
        out[shift_set] = (mean, sem, len(values))
    return out


def oracle_difficulty(records):
    def count_of(shift_set):
        return 0 if shift_set == "UNIFORM" else len(shift_set.split("+"))

    out = {}
    for count in (0, 1, 2, 3):
        values = [
            r.accuracy
            for r in records
            if r.split == "test" and count_of(r.shift_set) == count
        ]
        if values:
            out[count] = (statistics.fmean(values), len(values))
    return out


def oracle_deltas(records, baseline):
    tests = [r for r in records if r.split == "test"]
    out = {}
    arms = sorted({(r.algorithm, r.pretrained) for r in tests})
    for algorithm, pretrained in arms:
        for shift_set in SHIFT_SET_ORDER:
            matched = [
                r
                for r in tests
                if r.algorithm == algorithm
                and r.pretrained == pretrained
                and r.shift_set == shift_set
            ]
            if not matched:
                continue
            base_values = []
            for r in matched:
                base = [
                    b
                    for b in tests
                    if b.algorithm == baseline
                    and b.pretrained == pretrained
                    and b.dataset == r.dataset
                    and b.config_id == r.config_id
                    and b.seed == r.seed
                ]
                assert len(base) == 1
                base_values.append(base[0].accuracy)
            out[(algorithm, pretrained, shift_set)] = statistics.fmean(
                [r.accuracy for r in matched]
            ) - statistics.fmean(base_values)
    return out


def oracle_arm_comparison(records):
    tests = [r for r in records if r.split == "test"]
    out = {}
    for algorithm in sorted({r.algorithm for r in tests}):
        scratch = [
            r.accuracy for r in tests if r.algorithm == algorithm and not r.pretrained
        ]
        pre = [r.accuracy for r in tests if r.algorithm == algorithm and r.pretrained]
        out[algorithm] = (statistics.fmean(scratch), statistics.fmean(pre))
    return out


@pytest.fixture(scope="module")
def corpus():
    return random_records(random.Random(2024))


class TestAgainstOracle:
    def test_shift_type_means(self, corpus):
        expected = oracle_shift_means(corpus)
        views = shift_type_means(corpus)
        assert [dict(v.keys)["shift_set"] for v in views] == [
            s for s in SHIFT_SET_ORDER if s in expected
        ]
        for view in views:
            mean, sem, n = expected[dict(view.keys)["shift_set"]]
            assert view.mean == pytest.approx(mean, abs=1e-12)
            assert view.sem == pytest.approx(sem, abs=1e-12)
            assert view.n == n

    def test_difficulty_by_count(self, corpus):
        expected = oracle_difficulty(corpus)
        views = difficulty_by_count(corpus)
        assert [int(dict(v.keys)["shift_count"]) for v in views] == sorted(expected)
        for view in views:
            mean, n = expected[int(dict(view.keys)["shift_count"])]
            assert view.mean == pytest.approx(mean, abs=1e-12)
            assert view.n == n

    def test_delta_vs_baseline(self, corpus):
        expected = oracle_deltas(corpus, "erm")
        deltas = delta_vs_baseline(corpus, "erm")
        assert set(deltas) == set(expected)
        for key, delta in deltas.items():
            assert delta == pytest.approx(expected[key], abs=1e-12)

    def test_baseline_delta_to_itself_is_zero(self, corpus):
        deltas = delta_vs_baseline(corpus, "erm")
        for pretrained in (False, True):
            for shift_set in SHIFT_SET_ORDER:
                assert deltas[("erm", pretrained, shift_set)] == pytest.approx(
                    0.0, abs=1e-12
                )

    def test_scratch_vs_pretrained(self, corpus):
        expected = oracle_arm_comparison(corpus)
        comparisons = scratch_vs_pretrained(corpus)
        assert [c.algorithm for c in comparisons] == sorted(expected)
        for c in comparisons:
            scratch_mean, pre_mean = expected[c.algorithm]
            assert c.scratch_mean == pytest.approx(scratch_mean, abs=1e-12)
            assert c.pretrained_mean == pytest.approx(pre_mean, abs=1e-12)

    def test_permutation_invariance(self, corpus):
        shuffled = list(corpus)
        random.Random(7).shuffle(shuffled)
        for original, permuted in zip(
            shift_type_means(corpus), shift_type_means(shuffled)
        ):
            assert original.keys == permuted.keys
            assert original.mean == pytest.approx(permuted.mean, abs=1e-12)
            assert original.n == permuted.n

    def test_constant_offset_yields_constant_delta(self):
        # An arm that beats the baseline by exactly 0.05 in every cell
        # must show a 0.05 delta for every shift set.
        rng = random.Random(5)
        offset = 0.05
        records = []
        for shift_set in SHIFT_SET_ORDER:
            for seed in (0, 1, 2):
                base_acc = round(rng.uniform(0.0, 0.9), 6)
                for algorithm, acc in (
                    ("erm", base_acc),
                    ("mixup", base_acc + offset),
                ):
                    records.append(
                        record(
                            shift_set=shift_set,
                            algorithm=algorithm,
                            seed=seed,
                            accuracy=acc,
                            config_id=f"synth/{shift_set}/x/{seed}",
                        )
                    )
        deltas = delta_vs_baseline(records, "erm")
        for shift_set in SHIFT_SET_ORDER:
            assert deltas[("mixup", False, shift_set)] == pytest.approx(
                offset, abs=1e-9
            )


class TestRecordValidation:
    def test_rejects_unknown_shift_set(self):
        with pytest.raises(SchemaError):
            record(shift_set="LDD+SC")

    def test_rejects_unknown_split(self):
        with pytest.raises(SchemaError):
            record(split="holdout")

    @pytest.mark.parametrize("accuracy", [-0.01, 1.01])
    def test_rejects_out_of_range_accuracy(self, accuracy):
        with pytest.raises(SchemaError):
            record(accuracy=accuracy)

    def test_shift_count(self):
        assert record(shift_set="UNIFORM").shift_count == 0
        assert record(shift_set="UDS").shift_count == 1
        assert record(shift_set="SC+UDS").shift_count == 2
        assert record(shift_set="SC+LDD+UDS").shift_count == 3

    def test_view_validation(self):
        with pytest.raises(SchemaError):
            AggregateView(keys=(("x", "y"),), mean=0.5, sem=0.0, n=0)
        with pytest.raises(SchemaError):
            AggregateView(keys=(("x", "y"),), mean=0.5, sem=-0.1, n=1)


class TestReferenceComparison:
    def test_reported_delta_renders_as_plus_9_04(self):
        records = [
            record(algorithm="resnet18", accuracy=0.6243),
            record(algorithm="randaug", accuracy=0.7147),
        ]
        deltas = delta_vs_baseline(records, "resnet18")
        assert format_delta(deltas[("randaug", False, "SC")]) == "+9.04"

    def test_format_delta_signs(self):
        assert format_delta(-0.1253) == "-12.53"
        assert format_delta(0.0) == "+0.00"

    def test_better_arm_flag(self):
        assert (
            ArmComparison("a", 0.6243, 0.8153, 1, 1).better == "pretrained"
        )
        assert ArmComparison("a", 0.9, 0.8, 1, 1).better == "scratch"
        assert ArmComparison("a", 0.7, 0.7, 1, 1).better == "tie"


class TestMissingData:
    def test_missing_baseline_cell(self):
        records = [
            record(algorithm="erm", seed=0),
            record(algorithm="mixup", seed=0),
            record(algorithm="mixup", seed=1),  # no matching erm run
        ]
        with pytest.raises(MissingBaselineError):
            delta_vs_baseline(records, "erm")

    def test_missing_arm_strict(self):
        records = [record(algorithm="erm", pretrained=False)]
        with pytest.raises(MissingArmError):
            scratch_vs_pretrained(records)

    def test_missing_arm_lenient_skips_with_warning(self, capsys):
        records = [record(algorithm="erm", pretrained=False)]
        assert scratch_vs_pretrained(records, strict=False) == []
        assert "skipping" in capsys.readouterr().err

    def test_single_record_has_zero_sem(self):
        views = shift_type_means([record()])
        assert views[0].sem == 0.0
        assert views[0].n == 1

    def test_non_test_splits_are_ignored(self):
        records = [
            record(accuracy=0.5),
            record(split="train", accuracy=1.0, seed=1),
            record(split="val", accuracy=0.0, seed=2),
        ]
        views = shift_type_means(records)
        assert len(views) == 1
        assert views[0].mean == pytest.approx(0.5)
        assert views[0].n == 1


class TestResultsCsv:
    def test_round_trip(self, tmp_path, corpus):
        path = tmp_path / "results.csv"
        write_results(corpus, path)
        assert load_results(path) == corpus

    def test_header_is_stable(self):
        assert RESULTS_HEADER == (
            "dataset",
            "config_id",
            "shift_set",
            "attributes",
            "algorithm",
            "pretrained",
            "seed",
            "split",
            "accuracy",
        )

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(SchemaError):
            load_results(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SchemaError):
            load_results(path)

    def test_rejects_short_row(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text(",".join(RESULTS_HEADER) + "\nsynth,c,SC\n")
        with pytest.raises(SchemaError):
            load_results(path)

    def test_rejects_bad_pretrained_literal(self, tmp_path, corpus):
        path = tmp_path / "bad.csv"
        write_results(corpus[:1], path)
        path.write_text(path.read_text().replace("false", "no"))
        with pytest.raises(SchemaError):
            load_results(path)

    def test_rejects_duplicate_measurement(self, tmp_path):
        path = tmp_path / "dup.csv"
        write_results([record()], path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines + [lines[1]]) + "\n")
        with pytest.raises(SchemaError):
            load_results(path)

    def test_rejects_out_of_range_accuracy(self, tmp_path):
        path = tmp_path / "range.csv"
        write_results([record(accuracy=0.9)], path)
        path.write_text(path.read_text().replace("0.900000", "1.500000"))
        with pytest.raises(SchemaError):
            load_results(path)


class TestEmitViews:
    def test_writes_all_views(self, tmp_path, corpus):
        emit_views(records=corpus, out_dir=tmp_path, baseline_algorithm="erm")
        for name in (
            "shift_type_means.csv",
            "difficulty_by_count.csv",
            "delta_vs_baseline.csv",
            "heatmap.json",
            "scratch_vs_pretrained.csv",
            "views.json",
        ):
            assert (tmp_path / name).exists(), name

    def test_heatmap_labels_use_signed_percent(self, tmp_path, corpus):
        emit_views(records=corpus, out_dir=tmp_path, baseline_algorithm="erm")
        heatmap = json.loads((tmp_path / "heatmap.json").read_text())
        assert heatmap["baseline"] == "erm"
        for cell in heatmap["cells"]:
            assert cell["label"] == format_delta(cell["delta"])
        assert heatmap["rows"] == list(SHIFT_SET_ORDER)

    def test_delta_rows_in_canonical_order(self, tmp_path, corpus):
        emit_views(records=corpus, out_dir=tmp_path, baseline_algorithm="erm")
        lines = (tmp_path / "delta_vs_baseline.csv").read_text().splitlines()[1:]
        rows = [line.split(",") for line in lines]
        keys = [
            (r[0], r[1], SHIFT_SET_ORDER.index(r[2])) for r in rows
        ]
        assert keys == sorted(keys)

    def test_default_baseline_is_first_arm(self, tmp_path, corpus):
        emit_views(records=corpus, out_dir=tmp_path)
        heatmap = json.loads((tmp_path / "heatmap.json").read_text())
        assert heatmap["baseline"] == "erm"  # alphabetically first algorithm
