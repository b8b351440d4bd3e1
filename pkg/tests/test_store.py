"""Dataset-file round trips, validation on load, and merge semantics."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from epiforge.store import (
    CLEAN_UNITS,
    ENRICHED_UNITS,
    SCHEMA_VERSION,
    DatasetFile,
    StoreError,
    load,
    merge,
    save,
)

from conftest import make_enriched

WEEKS = st.integers(min_value=1, max_value=52)


@st.composite
def enriched_records(draw, countries=("Cuba", "Haiti", "Peru")):
    country = draw(st.sampled_from(countries))
    week = draw(WEEKS)
    year = draw(st.sampled_from([2014, 2015, 2016, 2017]))
    return make_enriched(
        country,
        year,
        week,
        suspected=draw(st.integers(0, 10_000)),
        confirmed=draw(st.integers(0, 1_000)),
        imported=draw(st.one_of(st.none(), st.integers(0, 50))),
        deaths=draw(st.one_of(st.none(), st.integers(0, 50))),
        incidence_rate=draw(
            st.one_of(st.none(), st.floats(0, 500, allow_nan=False, allow_infinity=False))
        ),
        population_k=draw(st.one_of(st.none(), st.integers(1, 99_999))),
        summary=draw(st.sampled_from(["Clear", "Humid and Overcast", "Light Rain"])),
        temperature=draw(st.floats(-20, 120, allow_nan=False)),
        humidity=draw(st.floats(0, 1, allow_nan=False)),
    )


def dataset_of(records, units=ENRICHED_UNITS):
    unique = {r.key: r for r in records}
    return DatasetFile(units=dict(units), records=[unique[k] for k in sorted(unique)])


class TestSaveLoad:
    def test_round_trip(self, tmp_path):
        dataset = dataset_of([make_enriched("Cuba"), make_enriched("Haiti", week=21)])
        path = tmp_path / "data.ejsonl"
        save(dataset, path)
        loaded = load(path)
        assert loaded.records == dataset.records
        assert loaded.units == dataset.units
        assert loaded.schema_version == SCHEMA_VERSION

    @given(st.lists(enriched_records(), max_size=8))
    def test_round_trip_property(self, tmp_path_factory, records):
        dataset = dataset_of(records)
        path = tmp_path_factory.mktemp("ds") / "data.ejsonl"
        save(dataset, path)
        assert load(path).records == dataset.records

    def test_clean_records_round_trip(self, tmp_path, corpus_clean):
        path = tmp_path / "clean.ejsonl"
        save(DatasetFile(units=dict(CLEAN_UNITS), records=list(corpus_clean)), path)
        loaded = load(path)
        assert len(loaded.records) == 50
        assert loaded.records == corpus_clean

    def test_two_saves_are_byte_identical(self, tmp_path):
        dataset = dataset_of([make_enriched("Cuba", incidence_rate=0.1)])
        first, second = tmp_path / "a.ejsonl", tmp_path / "b.ejsonl"
        save(dataset, first)
        save(dataset, second)
        assert first.read_bytes() == second.read_bytes()

    def test_header_line_shape(self, tmp_path):
        path = tmp_path / "data.ejsonl"
        save(dataset_of([]), path)
        header = path.read_text().splitlines()[0]
        assert json.loads(header) == {"schema_version": 1, "units": ENRICHED_UNITS}

    def test_duplicate_key_refused_before_write(self, tmp_path):
        duplicate = DatasetFile(
            units=dict(ENRICHED_UNITS),
            records=[make_enriched("Cuba"), make_enriched("Cuba", suspected=7)],
        )
        path = tmp_path / "data.ejsonl"
        with pytest.raises(StoreError, match="duplicate"):
            save(duplicate, path)
        assert not path.exists()

    def test_unsorted_records_refused(self, tmp_path):
        unsorted = DatasetFile(
            units=dict(ENRICHED_UNITS),
            records=[make_enriched("Haiti"), make_enriched("Cuba")],
        )
        with pytest.raises(StoreError, match="sorted"):
            save(unsorted, tmp_path / "data.ejsonl")


class TestLoadRejections:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.ejsonl"
        path.write_text("")
        with pytest.raises(StoreError, match="missing header"):
            load(path)

    def test_header_only_is_empty_dataset(self, tmp_path):
        path = tmp_path / "header.ejsonl"
        path.write_text('{"schema_version":1,"units":{}}\n')
        dataset = load(path)
        assert dataset.records == [] and dataset.units == {}

    def test_version_mismatch_names_both_versions(self, tmp_path):
        path = tmp_path / "v9.ejsonl"
        path.write_text('{"schema_version":9,"units":{}}\n')
        with pytest.raises(StoreError, match=r"9.*1"):
            load(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        dataset = dataset_of([make_enriched("Cuba")])
        path = tmp_path / "data.ejsonl"
        save(dataset, path)
        path.write_text(path.read_text() + "{not json\n")
        with pytest.raises(StoreError, match=r":3:"):
            load(path)

    def test_invariant_breach_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.ejsonl"
        record = json.loads(
            '{"country":"Cuba","year":2015,"week":99,"suspected":1,"confirmed":0,'
            '"imported":null,"deaths":null,"incidence_rate":null,"population_k":null}'
        )
        path.write_text(
            '{"schema_version":1,"units":{}}\n' + json.dumps(record, separators=(",", ":")) + "\n"
        )
        with pytest.raises(StoreError, match=r":2:.*week"):
            load(path)

    def test_unexpected_keys_rejected(self, tmp_path):
        path = tmp_path / "keys.ejsonl"
        path.write_text('{"schema_version":1,"units":{}}\n{"country":"Cuba"}\n')
        with pytest.raises(StoreError, match="keys"):
            load(path)

    def test_duplicate_keys_rejected_on_load(self, tmp_path):
        line = (
            '{"country":"Cuba","year":2015,"week":20,"suspected":1,"confirmed":0,'
            '"imported":null,"deaths":null,"incidence_rate":null,"population_k":null}'
        )
        path = tmp_path / "dup.ejsonl"
        path.write_text('{"schema_version":1,"units":{}}\n' + line + "\n" + line + "\n")
        with pytest.raises(StoreError, match="duplicate"):
            load(path)


class TestMerge:
    def test_identity_and_idempotence(self):
        dataset = dataset_of([make_enriched("Cuba"), make_enriched("Haiti", week=5)])
        empty = DatasetFile(units=dict(ENRICHED_UNITS))
        assert merge(dataset, empty).records == dataset.records
        assert merge(dataset, dataset).records == dataset.records

    def test_disjoint_union_sorted(self):
        a = dataset_of([make_enriched("Peru", week=2), make_enriched("Cuba", week=9)])
        b = dataset_of([make_enriched("Brazil", week=1), make_enriched("Haiti", week=4)])
        merged = merge(a, b)
        assert [r.key for r in merged.records] == sorted(
            r.key for r in a.records + b.records
        )
        assert len(merged.records) == 4

    def test_delta_wins_on_conflict(self):
        base = dataset_of([make_enriched("Cuba", suspected=100)])
        delta = dataset_of([make_enriched("Cuba", suspected=250)])
        merged = merge(base, delta)
        assert merged.records[0].base.suspected == 250

    def test_associative_on_disjoint_inputs(self):
        a = dataset_of([make_enriched("Brazil", week=1)])
        b = dataset_of([make_enriched("Cuba", week=2)])
        c = dataset_of([make_enriched("Haiti", week=3)])
        left = merge(merge(a, b), c)
        right = merge(a, merge(b, c))
        assert left.records == right.records

    def test_unit_mismatch_fatal(self):
        a = dataset_of([make_enriched("Cuba")])
        b = dataset_of([make_enriched("Haiti")], units={"weird": "unit"})
        with pytest.raises(StoreError, match="unit-label mismatch"):
            merge(a, b)

    def test_version_mismatch_fatal(self):
        a = dataset_of([make_enriched("Cuba")])
        b = dataset_of([make_enriched("Haiti")])
        b.schema_version = 2
        with pytest.raises(StoreError, match="schema_version"):
            merge(a, b)

    def test_exclusion_cleared_when_delta_enriches_key(self):
        base = DatasetFile(
            units=dict(ENRICHED_UNITS),
            exclusions=[(("Cuba", 2015, 20), "WeatherUnavailable", "gap")],
        )
        delta = dataset_of([make_enriched("Cuba", 2015, 20)])
        merged = merge(base, delta)
        assert merged.exclusions == []
        assert len(merged.records) == 1
