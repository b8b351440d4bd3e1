"""Enrichment chain, provider doubles, caching and call budgets."""

import json

import pytest

from epiforge.enrich import (
    Enricher,
    Excluded,
    GeocodeFailure,
    TimezoneFailure,
    WeatherUnavailable,
    distinct_countries,
)
from epiforge.epiweek import epiweek_to_date, local_midnight_timestamp, utc_midnight_timestamp
from epiforge.providers import (
    GEOCODE,
    TIMEZONE,
    WEATHER,
    BudgetExhausted,
    BudgetedProvider,
    CachingProvider,
    CallBudget,
    FixtureProvider,
    MemoryProvider,
    ProviderError,
    coord_key,
    day_floor,
    default_budgets,
    slugify,
)
from epiforge.records import EnrichedRecord, GeoPoint

from conftest import make_clean


def geocode_body(lat, lon):
    return {"results": [{"geometry": {"location": {"lat": lat, "lng": lon}}}], "status": "OK"}


def timezone_body(zone):
    return {"dstOffset": 0, "rawOffset": -18000, "status": "OK", "timeZoneId": zone}


def weather_body(**currently):
    base = {
        "time": 1,
        "summary": "Clear",
        "temperature": 80.0,
        "dewPoint": 70.0,
        "humidity": 0.8,
        "pressure": 1013.0,
        "windSpeed": 5.0,
    }
    base.update(currently)
    return {"currently": base}


def tz_key(lat, lon, ts):
    return f"{coord_key(lat, lon)}_{day_floor(ts)}"


def wx_key(lat, lon, ts):
    return f"{coord_key(lat, lon)}_{ts}"


class TestDistinctCountries:
    def test_set_semantics(self):
        records = [make_clean("Haiti", week=20), make_clean("Haiti", week=21), make_clean("Cuba")]
        assert distinct_countries(records) == ["Cuba", "Haiti"]

    def test_empty(self):
        assert distinct_countries([]) == []

    def test_corpus_matches_brute_force(self, corpus_clean):
        brute = []
        for record in corpus_clean:
            if record.country not in brute:
                brute.append(record.country)
        assert distinct_countries(corpus_clean) == sorted(brute)


class TestGeocode:
    def test_fixture_cuba(self, corpus_fixtures):
        enricher = Enricher(FixtureProvider(corpus_fixtures))
        assert enricher.geocode("Cuba") == GeoPoint(21.5218, -77.7812)

    def test_unknown_name_offline(self, corpus_fixtures):
        enricher = Enricher(FixtureProvider(corpus_fixtures))
        with pytest.raises(GeocodeFailure):
            enricher.geocode("Atlantis")

    def test_empty_results_body(self):
        provider = MemoryProvider(geocode={"nowhere": {"results": [], "status": "ZERO_RESULTS"}})
        with pytest.raises(GeocodeFailure, match="no coordinates"):
            Enricher(provider).geocode("Nowhere")

    def test_memoized_within_run(self):
        provider = MemoryProvider(geocode={"cuba": geocode_body(21.5218, -77.7812)})
        enricher = Enricher(provider)
        first = enricher.geocode("Cuba")
        second = enricher.geocode("Cuba")
        assert first == second
        assert provider.call_count(GEOCODE) == 1

    def test_out_of_bounds_coordinates_rejected(self):
        provider = MemoryProvider(geocode={"bad": geocode_body(123.0, 0.0)})
        with pytest.raises(GeocodeFailure):
            Enricher(provider).geocode("Bad")


class TestResolveTimezone:
    def test_fixture_value(self):
        geo = GeoPoint(18.97, -72.28)
        ts = 1431302400
        provider = MemoryProvider(
            timezone={tz_key(geo.lat, geo.lon, ts): timezone_body("America/Port-au-Prince")}
        )
        assert Enricher(provider).resolve_timezone(geo, ts) == "America/Port-au-Prince"

    def test_missing_fixture(self):
        with pytest.raises(TimezoneFailure):
            Enricher(MemoryProvider()).resolve_timezone(GeoPoint(0.0, 0.0), 1000)

    def test_body_without_zone_id(self):
        geo = GeoPoint(1.0, 2.0)
        provider = MemoryProvider(timezone={tz_key(1.0, 2.0, 1000): {"status": "OK"}})
        with pytest.raises(TimezoneFailure, match="timeZoneId"):
            Enricher(provider).resolve_timezone(geo, 1000)


class TestFetchWeather:
    def test_six_fields_mapped(self):
        geo = GeoPoint(21.5218, -77.7812)
        ts = 1431907200
        provider = MemoryProvider(
            weather={
                wx_key(geo.lat, geo.lon, ts): weather_body(
                    temperature=77.5,
                    summary="Humid and Mostly Cloudy",
                    dewPoint=71.2,
                    humidity=0.81,
                    pressure=1013.2,
                    windSpeed=6.3,
                )
            }
        )
        observation = Enricher(provider).fetch_weather(geo, ts)
        assert observation.temperature == 77.5
        assert observation.summary == "Humid and Mostly Cloudy"
        assert observation.dew_point == 71.2
        assert observation.humidity == 0.81
        assert observation.pressure == 1013.2
        assert observation.wind_speed == 6.3

    def test_missing_currently(self):
        geo = GeoPoint(1.0, 2.0)
        provider = MemoryProvider(weather={wx_key(1.0, 2.0, 1000): {"latitude": 1.0}})
        with pytest.raises(WeatherUnavailable):
            Enricher(provider).fetch_weather(geo, 1000)

    def test_missing_field(self):
        geo = GeoPoint(1.0, 2.0)
        body = weather_body()
        del body["currently"]["dewPoint"]
        provider = MemoryProvider(weather={wx_key(1.0, 2.0, 1000): body})
        with pytest.raises(WeatherUnavailable, match="incomplete"):
            Enricher(provider).fetch_weather(geo, 1000)

    def test_invalid_humidity_is_invariant_breach_not_exclusion(self):
        geo = GeoPoint(1.0, 2.0)
        provider = MemoryProvider(weather={wx_key(1.0, 2.0, 1000): weather_body(humidity=1.2)})
        with pytest.raises(ValueError, match="humidity"):
            Enricher(provider).fetch_weather(geo, 1000)


class TestCachingAndBudget:
    def test_cache_hit_consumes_no_budget(self, tmp_path):
        inner = MemoryProvider(geocode={"cuba": geocode_body(21.5218, -77.7812)})
        budgets = default_budgets()
        provider = CachingProvider(BudgetedProvider(inner, budgets), tmp_path / "cache")
        first = provider.geocode_raw("Cuba")
        second = provider.geocode_raw("Cuba")
        assert first == second
        assert inner.call_count(GEOCODE) == 1
        assert budgets[GEOCODE].used_today == 1

    def test_budget_exhaustion_is_atomic(self):
        budget = CallBudget(WEATHER, daily_limit=2)
        budget.spend()
        budget.spend()
        with pytest.raises(BudgetExhausted):
            budget.spend()
        assert budget.used_today == 2  # never exceeds the limit

    def test_negative_body_is_cached_too(self, tmp_path):
        inner = MemoryProvider(weather={wx_key(1.0, 2.0, 5): {"flags": "no data"}})
        provider = CachingProvider(inner, tmp_path / "cache")
        for _ in range(2):
            assert provider.weather_raw(1.0, 2.0, 5) == {"flags": "no data"}
        assert inner.call_count(WEATHER) == 1

    def test_transport_error_is_not_cached(self, tmp_path):
        inner = MemoryProvider()
        provider = CachingProvider(inner, tmp_path / "cache")
        for _ in range(2):
            with pytest.raises(ProviderError):
                provider.geocode_raw("Cuba")
        assert inner.call_count(GEOCODE) == 2  # retried, nothing poisoned


class TestEnrichRecord:
    def test_full_chain_on_corpus(self, corpus_fixtures):
        enricher = Enricher(FixtureProvider(corpus_fixtures))
        record = make_clean("Cuba", 2015, 20, incidence_rate=2.5)
        enriched = enricher.enrich_record(record)
        assert isinstance(enriched, EnrichedRecord)
        assert enriched.base == record
        assert enriched.geo == GeoPoint(21.5218, -77.7812)
        assert enriched.timezone_id == "America/Havana"
        monday = epiweek_to_date(2015, 20)
        assert enriched.timestamp == local_midnight_timestamp(monday, "America/Havana")
        assert enriched.timestamp != utc_midnight_timestamp(monday)  # correction observable
        assert enriched.weather.summary

    def test_missing_weather_excludes_with_raw_detail(self, corpus_fixtures):
        enricher = Enricher(FixtureProvider(corpus_fixtures))
        result = enricher.enrich_record(make_clean("Peru", 2016, 5))
        assert isinstance(result, Excluded)
        assert result.code == "WeatherUnavailable"
        assert result.key == ("Peru", 2016, 5)
        assert "no fixture" in result.detail

    def test_geocode_failure_excludes(self):
        enricher = Enricher(MemoryProvider())
        result = enricher.enrich_record(make_clean("Atlantis"))
        assert isinstance(result, Excluded)
        assert result.code == "GeocodeFailure"

    def test_rerun_is_deterministic(self, corpus_fixtures):
        enricher = Enricher(FixtureProvider(corpus_fixtures))
        record = make_clean("Haiti", 2014, 35)
        assert enricher.enrich_record(record) == enricher.enrich_record(record)

    def test_budget_exhaustion_propagates(self):
        inner = MemoryProvider(geocode={"cuba": geocode_body(21.5218, -77.7812)})
        provider = BudgetedProvider(inner, default_budgets(geocode=0))
        with pytest.raises(BudgetExhausted):
            Enricher(provider).enrich_record(make_clean("Cuba"))


class TestEnrichAll:
    def test_exclusion_accounting_on_corpus(self, corpus_clean, corpus_enriched):
        enriched, excluded = corpus_enriched
        assert len(enriched) + len(excluded) == len(corpus_clean) == 50
        assert {e.key for e in excluded} == {("Peru", 2016, 5), ("Venezuela", 2016, 5)}

    def test_offline_mode_never_touches_network(
        self, corpus_clean, corpus_fixtures, block_network
    ):
        enricher = Enricher(FixtureProvider(corpus_fixtures))
        enriched, excluded, paused = enricher.enrich_all(corpus_clean)
        assert len(enriched) == 48 and not paused

    def test_results_sorted_by_key(self, corpus_enriched):
        enriched, excluded = corpus_enriched
        assert [r.key for r in enriched] == sorted(r.key for r in enriched)
        assert [e.key for e in excluded] == sorted(e.key for e in excluded)

    def test_pause_on_weather_budget(self, tmp_path):
        records = [make_clean("Cuba", 2015, week) for week in range(1, 6)]
        geo = geocode_body(21.5218, -77.7812)
        weather = {}
        timezone = {}
        for week in range(1, 6):
            monday = epiweek_to_date(2015, week)
            utc_ts = utc_midnight_timestamp(monday)
            local_ts = local_midnight_timestamp(monday, "America/Havana")
            timezone[tz_key(21.5218, -77.7812, utc_ts)] = timezone_body("America/Havana")
            weather[wx_key(21.5218, -77.7812, local_ts)] = weather_body()
        inner = MemoryProvider(geocode={"cuba": geo}, timezone=timezone, weather=weather)
        provider = CachingProvider(
            BudgetedProvider(inner, default_budgets(weather=2)), tmp_path / "cache"
        )
        enriched, excluded, paused = Enricher(provider).enrich_all(records)
        assert paused
        assert len(enriched) == 2 and excluded == []
        assert inner.call_count(WEATHER) == 2

        # Resume with a fresh daily budget and the warm cache: only the three
        # never-fetched weather keys are requested, nothing twice.
        provider = CachingProvider(
            BudgetedProvider(inner, default_budgets(weather=1000)), tmp_path / "cache"
        )
        enriched, excluded, paused = Enricher(provider).enrich_all(records)
        assert not paused and len(enriched) == 5
        weather_calls = [key for name, key in inner.calls if name == WEATHER]
        assert len(weather_calls) == 5
        assert len(set(weather_calls)) == 5

    def test_warm_cache_rerun_issues_zero_calls(self, tmp_path, corpus_clean, corpus_fixtures):
        cache = tmp_path / "cache"
        fixture = FixtureProvider(corpus_fixtures)

        class Counting:
            def __init__(self):
                self.calls = 0

            def geocode_raw(self, country):
                self.calls += 1
                return fixture.geocode_raw(country)

            def timezone_raw(self, lat, lon, ts):
                self.calls += 1
                return fixture.timezone_raw(lat, lon, ts)

            def weather_raw(self, lat, lon, ts):
                self.calls += 1
                return fixture.weather_raw(lat, lon, ts)

        counting = Counting()
        first_enricher = Enricher(CachingProvider(counting, cache))
        first, _, _ = first_enricher.enrich_all(corpus_clean)
        cold_calls = counting.calls
        assert cold_calls > 0

        second_enricher = Enricher(CachingProvider(counting, cache))
        second, _, _ = second_enricher.enrich_all(corpus_clean)
        assert counting.calls == cold_calls  # zero new provider calls
        assert second == first

        from epiforge.store import ENRICHED_UNITS, DatasetFile, save

        first_path, second_path = tmp_path / "a.ejsonl", tmp_path / "b.ejsonl"
        save(DatasetFile(units=dict(ENRICHED_UNITS), records=first), first_path)
        save(DatasetFile(units=dict(ENRICHED_UNITS), records=second), second_path)
        assert first_path.read_bytes() == second_path.read_bytes()


class TestParallelEnrichment:
    def test_parallel_matches_sequential(self, corpus_clean, corpus_fixtures):
        sequential = Enricher(FixtureProvider(corpus_fixtures), workers=1)
        parallel = Enricher(FixtureProvider(corpus_fixtures), workers=4)
        assert parallel.enrich_all(corpus_clean) == sequential.enrich_all(corpus_clean)

    def test_parallel_budget_never_overspends(self):
        records = [make_clean("Cuba", 2015, week) for week in range(1, 11)]
        inner = MemoryProvider(geocode={"cuba": geocode_body(21.5218, -77.7812)})
        budgets = default_budgets(timezone=3)
        provider = BudgetedProvider(inner, budgets)
        _, _, paused = Enricher(provider, workers=4).enrich_all(records)
        assert paused
        assert budgets[TIMEZONE].used_today == 3
        assert inner.call_count(TIMEZONE) <= 3
