"""Flat-file ingestion: profiles, row accounting, round trips."""

import numpy as np
import pytest

from pollheap.ingest import (
    PROFILES,
    ColumnMapping,
    SchemaError,
    load_dataset,
    verify_subtotals,
    write_canonical_tsv,
)

from helpers import make_dataset, random_counts


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestCanonical:
    def test_roundtrip_preserves_everything(self, tmp_path, null_multiregion):
        path = tmp_path / "out.tsv"
        write_canonical_tsv(null_multiregion, path)
        loaded, report = load_dataset(path, "canonical")
        assert report.parsed == len(null_multiregion)
        assert report.skipped == 0
        assert np.array_equal(loaded.registered, null_multiregion.registered)
        assert np.array_equal(loaded.given, null_multiregion.given)
        assert np.array_equal(loaded.cast, null_multiregion.cast)
        assert np.array_equal(loaded.leader, null_multiregion.leader)
        assert loaded.station_ids == null_multiregion.station_ids
        assert loaded.region_codes == null_multiregion.region_codes

    def test_default_label_is_file_stem(self, tmp_path, null_2k):
        path = tmp_path / "vote_2024.tsv"
        write_canonical_tsv(null_2k, path)
        loaded, _ = load_dataset(path, "canonical")
        assert loaded.label == "vote_2024"

    def test_missing_column_is_schema_error(self, tmp_path):
        path = _write(tmp_path / "bad.tsv", ["station_id\tregistered", "a\t100"])
        with pytest.raises(SchemaError):
            load_dataset(path, "canonical")

    def test_bad_rows_are_counted_not_fatal(self, tmp_path):
        header = "station_id\tregion_code\tconstituency_id\tregistered\tgiven\tcast\tleader"
        path = _write(
            tmp_path / "mixed.tsv",
            [
                header,
                "s1\tR\t\t200\t150\t148\t90",
                "s2\tR\t\t200\tnot_a_number\t10\t5",
                "s3\tR\t\t300\t250\t240\t120",
            ],
        )
        ds, report = load_dataset(path, "canonical")
        assert len(ds) == 2
        assert report.parsed == 2
        assert report.skipped == 1
        assert report.invalid == 1
        assert any("line 3" in e for e in report.errors)


class TestCountryProfiles:
    def test_es_profile_sums_components(self, tmp_path):
        # given = nulos + blanco + validos, cast = blanco + validos
        path = _write(
            tmp_path / "es.tsv",
            [
                "mesa_id\tprovincia\tcenso\tvotos_nulos\tvotos_blanco\tvotos_validos\tvotos_lider",
                "m1\tP01\t500\t10\t20\t300\t150",
            ],
        )
        ds, report = load_dataset(path, "es")
        assert report.parsed == 1
        assert ds.registered[0] == 500
        assert ds.given[0] == 330
        assert ds.cast[0] == 320
        assert ds.leader[0] == 150
        assert ds.region_codes[0] == "P01"

    def test_de_profile(self, tmp_path):
        path = _write(
            tmp_path / "de.tsv",
            [
                "bezirk_id\tland\twahlberechtigte\tungueltige\tgueltige\tstimmen_sieger",
                "b1\tBY\t900\t15\t600\t240",
            ],
        )
        ds, _ = load_dataset(path, "de")
        assert ds.given[0] == 615
        assert ds.cast[0] == 600
        assert ds.leader[0] == 240

    def test_pl_profile(self, tmp_path):
        path = _write(
            tmp_path / "pl.tsv",
            [
                "obwod_id\twojewodztwo\tuprawnieni\tkarty_wydane\tglosy_wazne\tglosy_lider",
                "o1\tMA\t1000\t700\t690\t350",
            ],
        )
        ds, _ = load_dataset(path, "pl")
        assert ds.given[0] == 700
        assert ds.cast[0] == 690

    def test_profile_objects_accepted_directly(self, tmp_path, null_2k):
        path = tmp_path / "c.tsv"
        write_canonical_tsv(null_2k, path)
        ds, _ = load_dataset(path, PROFILES["canonical"])
        assert len(ds) == len(null_2k)

    def test_unknown_profile_name(self, tmp_path, null_2k):
        path = tmp_path / "c.tsv"
        write_canonical_tsv(null_2k, path)
        with pytest.raises((KeyError, SchemaError, ValueError)):
            load_dataset(path, "xx")


class TestMappingValidation:
    def test_required_field_must_resolve(self):
        with pytest.raises(SchemaError):
            ColumnMapping(columns={"station_id": "id"})

    def test_field_cannot_be_mapped_twice(self):
        with pytest.raises(SchemaError):
            ColumnMapping(
                columns={
                    "station_id": "id",
                    "registered": "v",
                    "given": "g",
                    "cast": "b",
                    "leader": "l",
                },
                derived={"cast": ("x", "y")},
            )

    def test_unknown_canonical_field_rejected(self):
        with pytest.raises(SchemaError):
            ColumnMapping(columns={"banana": "b"})


class TestSubtotals:
    def test_matching_reference_has_no_discrepancies(self):
        ds = make_dataset(
            [200, 300, 400],
            [150, 200, 300],
            [148, 195, 295],
            [90, 100, 200],
            regions=["A", "A", "B"],
        )
        ref = {
            "A": {"registered": 500, "given": 350, "cast": 343, "leader": 190},
            "B": {"registered": 400, "given": 300, "cast": 295, "leader": 200},
        }
        assert verify_subtotals(ds, ref) == []

    def test_mismatch_reported_per_field(self):
        ds = make_dataset([200], [150], [148], [90], regions=["A"])
        ref = {"A": {"registered": 200, "given": 151}}
        disc = verify_subtotals(ds, ref)
        assert len(disc) == 1
        d = disc[0]
        assert d.region_code == "A"
        assert d.field == "given"
        assert d.expected == 151
        assert d.actual == 150


def test_roundtrip_random_datasets(tmp_path):
    rng = np.random.default_rng(5)
    v, g, b, l = random_counts(rng, 40)
    regions = [f"R{int(x):02d}" for x in rng.integers(0, 4, size=40)]
    ds = make_dataset(v, g, b, l, regions=regions)
    path = tmp_path / "rt.tsv"
    write_canonical_tsv(ds, path)
    loaded, _ = load_dataset(path, "canonical", label=ds.label)
    assert loaded.station_ids == ds.station_ids
    assert np.array_equal(loaded.leader, ds.leader)
    assert loaded.region_codes == ds.region_codes
