import pytest

from gaps.gazetteer import Gazetteer, fold

FIXTURE = "\n".join([
    "2267057\tLisboa\tLisboa\t38.7167\t-9.1333\tPT\t517802",
    "2735943\tPorto\tPorto\t41.1496\t-8.6110\tPT\t249633",
    "2267094\tLeiria\tLeiria\t39.7436\t-8.8071\tPT\t45112",
    "3449741\tSantiago\tSantiago\t-29.19\t-54.86\tBR\t49425",
    "3871336\tSantiago\tSantiago\t-33.45\t-70.66\tCL\t4837295",
    "2735170\tSão Brás de Alportel\tSao Bras de Alportel"
    "\t37.15\t-7.8833\tPT\t10032",
]) + "\n"


@pytest.fixture
def gaz():
    return Gazetteer.load(FIXTURE)


class TestLoad:
    def test_row_count(self, gaz):
        assert len(gaz) == 6
        assert gaz.skipped_rows == 0

    def test_malformed_row_skipped_with_tally(self):
        data = FIXTURE + "99\tBad\tBad\tnot-a-lat\t0\tPT\t1\n"
        g = Gazetteer.load(data)
        assert len(g) == 6
        assert g.skipped_rows == 1

    def test_empty_file(self):
        g = Gazetteer.load(b"")
        assert len(g) == 0
        assert g.autocomplete("a") == []

    def test_duplicate_id_last_wins(self):
        data = ("1\tFirst\tFirst\t1.0\t1.0\tPT\t10\n"
                "1\tSecond\tSecond\t2.0\t2.0\tPT\t20\n")
        g = Gazetteer.load(data)
        assert len(g) == 1
        assert g.lookup("Second") != []
        assert g.lookup("First") == []


class TestAutocomplete:
    def test_prefix(self, gaz):
        assert gaz.autocomplete("Lis") == ["Lisboa"]

    def test_case_insensitive(self, gaz):
        assert gaz.autocomplete("lIs") == ["Lisboa"]

    def test_no_match(self, gaz):
        assert gaz.autocomplete("Zz") == []

    def test_diacritics_fold_both_ways(self, gaz):
        assert gaz.autocomplete("sao b") == ["São Brás de Alportel"]
        assert gaz.autocomplete("São B") == ["São Brás de Alportel"]

    def test_population_ordering_and_limit(self, gaz):
        # "L..." matches Lisboa (517k) then Leiria (45k)
        assert gaz.autocomplete("l", 10) == ["Lisboa", "Leiria"]
        assert gaz.autocomplete("l", 1) == ["Lisboa"]

    def test_limit_validation(self, gaz):
        with pytest.raises(ValueError):
            gaz.autocomplete("l", 0)

    def test_every_result_has_prefix(self, gaz):
        for prefix in ("s", "po", "le", "sant"):
            for name in gaz.autocomplete(prefix, 50):
                assert fold(name).startswith(fold(prefix))


class TestLookup:
    def test_homonyms_return_all(self, gaz):
        hits = gaz.lookup("Santiago")
        assert len(hits) == 2
        # most populous first: Santiago de Chile before the Brazilian one
        assert hits[0][1].lat == pytest.approx(-33.45)
        assert hits[1][1].lat == pytest.approx(-29.19)

    def test_unknown(self, gaz):
        assert gaz.lookup("Atlantis") == []

    def test_exhaustive_self_lookup(self, gaz):
        for row in FIXTURE.strip().split("\n"):
            name = row.split("\t")[1]
            lat = float(row.split("\t")[3])
            hits = gaz.lookup(name)
            assert any(abs(p.lat - lat) < 1e-9 for _, p in hits)

    def test_lookup_subset_of_autocomplete(self, gaz):
        for row in FIXTURE.strip().split("\n"):
            name = row.split("\t")[1]
            looked = {n for n, _ in gaz.lookup(name)}
            completed = set(gaz.autocomplete(name, 1000))
            assert looked <= completed
