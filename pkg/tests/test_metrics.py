import pytest

from mapnbv.errors import MapNbvError
from mapnbv.metrics import ComparisonRow, format_tables, improvement, reproduce_tables


class TestImprovement:
    def test_reference_values(self):
        assert round(improvement(11145, 8570), 2) == 26.12
        assert round(improvement(10207, 7258), 2) == 33.77

    def test_equal_counts_zero(self):
        assert improvement(1234, 1234) == 0.0

    def test_antisymmetric_exactly(self):
        for a, b in ((11145, 8570), (3, 7), (100, 1)):
            assert improvement(a, b) == -improvement(b, a)

    def test_double_zero_rejected(self):
        with pytest.raises(MapNbvError):
            improvement(0, 0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            improvement(-1, 5)

    def test_one_sided_zero_is_defined(self):
        assert improvement(10, 0) == pytest.approx(200.0)


class TestTables:
    def test_all_cells_within_tolerance(self):
        checks = reproduce_tables()
        assert set(checks) == {"first_iteration", "termination"}
        for check in checks.values():
            assert len(check.rows) == 20
            assert check.max_cell_error <= 0.01

    def test_means_match_reference(self):
        checks = reproduce_tables()
        assert abs(checks["first_iteration"].mean_recomputed - 22.75) <= 0.01
        assert abs(checks["termination"].mean_recomputed - 15.63) <= 0.01
        assert abs(checks["first_iteration"].mean_reported - 22.75) <= 0.01
        assert abs(checks["termination"].mean_reported - 15.63) <= 0.01

    def test_row_construction_rounds_half_even(self):
        row = ComparisonRow.build("X", "m", 11145, 8570)
        assert row.improvement_percent == 26.12

    def test_format_output_mentions_means(self):
        text = format_tables(reproduce_tables())
        assert "22.75" in text and "15.63" in text
        assert text.count("%") >= 80  # every row prints both percentages
