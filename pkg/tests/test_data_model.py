import numpy as np
import pytest

from tabsynth.data_model import (
    ColumnSpec,
    Dataset,
    SchemaError,
    column_stats,
    destandardize,
    load_csv,
    load_schema,
    quantile,
    save_csv,
    save_schema,
    standardize,
)

SCHEMA2 = [ColumnSpec("a", "continuous"), ColumnSpec("b", "binary")]


def write(path, text):
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_drops_rows_with_missing_cells(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,b\n1.5,0\n2.5,\n3.5,1\n")
        ds = load_csv(p, SCHEMA2)
        assert ds.n == 2
        assert ds.values[:, 0].tolist() == [1.5, 3.5]

    def test_binary_value_out_of_range_names_column(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,b\n1.0,2\n")
        with pytest.raises(SchemaError, match="'b'"):
            load_csv(p, SCHEMA2)

    def test_header_mismatch(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,c\n1,0\n")
        with pytest.raises(SchemaError, match="header"):
            load_csv(p, SCHEMA2)

    def test_non_numeric_cell_reports_location(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,b\n1.0,0\nfoo,1\n")
        with pytest.raises(SchemaError, match="row 1"):
            load_csv(p, SCHEMA2)

    def test_benchmark_size(self, tmp_path):
        from tabsynth.simgen import default_config, generate_benchmark

        data = generate_benchmark(default_config(n=2500, seed=0))
        save_csv(data, tmp_path / "d.csv")
        again = load_csv(tmp_path / "d.csv", list(data.columns))
        assert again.n == 2500 and again.p == 21

    def test_round_trip_is_bitwise(self, tmp_path):
        rng = np.random.default_rng(7)
        ds = Dataset(
            columns=SCHEMA2,
            values=np.column_stack(
                [rng.standard_normal(50) * 1e3, rng.integers(0, 2, 50).astype(float)]
            ),
        )
        save_csv(ds, tmp_path / "d.csv")
        again = load_csv(tmp_path / "d.csv", SCHEMA2)
        assert np.array_equal(again.values, ds.values)


class TestStandardize:
    def test_two_point_symmetry(self):
        scaled, params = standardize(np.array([0.0, 2.0]))
        assert scaled.tolist() == [-0.5, 0.5]
        assert params.mean == 1.0
        assert params.two_sd == 2.0

    def test_constant_column_errors(self):
        with pytest.raises(ValueError):
            standardize(np.array([5.0, 5.0, 5.0]))

    def test_scaled_sd_is_half(self):
        x = np.random.default_rng(0).normal(3, 4, 10000)
        scaled, _ = standardize(x)
        assert abs(np.mean(scaled)) < 1e-10
        assert 0.49 < np.std(scaled) < 0.51

    def test_destandardize_inverts(self):
        x = np.random.default_rng(1).normal(2, 3, 500)
        scaled, params = standardize(x)
        assert np.max(np.abs(destandardize(scaled, params) - x)) < 1e-10

    def test_destandardize_constant(self):
        from tabsynth.data_model import ScalingParams

        out = destandardize(np.zeros(4), ScalingParams(mean=7.0, two_sd=2.0))
        assert out.tolist() == [7.0] * 4


class TestQuantile:
    def test_median(self):
        assert quantile(np.array([1.0, 2, 3, 4, 5]), 0.5) == 3.0

    def test_linear_interpolation(self):
        assert quantile(np.array([0.0, 10.0]), 0.25) == 2.5

    def test_normal_quantile(self):
        x = np.random.default_rng(2).standard_normal(10**6)
        assert abs(quantile(x, 0.84) - 0.99446) < 0.01

    def test_monotone_and_extremes(self):
        x = np.random.default_rng(3).standard_normal(101)
        qs = [quantile(x, q) for q in np.linspace(0, 1, 21)]
        assert qs == sorted(qs)
        assert qs[0] == x.min() and qs[-1] == x.max()

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            quantile(np.array([]), 0.5)


class TestColumnStats:
    def test_normal_moments(self):
        x = np.random.default_rng(4).standard_normal(200000)
        s = column_stats(x)
        assert abs(s["skewness"]) < 0.05
        assert abs(s["kurtosis"] - 3.0) < 0.1

    def test_symmetric_two_point_skewness(self):
        s = column_stats(np.array([-1.0, 1.0, -1.0, 1.0]))
        assert s["skewness"] == 0.0

    def test_uniform_kurtosis(self):
        x = np.random.default_rng(5).uniform(size=200000)
        assert abs(column_stats(x)["kurtosis"] - 1.8) < 0.05

    def test_constant_reported_as_nan(self):
        s = column_stats(np.zeros(10))
        assert np.isnan(s["skewness"]) and np.isnan(s["kurtosis"])


class TestSchema:
    def test_unknown_kind_rejected(self):
        with pytest.raises(SchemaError):
            ColumnSpec("x", "categorical")

    def test_schema_json_round_trip(self, tmp_path):
        schema = [ColumnSpec("a", "continuous"), ColumnSpec("b", "integer_continuous")]
        save_schema(schema, tmp_path / "s.json")
        assert load_schema(tmp_path / "s.json") == schema

    def test_validate_integer_column(self):
        ds = Dataset(
            columns=[ColumnSpec("a", "integer_continuous")], values=np.array([[1.5]])
        )
        with pytest.raises(SchemaError, match="non-integer"):
            ds.validate()
