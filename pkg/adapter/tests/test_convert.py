import numpy as np
import pytest

from xaiexport import ExportError, densify_weight_lists, normalize_output, reduce_multiclass
from xaiexport.schema import source_entry


class TestDensify:
    def test_named_features(self):
        lists = [[("a", 0.5), ("c", -0.25)], [("b", 1.0)]]
        matrix = densify_weight_lists(lists, ["a", "b", "c"])
        assert matrix.tolist() == [[0.5, 0.0, -0.25], [0.0, 1.0, 0.0]]

    def test_indexed_features(self):
        matrix = densify_weight_lists([[(2, 0.7)]], ["a", "b", "c"])
        assert matrix.tolist() == [[0.0, 0.0, 0.7]]

    def test_unknown_feature(self):
        with pytest.raises(ExportError, match="unknown feature"):
            densify_weight_lists([[("z", 1.0)]], ["a"])

    def test_index_out_of_range(self):
        with pytest.raises(ExportError, match="out of range"):
            densify_weight_lists([[(5, 1.0)]], ["a", "b"])


class TestReduceMulticlass:
    def test_predicted_class_slice(self):
        tensor = np.arange(2 * 3 * 2, dtype=float).reshape(2, 3, 2)
        out = reduce_multiclass(tensor, np.array([1, 0]))
        assert out.tolist() == [[1.0, 3.0, 5.0], [6.0, 8.0, 10.0]]

    def test_row_count_checked(self):
        with pytest.raises(ExportError, match="predictions"):
            reduce_multiclass(np.zeros((2, 3, 2)), np.array([0]))

    def test_class_index_checked(self):
        with pytest.raises(ExportError, match="class axis"):
            reduce_multiclass(np.zeros((2, 3, 2)), np.array([0, 5]))


class TestNormalizeOutput:
    def test_vector_and_matrix_pass_through(self):
        assert normalize_output([1.0, 2.0]).ndim == 1
        assert normalize_output([[1.0], [2.0]]).ndim == 2

    def test_tensor_needs_predictions(self):
        with pytest.raises(ExportError, match="predicted classes"):
            normalize_output(np.zeros((2, 3, 2)))

    def test_too_many_axes(self):
        with pytest.raises(ExportError, match="axes"):
            normalize_output(np.zeros((1, 1, 1, 1)))


class TestSourceEntry:
    def test_scope_is_pure_function_of_dimensionality(self):
        assert source_entry("g", np.zeros(3), 3)["scope"] == "global"
        assert source_entry("l", np.zeros((2, 3)), 3)["scope"] == "local"

    def test_width_mismatch_rejected(self):
        with pytest.raises(ExportError, match="does not match"):
            source_entry("g", np.zeros(2), 3)
        with pytest.raises(ExportError, match="does not match"):
            source_entry("l", np.zeros((2, 2)), 3)

    def test_non_finite_rejected(self):
        with pytest.raises(ExportError, match="NaN"):
            source_entry("g", np.array([np.nan, 1.0]), 2)
