import numpy as np
import pytest

from cgwish.errors import InvalidParams, ParseError, ValidationError
from cgwish.graph import Graph
from cgwish.io import (
    Report,
    format_matrix,
    parse_config,
    parse_matrix,
    parse_report,
    prior_from_config,
    read_config,
    read_csv,
    read_order,
    report_body,
    write_csv,
    write_matrix,
)

A4 = Graph.path(4)


class TestMatrixText:
    def test_roundtrip(self, rng):
        A = rng.normal(size=(4, 4))
        A = A + A.T
        np.testing.assert_array_equal(parse_matrix(format_matrix(A)), A)

    def test_comments(self):
        A = parse_matrix("# c\n1 0.5\n0.5 2  # tail\n")
        np.testing.assert_array_equal(A, [[1, 0.5], [0.5, 2]])

    @pytest.mark.parametrize("text,line", [("1 2\n2 x\n", 2), ("1 2\n3\n", 2)])
    def test_errors(self, text, line):
        with pytest.raises(ParseError) as exc:
            parse_matrix(text, path="m.txt")
        assert exc.value.line == line

    def test_asymmetric(self):
        with pytest.raises(ParseError):
            parse_matrix("1 2\n3 4\n")


class TestCsv:
    def test_roundtrip_with_header(self, tmp_path, rng):
        Y = rng.normal(size=(6, 3))
        write_csv(Y, tmp_path / "y.csv", header=["a", "b", "c"])
        got, names = read_csv(tmp_path / "y.csv", header=True)
        np.testing.assert_array_equal(got, Y)
        assert names == ["a", "b", "c"]

    def test_ragged(self, tmp_path):
        (tmp_path / "y.csv").write_text("1,2\n3\n")
        with pytest.raises(ParseError):
            read_csv(tmp_path / "y.csv")


class TestConfig:
    def test_parse(self):
        cfg = parse_config("# prior\nU = zero\nalpha = constant: 2\nalpha = offset:5\n")
        assert cfg == {"u": "zero", "alpha": "offset:5"}

    def test_missing_equals(self):
        with pytest.raises(ParseError):
            parse_config("u zero\n")

    def test_prior_forms(self, tmp_path):
        S = np.diag([1.0, 2.0, 3.0, 6.0])
        p = prior_from_config({"u": "scaled-identity", "alpha": "offset:5"}, A4, S)
        np.testing.assert_allclose(p.U, 3.0 * np.eye(4))
        np.testing.assert_array_equal(p.alpha, [5, 6, 6, 6])
        p = prior_from_config({"u": "identity", "alpha": "list: 3, 4, 5, 6"}, A4,
                              idx=np.array([3, 2, 1, 0]))
        np.testing.assert_array_equal(p.alpha, [6, 5, 4, 3])
        write_matrix(np.diag([1.0, 2.0, 3.0, 4.0]), tmp_path / "u.txt")
        (tmp_path / "p.cfg").write_text("u = file:u.txt\nalpha = delta:3\n")
        p = prior_from_config(read_config(tmp_path / "p.cfg"), A4)
        np.testing.assert_array_equal(np.diag(p.U), [1, 2, 3, 4])
        np.testing.assert_array_equal(p.alpha, [9, 9, 9, 11])

    @pytest.mark.parametrize("cfg,exc", [
        ({"u": "zero"}, InvalidParams),
        ({"u": "banana", "alpha": "constant:3"}, InvalidParams),
        ({"u": "zero", "alpha": "list:1,2"}, ValidationError),
        ({"u": "scaled-identity", "alpha": "constant:3"}, InvalidParams),
    ])
    def test_prior_errors(self, cfg, exc):
        with pytest.raises(exc):
            prior_from_config(cfg, A4)

    def test_order_file(self, tmp_path):
        (tmp_path / "o").write_text("# new labels\n2 1\n4 3\n")
        assert read_order(tmp_path / "o", 4) == (2, 1, 4, 3)
        (tmp_path / "bad").write_text("1 1 2 3\n")
        with pytest.raises(ParseError):
            read_order(tmp_path / "bad", 4)


class TestReport:
    def test_roundtrip(self):
        rep = Report("t").section("a", [("x", 1.5), ("wall_time_seconds", 0.3)])
        rep.matrix("m", np.array([[1.0, 2.0], [2.0, 5.0]]))
        parsed = parse_report(rep.text())
        assert parsed["a"]["x"] == "1.5"
        np.testing.assert_array_equal(parsed["m"], [[1, 2], [2, 5]])
        assert "wall_time_seconds" not in report_body(rep.text())
