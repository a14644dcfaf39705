import pytest

from kmeq import cases, report
from kmeq.harness import SUMMARY_HEADER
from kmeq.report import SummaryRow, format_cells, read_summary, render_html, render_text
from kmeq.utils.csvio import rows_to_csv


def row(label="ARBK(50, 50)", failures=0, mean_it=1135.2, mean_rse=0.0467):
    return SummaryRow(
        label=label,
        trials=20,
        mean_rse=mean_rse,
        mean_it=mean_it,
        mean_cpu_s=0.123456,
        failures=failures,
    )


class FormatCellsTestCase(cases._KmeqTestCase):
    def testConverged(self):
        """label, mean RSE, mean IT and mean CPU time"""
        self.assertEqual(
            format_cells(row()), ["ARBK(50, 50)", "4.67e-02", "1135.2", "0.1235"]
        )

    def testAllFailed(self):
        """every trial at the cap: IT is shown as > max_iters"""
        cells = format_cells(row("CME-RK", failures=20, mean_it=100000.0))
        self.assertEqual(cells[1:3], ["4.67e-02", "> 100000"])

    def testSomeFailed(self):
        """some trials at the cap: RSE and IT are lower bounds"""
        cells = format_cells(row("GRBK(50, 50)", failures=3, mean_it=8000.3))
        self.assertEqual(cells[1:3], ["> 4.67e-02", "> 8000.3"])


class RenderTestCase(cases._KmeqTestCase):
    def testText(self):
        text = render_text([row(), row("CME-RK", failures=20, mean_it=1e5)])
        lines = text.split("\n")
        self.assertEqual(len(lines), 4)
        assert lines[0].startswith("Methods      | RSE")
        assert set(lines[1]) <= {"-", "+"}
        assert lines[3].startswith("CME-RK       | 4.67e-02 | > 100000")
        assert all(line == line.rstrip() for line in lines)

    def testHtml(self):
        html = render_html([row()])
        assert html.startswith("<table>\n<tr><th>Methods</th><th>RSE</th>")
        self.assertIn("<td>ARBK(50, 50)</td><td>4.67e-02</td>", html)
        assert html.endswith("</table>")


class SummaryFileTestCase(cases._KmeqTestCase):
    def writeSummary(self, path):
        path.write_text(
            rows_to_csv(
                SUMMARY_HEADER,
                [
                    ("ARBK", 50, 50, 20, 0.0467, 1100.0, 1135.2, 0.5, 0),
                    ("CME-RK", "", "", 20, 0.9, 100000.0, 100000.0, 12.0, 20),
                ],
            )
        )
        return path

    def testReadSummary(self, tmp_path):
        rows = read_summary(self.writeSummary(tmp_path / "summary.csv"))
        self.assertEqual([r.label for r in rows], ["ARBK(50, 50)", "CME-RK"])
        self.assertEqual(rows[0].mean_it, 1135.2)
        self.assertEqual((rows[1].trials, rows[1].failures), (20, 20))

    @pytest.mark.parametrize("output", ["text", None])
    def testMain(self, tmp_path, capsys, output):
        """one section per summary file, as text or HTML"""
        path = str(self.writeSummary(tmp_path / "summary.csv"))
        self.assertEqual(report.main([path], output), 0)
        out = capsys.readouterr().out
        if output == "text":
            assert out.startswith(f"{path}:\n  Methods")
            self.assertIn("  CME-RK       | 9.00e-01 | > 100000", out)
        else:
            assert out.startswith("<ul>\n<li>")
            self.assertIn(f"<summary>{path}</summary>", out)
            assert out.rstrip().endswith("</ul>")
