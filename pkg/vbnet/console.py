from typing import Dict, List

from rich import print
from rich.panel import Panel
from rich.table import Table

from . import __version__

OK_STYLE = "#62E883"
FAIL_STYLE = "red"
VALUE_STYLE = "#7CD9FF"


def _fmt(value, spec=".3e"):
    if value is None:
        return "-"
    if isinstance(value, float):
        return format(value, spec)
    return str(value)


def print_run_info(title: str, **kwargs):
    """
    Prints the settings a command runs with.
    """
    table = Table(title="", box=None, width=61)
    table.add_column("", justify='left', width=14)
    table.add_column("", justify='left')
    for key, value in kwargs.items():
        if value is not None:
            table.add_row(key, str(value), style=VALUE_STYLE)
    print(Panel(table, title=f"vbnet (v{__version__}) {title}", expand=False))


def print_unit_table(units: List[Dict], methods: List[str]):
    table = Table(title="test RMSE / R²")
    table.add_column("unit")
    for method in methods:
        table.add_column(method, justify='right')
    for unit in units:
        cells = [
            f"{_fmt(unit['rmse'].get(m))} / {_fmt(unit['r2'].get(m), '.4f')}" for m in methods
        ]
        table.add_row(unit["name"], *cells)
    print(table)

    phys = Table(title="identified parameters")
    for col in ("unit", "C_f (J)", "oracle C_f", "slope", "1/R", "γ"):
        phys.add_column(col, justify='right')
    for unit in units:
        phys.add_row(
            unit["name"],
            _fmt(unit.get("C_f_hat")),
            _fmt(unit.get("C_f_oracle")),
            _fmt(unit.get("slope"), ".4f"),
            _fmt(unit.get("slope_oracle"), ".4f"),
            _fmt(unit.get("gamma"), ".4f"),
        )
    print(phys)


def print_cold_start_table(rows: List[Dict]):
    methods = list(dict.fromkeys(row["method"] for row in rows))
    alphas = sorted({row["alpha"] for row in rows})
    lookup = {(row["method"], row["alpha"]): row["rmse"] for row in rows}
    table = Table(title="new-unit test RMSE")
    table.add_column("α", justify='right')
    for method in methods:
        table.add_column(method, justify='right')
    for alpha in alphas:
        table.add_row(f"{alpha:.0%}", *(_fmt(lookup.get((m, alpha))) for m in methods))
    print(table)


def print_checks(checks: Dict[str, bool]):
    if not checks:
        return
    table = Table(title="", box=None)
    table.add_column("")
    table.add_column("", justify='left')
    for name, passed in checks.items():
        table.add_row(
            name, "held" if passed else "did not hold", style=OK_STYLE if passed else FAIL_STYLE
        )
    print(Panel(table, title="pattern checks", expand=False))


def print_report(report: Dict):
    meta = report.get("meta", {})
    print_run_info(
        f"case {report.get('case', '?')} report",
        seed=meta.get("seed"),
        **{"config hash": meta.get("config_hash")},
    )
    if report.get("units"):
        methods = list(report["units"][0]["rmse"])
        print_unit_table(report["units"], methods)
    if report.get("table"):
        print_cold_start_table(report["table"])
    print_checks(report.get("checks", {}))
