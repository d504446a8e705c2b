import csv
import datetime as dt
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np
import pytest

from cascadenet.market_data import PriceSeries
from cascadenet.network import ExposureNetwork


def make_dates(n: int, start: dt.date = dt.date(2020, 1, 6)) -> list[dt.date]:
    return [start + dt.timedelta(days=i) for i in range(n)]


def random_walk_panel(seed: int, n_assets: int = 4, n_days: int = 300,
                      missing_frac: float = 0.0) -> list[PriceSeries]:
    """Geometric random walks, optionally with missing cells punched in."""
    rng = np.random.default_rng(seed)
    dates = make_dates(n_days)
    panel = []
    for j in range(n_assets):
        base = rng.uniform(20.0, 200.0)
        steps = rng.normal(0.0, 0.02, size=n_days - 1)
        prices = base * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))
        if missing_frac > 0.0:
            holes = rng.random(n_days) < missing_frac
            if holes.sum() > n_days - 2:   # keep the series usable
                holes[:2] = False
            prices = prices.copy()
            prices[holes] = np.nan
        panel.append(PriceSeries(f"T{j:02d}", list(dates), prices))
    return panel


def write_panel_csv(path, panel: list[PriceSeries]) -> None:
    dates = panel[0].dates
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date"] + [s.asset_id for s in panel])
        for t, d in enumerate(dates):
            row = [d.isoformat()]
            for s in panel:
                v = s.prices[t]
                row.append("" if np.isnan(v) else repr(float(v)))
            writer.writerow(row)


def net_from(weights, prices=None, theta: float = 0.1, ids=None) -> ExposureNetwork:
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    if ids is None:
        ids = [f"T{j:02d}" for j in range(n)]
    if prices is None:
        prices = np.ones(n)
    return ExposureNetwork(list(ids), theta, w, np.asarray(prices, dtype=float))


def random_net(seed: int, n_min: int = 2, n_max: int = 8) -> ExposureNetwork:
    """Seeded directed network with mixed edge density and price scales."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    density = rng.uniform(0.2, 0.9)
    weights = rng.uniform(0.0, 30.0, size=(n, n))
    weights[rng.random((n, n)) > density] = 0.0
    np.fill_diagonal(weights, 0.0)
    prices = rng.uniform(10.0, 100.0, size=n)
    return net_from(weights, prices)


#: one "ACCEPTANCE n PASS|FAIL: ..." line per acceptance check, replayed in the
#: terminal summary so the verdicts are visible even when capture is on
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _no_ambient_seed(monkeypatch):
    """Keep a CASCADENET_SEED in the invoking shell from skewing results."""
    monkeypatch.delenv("CASCADENET_SEED", raising=False)


@pytest.fixture
def panel_csv(tmp_path):
    """A clean 4-asset x 300-day price CSV on disk."""
    path = tmp_path / "prices.csv"
    write_panel_csv(path, random_walk_panel(seed=11, n_assets=4, n_days=300))
    return path


# ---------------------------------------------------------------------------
# local quote server for the fetch tests
# ---------------------------------------------------------------------------

class _QuoteHandler(BaseHTTPRequestHandler):
    """Tiny historical-quote endpoint with per-symbol canned behavior."""

    def do_GET(self):
        query = parse_qs(urlparse(self.path).query)
        symbol = query.get("symbol", [""])[0]
        start = dt.date.fromisoformat(query.get("start", ["2024-01-01"])[0])

        if symbol == "MISSING":
            self.send_error(404, "unknown symbol")
            return
        if symbol == "FLAKY":
            self.send_error(500, "synthetic outage")
            return
        if symbol == "RECOVER":
            self.server.recover_hits += 1
            if self.server.recover_hits <= 2:
                self.send_error(500, "still booting")
                return

        n_rows = {"GOOD": 5, "GOOD2": 3, "RECOVER": 5}.get(symbol, 5)
        offset = 2 if symbol == "GOOD2" else 0
        lines = ["date,low"]
        for i in range(n_rows):
            day = start + dt.timedelta(days=offset + i)
            lines.append(f"{day.isoformat()},{100 + offset + i}.5")
        body = "\n".join(lines).encode()
        self.send_response(200)
        self.send_header("Content-Type", "text/csv")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt, *args):   # keep pytest output clean
        pass


@pytest.fixture
def quote_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _QuoteHandler)
    server.recover_hits = 0
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}/quotes"
    finally:
        server.shutdown()
        thread.join()
