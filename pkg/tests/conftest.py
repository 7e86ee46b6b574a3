import json
from pathlib import Path

import pytest

from flowviz.engine import EngineConfig
from flowviz.service import FlowvizService
from flowviz.store import FileStore, MemoryStore

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(relpath: str) -> dict:
    return json.loads((FIXTURES / relpath).read_text(encoding="utf-8"))


def valid_contract_paths():
    return sorted((FIXTURES / "contracts" / "valid").glob("*.json"))


def invalid_contract_paths():
    return sorted((FIXTURES / "contracts" / "invalid").glob("*.json"))


@pytest.fixture
def mem_service(tmp_path):
    config = EngineConfig(data_dir=str(tmp_path / "data"), sched_tick_ms=50)
    return FlowvizService(MemoryStore(), config)


@pytest.fixture
def file_service(tmp_path):
    config = EngineConfig(data_dir=str(tmp_path / "data"), sched_tick_ms=50)
    return FlowvizService(FileStore(config.data_dir), config)


@pytest.fixture
def live_server(tmp_path_factory):
    """A real uvicorn server in a background thread, for CLI and e2e tests."""
    import socket
    import threading
    import time

    import httpx
    import uvicorn

    from flowviz.server import ServerConfig, create_app

    data_dir = tmp_path_factory.mktemp("server-data")
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    engine_config = EngineConfig(data_dir=str(data_dir), sched_tick_ms=50)
    service = FlowvizService(FileStore(engine_config.data_dir), engine_config)
    app = create_app(service, ServerConfig(port=port, engine=engine_config))
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{port}"
    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        try:
            if httpx.get(url + "/api/health", timeout=1.0).status_code == 200:
                break
        except httpx.HTTPError:
            time.sleep(0.05)
    else:
        raise RuntimeError("live server did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=10)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance criterion verdicts where output capture cannot
    swallow them, one line per criterion."""
    try:
        from test_acceptance import ACCEPTANCE_RESULTS
    except ImportError:
        return
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture
def registry_with_fixtures(file_service):
    for path in valid_contract_paths():
        file_service.registry.register_contract(path.read_text(encoding="utf-8"))
    return file_service
