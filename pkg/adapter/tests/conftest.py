import threading
import time

import pytest
import uvicorn

from probelight_adapter import StubPipeline, build_app


@pytest.fixture(scope="session")
def pipeline() -> StubPipeline:
    pipe = StubPipeline()
    pipe.load()
    return pipe


@pytest.fixture(scope="session")
def adapter_url(pipeline):
    """Real HTTP server on a free port, torn down after the session."""
    app = build_app(pipeline)
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("adapter server did not start within 10s")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5.0)
