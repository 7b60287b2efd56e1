"""Shared construction and subprocess helpers for the test suite."""

from __future__ import annotations

import re
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np

from probelight import ColorSpace, RasterImage


def gray_image(
    value: float,
    width: int = 4,
    height: int = 4,
    channels: int = 3,
    space: ColorSpace = ColorSpace.LDR_SRGB,
) -> RasterImage:
    data = np.full((height, width, channels), value, dtype=np.float32)
    return RasterImage(data, space)


def rand_ldr(rng: np.random.Generator, width: int, height: int, channels: int = 3) -> RasterImage:
    data = rng.random((height, width, channels), dtype=np.float32)
    return RasterImage(data, ColorSpace.LDR_SRGB)


def run_cli(*argv: str, cwd=None) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "probelight", *argv],
        capture_output=True,
        text=True,
        cwd=cwd,
        timeout=300,
    )


@contextmanager
def mock_serve(*argv: str):
    """Run `probelight mock-serve` in a subprocess; yields the endpoint URL."""
    proc = subprocess.Popen(
        [sys.executable, "-m", "probelight", "mock-serve", "--port", "0", *argv],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        line = proc.stdout.readline()
        match = re.search(r"listening on (http://\S+)", line)
        if not match:
            err = proc.stderr.read() if proc.poll() is not None else ""
            raise RuntimeError(f"mock-serve did not announce a port: {line!r} {err}")
        url = match.group(1)
        deadline = time.monotonic() + 10.0
        from probelight.backend import check_health

        while not check_health(url, timeout=1.0):
            if time.monotonic() > deadline:
                raise RuntimeError("mock-serve never became healthy")
            time.sleep(0.05)
        yield url
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
