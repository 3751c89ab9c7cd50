"""Newline-delimited JSON bridge for live teleoperation.

One client at a time over a local TCP socket. Server emits
{"type":"telemetry",...} per tick and {"type":"phase",...} when a sensor's
provisional phase changes; accepts {"type":"jog"|"stop"|"reopen"|
"set_threshold",...}. Malformed commands get {"type":"error",...} and the
stream continues.
"""

import json
import queue
import socket
import threading
import time

from .control import CommandRejected, GripController
from .scenario import Scenario


class Bridge:
    def __init__(self, scenario: Scenario, host="127.0.0.1", port=7645,
                 speed: float = 1.0, max_seconds: float | None = None):
        self.scenario = scenario
        self.host = host
        self.port = port
        self.speed = speed
        self.max_seconds = max_seconds
        self._stop = threading.Event()
        self.bound_port = None

    def stop(self):
        self._stop.set()

    def serve_forever(self):
        """Accept one client, run the sim loop, exit when the client leaves."""
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((self.host, self.port))
        self.bound_port = srv.getsockname()[1]
        srv.listen(1)
        srv.settimeout(0.2)
        try:
            while not self._stop.is_set():
                try:
                    conn, _ = srv.accept()
                except socket.timeout:
                    continue
                with conn:
                    self._serve_client(conn)
                break
        finally:
            srv.close()

    def _serve_client(self, conn):
        inbox = queue.Queue()
        alive = threading.Event()
        alive.set()

        def reader():
            buf = b""
            conn.settimeout(0.2)
            while alive.is_set():
                try:
                    data = conn.recv(4096)
                except socket.timeout:
                    continue
                except OSError:
                    break
                if not data:
                    break
                buf += data
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if line.strip():
                        inbox.put(line)
            alive.clear()

        rt = threading.Thread(target=reader, daemon=True)
        rt.start()

        ctl = GripController(self.scenario)
        period = (1.0 / self.scenario.sample_rate_hz) / max(self.speed, 1e-9)
        started = time.monotonic()
        next_tick = started
        prev_phases = None
        try:
            while alive.is_set() and not self._stop.is_set() and not ctl.done:
                if self.max_seconds is not None and time.monotonic() - started > self.max_seconds:
                    break
                cmd = None
                try:
                    line = inbox.get_nowait()
                except queue.Empty:
                    line = None
                if line is not None:
                    try:
                        cmd = json.loads(line)
                        if not isinstance(cmd, dict):
                            raise ValueError("command must be a JSON object")
                    except ValueError as exc:
                        self._send(conn, {"type": "error", "message": f"bad command: {exc}"})
                        cmd = None
                try:
                    frame = ctl.tick(cmd)
                except CommandRejected as exc:
                    self._send(conn, {"type": "error", "message": str(exc)})
                    frame = ctl.tick()
                payload = {"type": "telemetry", **frame.to_dict()}
                if not self._send(conn, payload):
                    break
                if frame.phases != prev_phases:
                    for i, ph in enumerate(frame.phases):
                        if prev_phases is None or prev_phases[i] != ph:
                            self._send(
                                conn,
                                {"type": "phase", "sensor": i + 1, "phase": ph, "t": frame.t},
                            )
                    prev_phases = frame.phases
                next_tick += period
                delay = next_tick - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
        finally:
            alive.clear()

    @staticmethod
    def _send(conn, obj) -> bool:
        try:
            conn.sendall((json.dumps(obj) + "\n").encode("utf-8"))
            return True
        except OSError:
            return False
