"""Live console bridge: the engine tick loop in one thread, WebSocket I/O in
another, bridged by bounded queues that drop the oldest pose frames under
backpressure (poses are idempotent state, not events).

One console client at a time. The server opens with a text hello carrying
the protocol version; everything after is binary wire frames. A frame that
fails to decode closes that connection with reason "BadFrame" while the
engine keeps running and accepts the next client.
"""

import logging
import socket
import threading
import time
from collections import deque

from websockets.exceptions import ConnectionClosed
from websockets.sync.server import serve

from . import protocol as proto
from .config import SessionConfig
from .session import SessionEngine
from .trajectory import write_log

log = logging.getLogger("teleus.serve")

HELLO = "teleus-proto 1"
CLOSE_BUSY = 4001
CLOSE_BAD_FRAME = 4002


class ConsoleBridge:
    def __init__(self, config: SessionConfig, host: str = "127.0.0.1", port: int = 8765,
                 out_path: str = "live-session.log"):
        self._config = config
        self._out_path = out_path
        self._inbound: deque = deque(maxlen=1024)
        self._outbound: deque = deque(maxlen=256)
        self._conn = None
        self._conn_lock = threading.Lock()
        self._stop = threading.Event()
        self._start_requested = threading.Event()
        self._stop_requested = threading.Event()

        # probe the port first so EADDRINUSE surfaces as a clean exit code
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
        probe.listen()
        self.port = probe.getsockname()[1]
        self._server = serve(self._handle_client, sock=probe)
        self._engine_thread = threading.Thread(target=self._engine_loop, daemon=True)
        self._writer_thread = threading.Thread(target=self._writer_loop, daemon=True)

    # ------------------------------------------------------------------
    # socket side
    # ------------------------------------------------------------------

    def _handle_client(self, conn) -> None:
        with self._conn_lock:
            if self._conn is not None:
                conn.close(CLOSE_BUSY, "Busy")
                return
            self._conn = conn
        log.info("console connected")
        try:
            conn.send(HELLO)
            while True:
                raw = conn.recv()
                if isinstance(raw, str):
                    conn.close(CLOSE_BAD_FRAME, "BadFrame")
                    break
                try:
                    msg = proto.decode(raw)
                except proto.ProtocolError as e:
                    log.warning("bad frame from console: %s", e)
                    conn.close(CLOSE_BAD_FRAME, "BadFrame")
                    break
                self._dispatch(msg)
        except ConnectionClosed:
            pass
        finally:
            with self._conn_lock:
                if self._conn is conn:
                    self._conn = None
            log.info("console disconnected")

    def _dispatch(self, msg: proto.WireMessage) -> None:
        if msg.channel == proto.ChannelId.CONTROL:
            cmd = msg.payload.text.split()[0].upper() if msg.payload.text.split() else ""
            if cmd == "START":
                self._start_requested.set()
                return
            if cmd == "STOP":
                self._stop_requested.set()
                return
        self._inbound.append(msg)

    def _writer_loop(self) -> None:
        while not self._stop.is_set():
            if not self._outbound:
                time.sleep(0.001)
                continue
            frame = self._outbound.popleft()
            with self._conn_lock:
                conn = self._conn
            if conn is None:
                continue  # no console: drop, poses are idempotent
            try:
                conn.send(frame)
            except (ConnectionClosed, OSError):
                pass

    # ------------------------------------------------------------------
    # engine side
    # ------------------------------------------------------------------

    def _drain_inbound(self, engine: SessionEngine) -> None:
        while self._inbound:
            msg = self._inbound.popleft()
            if msg.channel == proto.ChannelId.EXPERT_POSE:
                engine.set_leader_pose(msg.payload.position, msg.payload.orientation)
            elif msg.channel == proto.ChannelId.CONTROL:
                engine.handle_control(msg.payload.text)

    def _engine_loop(self) -> None:
        while not self._stop.is_set():
            if not self._start_requested.wait(timeout=0.05):
                continue
            self._start_requested.clear()
            self._stop_requested.clear()
            self._run_session()

    def _run_session(self) -> None:
        engine = SessionEngine(self._config, live=True)
        log.info("live session started (%d ticks at %d Hz)", engine.n_ticks, self._config.tick_rate_hz)
        deadline = time.monotonic()
        for i in range(engine.n_ticks):
            if self._stop.is_set() or self._stop_requested.is_set():
                break
            self._drain_inbound(engine)
            engine.tick(i * engine.dt_us)
            for frame in engine.outbox:
                self._outbound.append(frame)
            engine.outbox.clear()
            deadline += engine.dt_s
            lag = deadline - time.monotonic()
            if lag > 0:
                time.sleep(lag)
        write_log(engine.build_log(), self._out_path)
        self._outbound.append(
            proto.encode(
                proto.WireMessage(
                    proto.ChannelId.CONTROL,
                    engine._seq_bridge.take(proto.ChannelId.CONTROL),
                    engine._now_us,
                    proto.TextPayload(f"STATE phase=ended log={self._out_path}"),
                )
            )
        )
        log.info("live session ended, log written to %s", self._out_path)

    # ------------------------------------------------------------------

    def serve_forever(self) -> None:
        self._engine_thread.start()
        self._writer_thread.start()
        log.info("console bridge listening on port %d", self.port)
        self._server.serve_forever()

    def start_background(self) -> None:
        self._engine_thread.start()
        self._writer_thread.start()
        self._server_thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._server_thread.start()

    def shutdown(self) -> None:
        self._stop.set()
        self._stop_requested.set()
        self._server.shutdown()
