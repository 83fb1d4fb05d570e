"""Position-sharing service: one simulation thread, many ordered readers.

The engine thread owns all mutable state.  Clients talk newline-delimited
JSON over plain TCP; a browser-compatible WebSocket endpoint carries the
identical message text (one message per socket frame) for the operator
console, plus static console assets on the same HTTP port.

Fan-out preserves per-client order.  A slow client overflows its private
queue and is dropped; a client sending a malformed line is disconnected by
itself; the simulation never stops for either.
"""

import queue
import socket
import socketserver
import threading
import time
from pathlib import Path

from .protocol import (
    ControlMessage,
    MalformedMessage,
    NavGoal,
    decode_message,
    encode_message,
)
from .scene import Scenario
from .sim_loop import NavParams, SimEngine


class BindError(Exception):
    """Requested address cannot be bound."""


class BroadcastHub:
    """Per-subscriber queues; publish never blocks the simulation."""

    def __init__(self, queue_size: int = 1024):
        self.queue_size = queue_size
        self._subscribers: dict[int, queue.Queue] = {}
        self._lock = threading.Lock()
        self._next = 0

    def subscribe(self) -> tuple[int, queue.Queue]:
        q = queue.Queue(maxsize=self.queue_size)
        with self._lock:
            sid = self._next
            self._next += 1
            self._subscribers[sid] = q
        return sid, q

    def unsubscribe(self, sid: int) -> None:
        with self._lock:
            self._subscribers.pop(sid, None)

    def publish(self, lines: list[str]) -> None:
        with self._lock:
            subs = list(self._subscribers.items())
        for sid, q in subs:
            try:
                for line in lines:
                    q.put_nowait(line)
            except queue.Full:
                # slow client: poison and forget; its writer will bail out
                self.unsubscribe(sid)
                try:
                    q.put_nowait(None)
                except queue.Full:
                    pass


class EngineThread(threading.Thread):
    """Paces the engine at the scenario frame rate and fans messages out."""

    def __init__(self, engine: SimEngine, hub: BroadcastHub,
                 realtime: bool = True):
        super().__init__(daemon=True, name="sim-engine")
        self.engine = engine
        self.hub = hub
        self.realtime = realtime
        self.inbox: queue.Queue = queue.Queue()
        self._stop = threading.Event()

    def stop(self) -> None:
        self._stop.set()

    def run(self) -> None:
        period = self.engine.dt
        next_tick = time.monotonic()
        while not self._stop.is_set():
            goal = None
            while True:
                try:
                    msg = self.inbox.get_nowait()
                except queue.Empty:
                    break
                if isinstance(msg, NavGoal):
                    goal = msg  # last writer wins within the tick
                elif isinstance(msg, ControlMessage):
                    self.engine.apply_control(msg)
            if goal is not None:
                self.engine.apply_goal(goal)
            if not self.engine.paused:
                messages = self.engine.tick()
                self.hub.publish([encode_message(m) for m in messages])
            if self.realtime:
                next_tick += period
                delay = next_tick - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_tick = time.monotonic()  # overran; slip, don't spiral
            if self.engine.tick_index * self.engine.dt >= self.engine.scenario.duration_s:
                if self.realtime:
                    continue  # serve keeps running past duration
                break


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server: CoopServer = self.server.coop  # type: ignore[attr-defined]
        sid, q = server.hub.subscribe()
        self.wfile.write(encode_message(server.engine.snapshot()).encode("utf-8"))
        writer = threading.Thread(
            target=self._pump, args=(q,), daemon=True,
        )
        writer.start()
        try:
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="strict").strip()
                if not line:
                    continue
                msg = decode_message(line)  # MalformedMessage disconnects us
                server.engine_thread.inbox.put(msg)
        except (MalformedMessage, UnicodeDecodeError, OSError):
            pass
        finally:
            server.hub.unsubscribe(sid)
            q.put(None)
            try:
                self.connection.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass

    def _pump(self, q: queue.Queue) -> None:
        while True:
            line = q.get()
            if line is None:
                return
            try:
                self.wfile.write(line.encode("utf-8"))
            except OSError:
                return


class _TcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class CoopServer:
    """TCP line-protocol server wired to one authoritative engine."""

    def __init__(self, scenario: Scenario, host: str = "127.0.0.1",
                 port: int = 0, seed: int | None = None, debug: bool = False,
                 realtime: bool = True, nav_params: NavParams = NavParams()):
        self.engine = SimEngine(scenario, seed=seed, debug=debug,
                                nav_params=nav_params)
        self.hub = BroadcastHub()
        self.engine_thread = EngineThread(self.engine, self.hub, realtime)
        try:
            self._tcp = _TcpServer((host, port), _LineHandler)
        except OSError as e:
            raise BindError(f"cannot bind {host}:{port}: {e}") from e
        self._tcp.coop = self  # type: ignore[attr-defined]
        self._tcp_thread = threading.Thread(
            target=self._tcp.serve_forever, daemon=True, name="tcp-accept",
        )

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    def start(self) -> None:
        self.engine_thread.start()
        self._tcp_thread.start()

    def stop(self) -> None:
        self.engine_thread.stop()
        self._tcp.shutdown()
        self._tcp.server_close()


# ----------------------------------------------------------- console bridge

_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>vlpsim console</title></head>
<body><p>Console assets not built. Run <code>npm install &amp;&amp; npm run build</code>
in <code>frontend/</code>, then restart the server.</p></body></html>
"""


def console_dist_dir() -> Path | None:
    root = Path(__file__).resolve().parents[2] / "frontend"
    dist = root / "dist"
    if (dist / "index.html").exists():
        return dist
    return None


def build_console_app(server: CoopServer):
    """FastAPI app with the WebSocket bridge and static console assets."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    from fastapi.responses import FileResponse, HTMLResponse
    from fastapi.staticfiles import StaticFiles
    from starlette.concurrency import run_in_threadpool

    app = FastAPI()

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        sid, q = server.hub.subscribe()
        await ws.send_text(encode_message(server.engine.snapshot()).rstrip("\n"))

        async def pump():
            while True:
                line = await run_in_threadpool(q.get)
                if line is None:
                    return
                await ws.send_text(line.rstrip("\n"))

        import asyncio

        sender = asyncio.create_task(pump())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    server.engine_thread.inbox.put(decode_message(text))
                except MalformedMessage:
                    break
        except WebSocketDisconnect:
            pass
        finally:
            server.hub.unsubscribe(sid)
            q.put(None)
            sender.cancel()

    dist = console_dist_dir()
    if dist is not None:
        app.mount("/assets", StaticFiles(directory=dist), name="assets")

        @app.get("/")
        def index():
            return FileResponse(dist / "index.html")
    else:
        @app.get("/")
        def index_fallback():
            return HTMLResponse(_FALLBACK_PAGE)

    return app


def serve_forever(scenario: Scenario, host: str, port: int,
                  headless: bool = False, seed: int | None = None,
                  debug: bool = False, http_port: int | None = None) -> None:
    """Blocking entry point for the CLI."""
    server = CoopServer(scenario, host=host, port=port, seed=seed, debug=debug)
    server.start()
    bound_host, bound_port = server.address
    print(f"tcp line protocol on {bound_host}:{bound_port}", flush=True)
    try:
        if headless:
            while True:
                time.sleep(3600)
        else:
            import uvicorn

            app = build_console_app(server)
            hp = http_port if http_port is not None else bound_port + 1
            print(f"console + websocket on http://{bound_host}:{hp}", flush=True)
            uvicorn.run(app, host=bound_host, port=hp, log_level="warning")
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
