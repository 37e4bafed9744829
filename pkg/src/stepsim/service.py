"""Live control service: N simulated axes behind a WebSocket protocol.

Endpoints:

* ``GET /healthz`` - axis count, uptime and time factor;
* ``WS  /ws/v1``   - one JSON document per WebSocket text message.

Client -> server commands::

    {"id": <token>, "verb": "straight_move" | "exercise" | "home" |
     "configure" | "stop" | "estop_all", "axis_id": <int>, ...params}

Server -> client messages::

    {"type": "ack",       "id": ...}                  command queued
    {"type": "result",    "id": ..., "status": {...}} command finished
    {"type": "error",     "id": ..., "error": "..."}
    {"type": "telemetry", "t": ..., "axis_id": ..., "commanded_position": ...,
     "actual_position": ..., "velocity": ..., "move_complete": ...,
     "fault": ..., "homed": ...}

Each axis runs on its own thread with a serialized command queue; stops
and the emergency stop bypass the queue through the controller's
preempt hook.  Telemetry is emitted every 20 ms of simulation time
(50 Hz).  With ``time_factor`` > 0 the simulation is paced to
``time_factor`` sim-seconds per wall second; with 0 commands run to
completion unpaced and idle axes keep their clock frozen between
commands.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .axis import AxisController, ExerciseSpec
from .errors import StepSimError
from .files import PACKAGED_DATA_DIR, homing_from_params, load_axes_config, load_motor_spec
from .plant import params_from_spec
from .profiles import MoveConstraints

TELEMETRY_PERIOD = 0.02     # s of simulation time between frames
SERVICE_DT = 5e-5           # coarser grid than desk runs: 4 axes must keep real time


@dataclass(frozen=True)
class TelemetryFrame:
    """One published axis sample; field names are the wire schema."""

    t: float
    axis_id: int
    commanded_position: int
    actual_position: int
    velocity: float
    move_complete: bool
    fault: str | None
    homed: bool


class AxisHost(threading.Thread):
    """Owns one controller; executes queued commands and emits telemetry."""

    def __init__(self, axis_id: int, controller: AxisController, time_factor: float, hub: "Hub"):
        super().__init__(daemon=True, name=f"axis-{axis_id}")
        self.axis_id = axis_id
        self.controller = controller
        self.time_factor = time_factor
        self.hub = hub
        self.commands: queue.Queue[dict] = queue.Queue()
        self.last_frame: TelemetryFrame | None = None
        self._stop_flag: str | None = None
        self._executing = False
        self._shutdown = threading.Event()
        self._tick_count = 0
        self._emit_every = max(1, round(TELEMETRY_PERIOD / controller.TICK))
        self._last_emit_t = -1.0
        self._pace_wall = 0.0
        self._pace_sim = 0.0
        controller.preempt = self._preempt
        controller.on_tick = self._on_tick

    # -- called from the asyncio side -----------------------------------

    def submit(self, cmd: dict) -> None:
        self.commands.put(cmd)

    def request_stop(self, kind: str) -> None:
        self._stop_flag = kind

    def is_stopped(self) -> bool:
        frame = self.last_frame
        return (
            not self._executing
            and self._stop_flag is None
            and frame is not None
            and frame.fault == "stopped"
        )

    def shutdown(self) -> None:
        self._shutdown.set()

    # -- controller hooks (axis thread) ----------------------------------

    def _preempt(self) -> str | None:
        if not self._executing:
            return None
        flag = self._stop_flag
        self._stop_flag = None
        return flag

    def _on_tick(self) -> None:
        self._tick_count += 1
        if self._tick_count % self._emit_every == 0:
            self._emit()
            self._pace()

    def _pace(self) -> None:
        if self.time_factor <= 0:
            return
        self._pace_sim += TELEMETRY_PERIOD
        target = self._pace_wall + self._pace_sim / self.time_factor
        now = time.monotonic()
        if target > now:
            time.sleep(target - now)
        elif now - target > 1.0:
            # fell badly behind; resynchronize rather than sprint
            self._pace_wall = now
            self._pace_sim = 0.0

    def _emit(self, ensure_fresh_t: bool = False) -> None:
        ctl = self.controller
        if ensure_fresh_t and ctl.run.t <= self._last_emit_t:
            ctl.run.advance_to_index(ctl.run.i + ctl._tick_n)
        t = ctl.run.t
        if t <= self._last_emit_t:
            return
        self._last_emit_t = t
        status = ctl.status()
        frame = TelemetryFrame(
            t=t,
            axis_id=self.axis_id,
            commanded_position=status.commanded_position,
            actual_position=status.actual_position,
            velocity=status.velocity,
            move_complete=status.move_complete,
            fault=status.fault.value if status.fault else None,
            homed=status.homed,
        )
        self.last_frame = frame
        self.hub.publish_telemetry(frame)

    # -- command execution (axis thread) ----------------------------------

    def run(self) -> None:
        self._pace_wall = time.monotonic()
        self.controller.run.advance_to_index(self.controller.run.i + 1)
        self._emit()
        while not self._shutdown.is_set():
            if self._stop_flag is not None:
                kind = self._stop_flag
                self._stop_flag = None
                self.controller.stop(kind)
                self._emit(ensure_fresh_t=True)
            try:
                cmd = self.commands.get(timeout=0.02)
            except queue.Empty:
                if self.time_factor > 0:
                    for _ in range(self._emit_every):
                        self.controller._tick()
                continue
            self._execute(cmd)

    def _execute(self, cmd: dict) -> None:
        self._executing = True
        try:
            status = self._dispatch(cmd)
            self._emit(ensure_fresh_t=True)
            self.hub.publish_reply(
                cmd["session"],
                {
                    "type": "result",
                    "id": cmd.get("id"),
                    "axis_id": self.axis_id,
                    "status": _status_dict(status),
                },
            )
        except StepSimError as exc:
            self.hub.publish_reply(
                cmd["session"],
                {"type": "error", "id": cmd.get("id"), "error": str(exc)},
            )
        finally:
            self._executing = False

    def _dispatch(self, cmd: dict):
        ctl = self.controller
        verb = cmd["verb"]
        params = cmd["params"]
        if verb == "straight_move":
            constraints = _constraints_from_params(params.get("constraints"))
            status, _ = ctl.execute_straight_move(
                target=int(params["target"]),
                mode=params.get("mode", "relative"),
                constraints=constraints,
                profile_kind=params.get("profile", "trapezoid"),
            )
            return status
        if verb == "exercise":
            spec = ExerciseSpec(
                n_steps=int(params["n_steps"]),
                cycle_duration=float(params["cycle_duration"]),
                hold_duration=float(params["hold_duration"]),
                repetitions=int(params.get("repetitions", 1)),
            )
            status, _ = ctl.run_exercise_cycle(spec)
            return status
        if verb == "home":
            return ctl.find_reference(homing_from_params({
                k: str(v) for k, v in params.items()
            }))
        if verb == "stop":
            kind = params.get("kind", "decelerating")
            return ctl.stop(kind)
        if verb == "configure":
            return self._configure(params)
        raise StepSimError(f"unknown verb '{verb}'")

    def _configure(self, params: dict):
        ctl = self.controller
        changes = {}
        if "loop_mode" in params:
            changes["loop_mode"] = params["loop_mode"]
        if "following_error_limit" in params:
            changes["following_error_limit"] = int(params["following_error_limit"])
        if "default_constraints" in params:
            changes["default_constraints"] = _constraints_from_params(
                params["default_constraints"]
            )
        if changes:
            ctl.cfg = dataclasses.replace(ctl.cfg, **changes)
        return ctl.status()


def _constraints_from_params(raw: dict | None) -> MoveConstraints | None:
    if raw is None:
        return None
    return MoveConstraints(
        v_max=float(raw["v_max"]),
        a_max=float(raw["a_max"]),
        d_max=float(raw["d_max"]),
        j_max=float(raw["j_max"]) if raw.get("j_max") is not None else None,
    )


def _status_dict(status) -> dict:
    return {
        "commanded_position": status.commanded_position,
        "actual_position": status.actual_position,
        "velocity": status.velocity,
        "move_complete": status.move_complete,
        "fault": status.fault.value if status.fault else None,
        "homed": status.homed,
    }


class Hub:
    """Fans telemetry out to every session and replies to their origin."""

    def __init__(self):
        self.loop: asyncio.AbstractEventLoop | None = None
        self.sessions: dict[int, asyncio.Queue] = {}
        self._next_session = 0

    def attach(self, loop: asyncio.AbstractEventLoop) -> None:
        self.loop = loop

    def open_session(self) -> tuple[int, asyncio.Queue]:
        sid = self._next_session
        self._next_session += 1
        q: asyncio.Queue = asyncio.Queue()
        self.sessions[sid] = q
        return sid, q

    def close_session(self, sid: int) -> None:
        self.sessions.pop(sid, None)

    def publish_telemetry(self, frame: TelemetryFrame) -> None:
        payload = json.dumps({"type": "telemetry", **dataclasses.asdict(frame)})
        self._post(lambda: [q.put_nowait(payload) for q in self.sessions.values()])

    def publish_reply(self, sid: int, message: dict) -> None:
        payload = json.dumps(message)

        def deliver():
            q = self.sessions.get(sid)
            if q is not None:
                q.put_nowait(payload)

        self._post(deliver)

    def _post(self, fn) -> None:
        if self.loop is None or self.loop.is_closed():
            return
        try:
            self.loop.call_soon_threadsafe(fn)
        except RuntimeError:
            pass    # loop shut down mid-publish


def create_app(
    config: str | Path | None = None,
    time_factor: float = 1.0,
    dt: float = SERVICE_DT,
) -> FastAPI:
    """Build the service around an axis configuration file."""
    from contextlib import asynccontextmanager

    config_path = Path(config) if config else PACKAGED_DATA_DIR / "axes4.cfg"
    entries = load_axes_config(config_path)
    hub = Hub()
    hosts: dict[int, AxisHost] = {}
    started_at = time.monotonic()

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        hub.attach(asyncio.get_running_loop())
        for entry in entries:
            spec = load_motor_spec(config_path.parent / entry.motor_file)
            controller = AxisController(
                entry.config,
                spec,
                params=params_from_spec(spec),
                dt=dt,
                record=False,
            )
            host = AxisHost(entry.config.axis_id, controller, time_factor, hub)
            hosts[entry.config.axis_id] = host
            host.start()
        yield
        for host in hosts.values():
            host.shutdown()

    app = FastAPI(lifespan=lifespan)

    @app.get("/healthz")
    async def healthz():
        return {
            "axes": len(entries),
            "uptime_s": time.monotonic() - started_at,
            "time_factor": time_factor,
        }

    async def _estop_all(sid: int, msg_id) -> None:
        for host in hosts.values():
            host.request_stop("kill")
        deadline = time.monotonic() + 10.0
        while time.monotonic() < deadline:
            if all(h.is_stopped() for h in hosts.values()):
                hub.publish_reply(
                    sid, {"type": "result", "id": msg_id, "estopped": True}
                )
                return
            await asyncio.sleep(0.005)
        hub.publish_reply(
            sid,
            {"type": "error", "id": msg_id, "error": "estop acknowledgement timed out"},
        )

    @app.websocket("/ws/v1")
    async def ws_v1(ws: WebSocket):
        await ws.accept()
        sid, outbox = hub.open_session()

        async def writer():
            while True:
                payload = await outbox.get()
                await ws.send_text(payload)

        writer_task = asyncio.create_task(writer())
        await ws.send_text(
            json.dumps({"type": "hello", "axes": sorted(hosts.keys())})
        )
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(
                        json.dumps(
                            {"type": "error", "id": None, "error": "malformed JSON"}
                        )
                    )
                    continue
                msg_id = msg.get("id")
                verb = msg.get("verb")
                if verb == "estop_all":
                    asyncio.create_task(_estop_all(sid, msg_id))
                    continue
                axis_id = msg.get("axis_id")
                if axis_id not in hosts:
                    await ws.send_text(
                        json.dumps(
                            {
                                "type": "error",
                                "id": msg_id,
                                "error": f"unknown axis_id {axis_id}",
                            }
                        )
                    )
                    continue
                host = hosts[axis_id]
                if verb == "stop":
                    # bypasses the queue: takes effect at the next tick
                    kind = msg.get("kind", msg.get("params", {}).get("kind", "decelerating"))
                    if kind not in ("decelerating", "kill"):
                        await ws.send_text(
                            json.dumps(
                                {
                                    "type": "error",
                                    "id": msg_id,
                                    "error": f"unknown stop kind '{kind}'",
                                }
                            )
                        )
                        continue
                    host.request_stop(kind)
                    await ws.send_text(json.dumps({"type": "ack", "id": msg_id}))
                    continue
                if verb not in ("straight_move", "exercise", "home", "configure"):
                    await ws.send_text(
                        json.dumps(
                            {
                                "type": "error",
                                "id": msg_id,
                                "error": f"unknown verb '{verb}'",
                            }
                        )
                    )
                    continue
                params = {
                    k: v
                    for k, v in msg.items()
                    if k not in ("id", "verb", "axis_id", "params")
                }
                params.update(msg.get("params") or {})
                host.submit(
                    {"id": msg_id, "verb": verb, "params": params, "session": sid}
                )
                await ws.send_text(json.dumps({"type": "ack", "id": msg_id}))
        except WebSocketDisconnect:
            pass
        finally:
            writer_task.cancel()
            hub.close_session(sid)

    return app


def serve(
    host: str = "127.0.0.1",
    port: int = 8787,
    config: str | None = None,
    time_factor: float = 1.0,
) -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    app = create_app(config=config, time_factor=time_factor)
    uvicorn.run(app, host=host, port=port, log_level="warning")
