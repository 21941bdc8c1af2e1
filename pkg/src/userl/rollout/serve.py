"""Websocket server that lets a human play the user role of live sessions.

One session per task. The agent side is driven by a scripted move list or
a chat-completions policy endpoint; the user side blocks on the connected
console through HumanBridgePort. Messages are line-delimited JSON frames
over the websocket; docs/bridge-protocol.md is the byte-format contract.

A console may drop and rejoin mid-session: the full message log replays,
then live streaming resumes at the pending turn.
"""
from __future__ import annotations

import asyncio
import concurrent.futures
import json
import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from ..envs import EnvConfig, StepChoice, TaskSpec, Verb, reset, step
from ..errors import (
    HumanTimeout,
    MalformedUserReply,
    PolicyEndpointError,
    UserPortFailure,
    UserlError,
    VerbNotAllowed,
)
from ..users.human import HumanBridgePort, normalize_reply
from ..users.parsing import ReplySchema
from .episode import _parse_tool_call
from .metrics import effective_turns, time_weighted_performance
from .policy import HTTPPolicyClient, PolicyEndpoint, agent_system_prompt

GROUND_TRUTH_KEYS = (
    # human-facing oracle panel; never sent to the policy side
    "target_entity", "entity_description", "category",
    "surface", "bottom", "criteria",
    "hidden_rule", "test_case", "expected",
    "vague_task", "missing_details",
    "statement", "initial_argument",
    "question", "gold_answer",
    "scenario", "dimensions",
)


def _ground_truth(task: TaskSpec) -> dict:
    return {key: task.payload[key] for key in GROUND_TRUTH_KEYS
            if key in task.payload}


class SessionChannel:
    """Thread-safe relay between one episode thread and the websocket loop.

    The episode thread posts messages and blocks awaiting replies; the
    asyncio side attaches at most one console at a time and feeds replies
    back through a plain queue.
    """

    def __init__(self, session_id: str, loop: asyncio.AbstractEventLoop):
        self.session_id = session_id
        self.loop = loop
        self.log: list[dict] = []
        self.replies: queue.Queue = queue.Queue()
        self.websocket = None
        self.pending_request: dict | None = None
        self.pending_schema: ReplySchema | None = None
        self.current_turn = 0
        self._seq = 0
        self._lock = threading.Lock()

    # --- episode-thread side ---------------------------------------------
    def post(self, message: dict) -> dict:
        with self._lock:
            self._seq += 1
            message = {**message, "seq": self._seq,
                       "session_id": self.session_id}
            self.log.append(message)
        try:
            future = asyncio.run_coroutine_threadsafe(self._send(message),
                                                      self.loop)
            future.result(timeout=10)
        except (RuntimeError, concurrent.futures.TimeoutError):
            pass  # loop gone or console stuck; the log keeps the message
        return message

    def request_reply(self, request: dict, deadline: float) -> dict:
        self.pending_request = request
        self.post({"type": "reply_request", "turn_index": self.current_turn,
                   **request})
        try:
            fields = self.replies.get(timeout=deadline)
        except queue.Empty:
            raise HumanTimeout(
                f"no human reply within {deadline:.0f}s") from None
        finally:
            self.pending_request = None
            self.pending_schema = None
        return fields

    # --- asyncio side ------------------------------------------------------
    async def _send(self, message: dict) -> None:
        websocket = self.websocket
        if websocket is None:
            return
        try:
            await websocket.send(json.dumps(message, ensure_ascii=False))
        except ConnectionClosed:
            pass  # the log replays on rejoin

    async def attach(self, websocket) -> None:
        self.websocket = websocket
        for message in list(self.log):
            try:
                await websocket.send(json.dumps(message, ensure_ascii=False))
            except ConnectionClosed:
                return

    def detach(self, websocket) -> None:
        if self.websocket is websocket:
            self.websocket = None


@dataclass
class ScriptedAgent:
    """Fixed move list: [{"verb": ..., "content": ...}, ...]."""

    moves: list[dict]

    def next_choice(self, turn_index: int, session, messages) -> StepChoice | None:
        if turn_index > len(self.moves):
            return None
        move = self.moves[turn_index - 1]
        return StepChoice(Verb(move["verb"]), move["content"])


@dataclass
class PolicyAgent:
    """Live chat-completions policy; one format re-prompt, then gives up."""

    client: HTTPPolicyClient
    seed: int = 0

    def next_choice(self, turn_index: int, session, messages) -> StepChoice | None:
        for _attempt in range(2):
            reply = self.client.complete(messages, seed=self.seed + turn_index)
            messages.append(reply.message)
            status, choice, _call_id, problem = _parse_tool_call(reply.message)
            if status == "ok":
                return choice
            messages.append({
                "role": "user",
                "content": f"Your last message could not be used: {problem}. "
                           "Reply again with exactly one interact_with_env "
                           "tool call.",
            })
        return None


@dataclass
class HumanSession:
    task: TaskSpec
    channel: SessionChannel
    status: str = "waiting"  # waiting | live | done
    thread: threading.Thread | None = None


def _drive(session_record: HumanSession, agent, max_turns: int,
           reply_deadline: float) -> None:
    """Runs one episode against the connected human; episode thread body."""
    channel = session_record.channel
    task = session_record.task
    port = _ChannelPort(channel, reply_deadline)
    status = "budget"
    rewards: list[float] = []
    try:
        env_session = reset(task, EnvConfig(max_steps=max_turns), user=port)
        channel.post({
            "type": "session_start",
            "gym": task.gym_kind.value,
            "task_id": task.task_id,
            "ground_truth": _ground_truth(task),
            "initial_observation": env_session.initial_observation,
            "max_turns": max_turns,
        })
        messages = [
            {"role": "system", "content": agent_system_prompt(task.gym_kind)},
            {"role": "user", "content": env_session.initial_observation},
        ]
        for turn_index in range(1, max_turns + 1):
            if env_session.terminated:
                break
            choice = agent.next_choice(turn_index, env_session, messages)
            if choice is None:
                status = "aborted"
                break
            channel.post({"type": "agent_turn", "turn_index": turn_index,
                          "verb": choice.verb.value,
                          "content": choice.content})
            channel.current_turn = turn_index
            try:
                outcome = step(env_session, choice)
            except VerbNotAllowed as exc:
                channel.post({"type": "error", "code": "BadVerb",
                              "message": str(exc)})
                messages.append({"role": "user", "content": str(exc)})
                continue
            rewards.append(outcome.raw_reward)
            messages.append({"role": "user", "content": outcome.observation})
            channel.post({"type": "turn_reward", "turn_index": turn_index,
                          "value": outcome.raw_reward,
                          "observation": outcome.observation,
                          "done": outcome.done})
            if outcome.done:
                status = ("goal" if outcome.info.get("terminal_cause") == "goal"
                          else "budget")
                break
    except HumanTimeout as exc:
        status = "timeout"
        channel.post({"type": "error", "code": "HumanTimeout",
                      "message": str(exc)})
    except (UserPortFailure, MalformedUserReply, PolicyEndpointError) as exc:
        status = "aborted"
        channel.post({"type": "error", "code": "SessionAborted",
                      "message": str(exc)})
    channel.post({
        "type": "session_end",
        "metrics": {
            "reward_sum": sum(rewards),
            "effective_turns": effective_turns(rewards),
            "time_weighted_performance": time_weighted_performance(rewards),
            "turns": len(rewards),
            "status": status,
        },
    })
    session_record.status = "done"


class _ChannelPort(HumanBridgePort):
    """HumanBridgePort whose transport captures the parsed reply schema so
    the server can validate console payloads against the right fields."""

    def __init__(self, channel: SessionChannel, reply_deadline: float):
        super().__init__(transport=channel, reply_deadline=reply_deadline)
        self.channel = channel

    def query(self, gym_kind, role, rendered_system, conversation) -> str:
        from ..users.prompts import get_template

        self.channel.pending_schema = get_template(gym_kind, role).reply_schema
        return super().query(gym_kind, role, rendered_system, conversation)


class BridgeServer:
    def __init__(self, tasks: list[TaskSpec], max_turns: int, seed: int,
                 agent_factory, reply_deadline: float, once: bool):
        self.tasks = tasks
        self.max_turns = max_turns
        self.seed = seed
        self.agent_factory = agent_factory
        self.reply_deadline = reply_deadline
        self.once = once
        self.sessions: dict[str, HumanSession] = {}
        self.loop: asyncio.AbstractEventLoop | None = None

    def _ensure_sessions(self):
        for task in self.tasks:
            if task.task_id not in self.sessions:
                self.sessions[task.task_id] = HumanSession(
                    task=task,
                    channel=SessionChannel(task.task_id, self.loop))

    async def handle(self, websocket):
        channel: SessionChannel | None = None
        try:
            async for raw in websocket:
                try:
                    payload = json.loads(raw)
                    if not isinstance(payload, dict):
                        raise ValueError("frame must be a JSON object")
                except ValueError as exc:
                    await _send_error(websocket, "BadMessage", str(exc))
                    continue

                kind = payload.get("type")
                if kind == "join":
                    channel = await self._join(websocket, payload)
                elif kind == "human_reply":
                    await self._reply(websocket, channel, payload)
                else:
                    await _send_error(websocket, "BadMessage",
                                      f"unknown message type {kind!r}")
        except ConnectionClosed:
            pass
        finally:
            if channel is not None:
                channel.detach(websocket)

    async def _join(self, websocket, payload) -> SessionChannel | None:
        session_id = payload.get("session_id")
        record = self.sessions.get(session_id)
        if record is None:
            await _send_error(websocket, "SessionNotFound",
                              f"no session {session_id!r}")
            return None
        channel = record.channel
        if record.status == "waiting":
            record.status = "live"
            await channel.attach(websocket)
            agent = self.agent_factory(record.task)
            record.thread = threading.Thread(
                target=_drive,
                args=(record, agent, self.max_turns, self.reply_deadline),
                daemon=True)
            record.thread.start()
        else:
            # rejoin: replay the log, then resume live
            await channel.attach(websocket)
        return channel

    async def _reply(self, websocket, channel, payload) -> None:
        if channel is None:
            await _send_error(websocket, "BadMessage",
                              "join a session before replying")
            return
        if channel.pending_request is None or channel.pending_schema is None:
            await _send_error(websocket, "ValidationError",
                              "no reply is pending")
            return
        try:
            fields = normalize_reply(payload, channel.pending_schema)
        except ValueError as exc:
            await _send_error(websocket, "ValidationError", str(exc))
            return
        channel.replies.put(fields)

    async def run(self, host: str, port: int, ready=None):
        self.loop = asyncio.get_running_loop()
        self._ensure_sessions()
        async with ws_serve(self.handle, host, port) as server:
            actual_port = server.sockets[0].getsockname()[1]
            print(f"listening on ws://{host}:{actual_port}", flush=True)
            for session_id, record in self.sessions.items():
                print(f"session {session_id} waiting "
                      f"({record.task.gym_kind.value})", flush=True)
            if ready is not None:
                ready(actual_port)
            if self.once:
                while any(record.status != "done"
                          for record in self.sessions.values()):
                    await asyncio.sleep(0.1)
                # drain the last frames before closing
                await asyncio.sleep(0.2)
            else:
                await asyncio.Future()


async def _send_error(websocket, code: str, message: str) -> None:
    try:
        await websocket.send(json.dumps(
            {"type": "error", "code": code, "message": message},
            ensure_ascii=False))
    except ConnectionClosed:
        pass


def load_agent_script(path: str | Path) -> dict[str, list[dict]] | list[dict]:
    """Move list, or mapping of task_id to move list."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, (list, dict)):
        return data
    raise UserlError(f"agent script {path} must hold a list or mapping")


def serve_human_sessions(tasks: list[TaskSpec], host: str, port: int,
                         max_turns: int, seed: int,
                         agent_script: str | None,
                         policy_endpoint: str | None,
                         model: str = "policy",
                         reply_deadline: float = 300.0,
                         once: bool = False, ready=None) -> None:
    """Blocking entry point used by the command line."""
    if agent_script:
        script = load_agent_script(agent_script)

        def agent_factory(task: TaskSpec):
            moves = script.get(task.task_id) if isinstance(script, dict) else script
            if moves is None:
                moves = []
            return ScriptedAgent(moves=list(moves))
    else:
        endpoint = PolicyEndpoint(base_url=policy_endpoint, model=model,
                                  temperature=0.0)

        def agent_factory(task: TaskSpec):
            return PolicyAgent(client=HTTPPolicyClient(endpoint), seed=seed)

    server = BridgeServer(tasks=tasks, max_turns=max_turns, seed=seed,
                          agent_factory=agent_factory,
                          reply_deadline=reply_deadline, once=once)
    asyncio.run(server.run(host, port, ready=ready))
