import asyncio

from src.errors import ConfigError
from src.event_bus import STREAMS, Event, EventBus
from src.orchestrator import SweepOrchestrator, TaskStatus


def failing():
    raise ConfigError("bad input")


def test_tasks_run_and_failures_are_isolated():
    bus = EventBus()
    orch = SweepOrchestrator(max_workers=2, bus=bus, run_id="run-1")
    outcomes = orch.run({2.0: lambda: 4.0, 1.0: failing, 0.5: lambda: 0.25}, stage="square")
    assert list(outcomes) == [0.5, 1.0, 2.0]
    assert outcomes[2.0].status == TaskStatus.COMPLETED and outcomes[2.0].value == 4.0
    assert outcomes[1.0].status == TaskStatus.ERROR and outcomes[1.0].exit_code == 2
    assert "bad input" in outcomes[1.0].error
    statuses = [e.data["status"] for e in bus.history(STREAMS["task_status"], run_id="run-1")]
    assert statuses.count(TaskStatus.WORKING) == 3
    assert len(bus.history(STREAMS["stage_results"])) == 2


def test_unexpected_exceptions_become_error_outcomes():
    orch = SweepOrchestrator(max_workers=1, bus=EventBus())
    outcomes = orch.run({"boom": lambda: 1 / 0}, stage="crash")
    assert outcomes["boom"].status == TaskStatus.ERROR
    assert outcomes["boom"].exit_code == 1


def test_provenance_chain_drops_timings_when_deterministic():
    orch = SweepOrchestrator(max_workers=1, bus=EventBus())
    orch.run({"a": lambda: 1}, stage="one", inputs={"N": 5})
    chain = orch.provenance_chain(deterministic=True)
    assert chain == [{"stage": "one", "inputs": {"N": 5, "key": "a"}, "outputs": {"value": 1}, "status": "completed"}]
    assert "timestamp" in orch.provenance_chain()[0]


def test_event_bus_delivers_and_survives_failing_subscribers():
    bus = EventBus(history_limit=2)
    seen = []

    async def record(event):
        seen.append(event.type)

    def broken(event):
        raise RuntimeError("subscriber bug")

    bus.subscribe("s", record)
    bus.subscribe("s", broken)

    async def publish_three():
        return [await bus.publish("s", Event(type=f"e{i}", run_id="r", stage="x", data={})) for i in range(3)]

    delivered = asyncio.run(publish_three())
    assert delivered == [1, 1, 1]
    assert seen == ["e0", "e1", "e2"]
    assert [e.type for e in bus.history("s")] == ["e1", "e2"]
    bus.unsubscribe("s", broken)
    assert bus.subscribers["s"] == [record]
