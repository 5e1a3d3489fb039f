import asyncio
import logging
import time
import uuid
from dataclasses import dataclass
from typing import Any, Callable, Dict, Hashable, List, Mapping, Optional

from .config import load_settings
from .errors import LabError
from .event_bus import STREAMS, Event, EventBus, ProvenanceEnvelope, event_bus

logger = logging.getLogger(__name__)


# --- Task Status Tracking ---
class TaskStatus:
    IDLE = "idle"
    WORKING = "working"
    COMPLETED = "completed"
    ERROR = "error"


@dataclass
class TaskOutcome:
    key: Hashable
    status: str
    value: Any = None
    error: Optional[str] = None
    exit_code: int = 0
    provenance: Optional[ProvenanceEnvelope] = None


def _summary(value: Any) -> Dict[str, Any]:
    if hasattr(value, "to_row"):
        return value.to_row()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, (int, float, str, bool)) or value is None:
        return {"value": value}
    return {"type": type(value).__name__}


def _sort_key(key: Hashable):
    return (0, key) if isinstance(key, (int, float)) else (1, str(key))


class SweepOrchestrator:
    """Runs independent solver tasks in worker threads and keeps their provenance"""

    def __init__(self, max_workers: Optional[int] = None, bus: Optional[EventBus] = None, run_id: Optional[str] = None):
        self.max_workers = max_workers or load_settings().threads
        self.bus = bus or event_bus
        self.run_id = run_id or uuid.uuid4().hex[:12]
        self.task_statuses: Dict[Hashable, str] = {}
        self._provenance: List[ProvenanceEnvelope] = []

    async def _update_task_status(self, stage: str, key: Hashable, status: str, data: Optional[Dict[str, Any]] = None):
        self.task_statuses[key] = status
        status_data = {"key": str(key), "status": status}
        if data:
            status_data["results"] = data
        await self.bus.publish(STREAMS['task_status'], Event(
            type='task_status_update',
            run_id=self.run_id,
            stage=stage,
            data=status_data,
        ))
        logger.debug(f"🔄 Task {stage}[{key}] status: {status}")

    async def _run_one(self, stage: str, key: Hashable, fn: Callable[[], Any], inputs: Dict[str, Any],
                       semaphore: asyncio.Semaphore) -> TaskOutcome:
        async with semaphore:
            await self._update_task_status(stage, key, TaskStatus.WORKING)
            start_time = time.time()
            try:
                value = await asyncio.to_thread(fn)
            except LabError as e:
                processing_time = time.time() - start_time
                logger.error(f"❌ {stage}[{key}] failed after {processing_time:.2f}s: {e}")
                provenance = ProvenanceEnvelope(stage, {**inputs, "key": key}, {"error": str(e)}, TaskStatus.ERROR, processing_time)
                await self._update_task_status(stage, key, TaskStatus.ERROR, {"error": str(e)})
                return TaskOutcome(key, TaskStatus.ERROR, error=str(e), exit_code=e.exit_code, provenance=provenance)
            processing_time = time.time() - start_time

        outputs = _summary(value)
        provenance = ProvenanceEnvelope(stage, {**inputs, "key": key}, outputs, TaskStatus.COMPLETED, processing_time)
        await self._update_task_status(stage, key, TaskStatus.COMPLETED)
        await self.bus.publish(STREAMS['stage_results'], Event(
            type='task_completed', run_id=self.run_id, stage=stage,
            data={'key': str(key), 'provenance': provenance.to_dict()},
        ))
        logger.debug(f"✅ {stage}[{key}] completed in {processing_time:.2f}s")
        return TaskOutcome(key, TaskStatus.COMPLETED, value=value, provenance=provenance)

    async def run_tasks(self, tasks: Mapping[Hashable, Callable[[], Any]], stage: str,
                        inputs: Optional[Dict[str, Any]] = None) -> Dict[Hashable, TaskOutcome]:
        """Execute every task concurrently; the result is keyed and sorted by task key."""
        inputs = dict(inputs or {})
        semaphore = asyncio.Semaphore(self.max_workers)
        keys = list(tasks)
        for key in keys:
            self.task_statuses[key] = TaskStatus.IDLE

        logger.info(f"🚀 {stage}: running {len(keys)} tasks on {self.max_workers} workers")
        results = await asyncio.gather(
            *(self._run_one(stage, key, tasks[key], inputs, semaphore) for key in keys),
            return_exceptions=True,
        )

        outcomes: Dict[Hashable, TaskOutcome] = {}
        for key, result in zip(keys, results):
            if isinstance(result, BaseException):
                logger.error(f"❌ {stage}[{key}] crashed: {result!r}")
                provenance = ProvenanceEnvelope(stage, {**inputs, "key": key}, {"error": repr(result)}, TaskStatus.ERROR)
                outcomes[key] = TaskOutcome(key, TaskStatus.ERROR, error=repr(result), exit_code=1, provenance=provenance)
            else:
                outcomes[key] = result

        ordered = {key: outcomes[key] for key in sorted(outcomes, key=_sort_key)}
        self._provenance.extend(o.provenance for o in ordered.values() if o.provenance is not None)
        failed = sum(o.status == TaskStatus.ERROR for o in ordered.values())
        logger.info(f"📊 {stage}: {len(ordered) - failed} completed, {failed} failed")
        return ordered

    def run(self, tasks: Mapping[Hashable, Callable[[], Any]], stage: str,
            inputs: Optional[Dict[str, Any]] = None) -> Dict[Hashable, TaskOutcome]:
        return asyncio.run(self.run_tasks(tasks, stage, inputs))

    def provenance_chain(self, deterministic: bool = False) -> List[Dict[str, Any]]:
        return [p.to_dict(deterministic) for p in self._provenance]
