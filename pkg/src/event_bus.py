import asyncio
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Awaitable, Callable, Dict, List, Optional, Union

logger = logging.getLogger(__name__)


@dataclass
class Event:
    """Event structure for the in-process bus"""
    type: str
    run_id: str
    stage: str
    data: Dict[str, Any]
    timestamp: float = None

    def __post_init__(self):
        if self.timestamp is None:
            self.timestamp = datetime.now().timestamp()


@dataclass
class ProvenanceEnvelope:
    """Provenance record for one computation stage"""
    stage: str
    inputs: Dict[str, Any]
    outputs: Dict[str, Any]
    status: str
    processing_time: float = 0.0
    timestamp: float = field(default_factory=lambda: datetime.now().timestamp())

    def to_dict(self, deterministic: bool = False) -> Dict[str, Any]:
        d = {
            "stage": self.stage,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "status": self.status,
        }
        if not deterministic:
            d["processing_time"] = self.processing_time
            d["timestamp"] = self.timestamp
        return d


Callback = Callable[[Event], Union[None, Awaitable[None]]]


class EventBus:
    """In-process publish/subscribe bus; keeps a bounded history per stream"""

    def __init__(self, history_limit: int = 10000):
        self.history_limit = history_limit
        self.subscribers: Dict[str, List[Callback]] = defaultdict(list)
        self._history: Dict[str, List[Event]] = defaultdict(list)

    def subscribe(self, stream: str, callback: Callback) -> None:
        self.subscribers[stream].append(callback)
        logger.debug(f"🔊 Subscribed {getattr(callback, '__name__', callback)} to {stream}")

    def unsubscribe(self, stream: str, callback: Callback) -> None:
        if callback in self.subscribers.get(stream, []):
            self.subscribers[stream].remove(callback)

    async def publish(self, stream: str, event: Event) -> int:
        """Deliver to every subscriber; a failing subscriber is logged, not raised."""
        log = self._history[stream]
        log.append(event)
        if len(log) > self.history_limit:
            del log[: len(log) - self.history_limit]

        delivered = 0
        for callback in list(self.subscribers.get(stream, [])):
            try:
                result = callback(event)
                if asyncio.iscoroutine(result):
                    await result
                delivered += 1
            except Exception as e:
                logger.error(f"❌ Subscriber failed on {event.type} in {stream}: {e}")
        logger.debug(f"📤 Published {event.type} to {stream}")
        return delivered

    def history(self, stream: str, run_id: Optional[str] = None) -> List[Event]:
        events = self._history.get(stream, [])
        return [e for e in events if run_id is None or e.run_id == run_id]

    def clear(self) -> None:
        self._history.clear()


# Global event bus instance
event_bus = EventBus()

# Stream names
STREAMS = {
    'task_status': 'lab:task_status',
    'stage_results': 'lab:stage_results',
    'aborts': 'lab:aborts',
}
