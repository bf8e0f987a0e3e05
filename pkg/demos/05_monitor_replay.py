"""Replay a captured keyword stream through a trained pipeline."""
from pathlib import Path

from iotcti.monitor import DEFAULT_KEYWORDS, ListSink, keyword_match, replay_source, run_monitor
from iotcti.pipeline import Pipeline

data = Path(__file__).resolve().parent.parent / "tests" / "data"
pipe = Pipeline.load(data / "monitor_pipeline.json")
print(pipe.model.spec.label())

print(DEFAULT_KEYWORDS)
print(keyword_match("biotic sensors are neat"))
print(keyword_match("a remote  attacker may flash the device"))

src = replay_source(data / "monitor_replay.jsonl")
sink = ListSink()
stats = run_monitor(src, pipe, sink, workers=4)
print(stats.to_dict())
print(f"harvest rate {100 * stats.harvest_rate_vs_unrelated:.4f}% of unrelated, "
      f"{100 * stats.harvest_rate_total:.2f}% of collected")
for alert in sink.alerts[:3]:
    print(alert.seq, alert.event_id, round(alert.score, 3), alert.matched_keywords)
