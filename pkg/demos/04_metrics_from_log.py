"""Closed-loop run, then the metric table computed from its log.

Run: python3 demos/04_metrics_from_log.py
"""

from riskgame.io import data_path, evaluate_log, load_scenario, scenario_adapters
from riskgame.simulator import run

scenario = load_scenario(data_path("scenarios/crossing.json"))
log = run(scenario, steps=12, adapters=scenario_adapters(scenario))
print("modes:", [log.records[i]["selected_name"] for i in range(len(log.records))])

# %% Metrics over every frame whose horizon the log covers
report = evaluate_log(log)
print(f"{report.frames} frames")
print(report.to_table())
