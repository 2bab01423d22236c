"""
A frozen base model against plain fine-tuning
=============================================

The bundled desk config generates two stations of seasonal data with an
upward TEMP drift. A model trained once on the base period (Static) falls
behind as the seasons move on; fine-tuning every season (Naive) keeps up.
"""

import numpy as np

from fedcontinual import bundled_config, load_config, make_strategy, run_experiment
from fedcontinual.evaluation import compute_af, compute_ap, compute_avgperf
from fedcontinual.harness import build_task_data, model_spec, train_settings

cfg = load_config(bundled_config("desk"))
data = build_task_data(cfg, "TEMP")
spec = model_spec(cfg, data)
print(f"input columns: {data.input_columns}")
print(f"{data.n_clients} clients, base + {data.n_tasks} seasonal tasks")

results = {}
for method in ["Static", "Naive"]:
    strategy = make_strategy(method, cfg.method_params(method, "TEMP"))
    results[method] = run_experiment(data, strategy, spec, train_settings(cfg), seed=1)

# Static never trains after the base task, so every row of its matrix is the same
print("\nStatic P x 1000:\n", np.round(results["Static"].P.entries * 1e3, 1))
print("Naive  P x 1000:\n", np.round(results["Naive"].P.entries * 1e3, 1))

print("\nRMSE x 1000 on each task right after it was learned")
for method, res in results.items():
    print(f"{method:<7}", np.round(res.P.diagonal() * 1e3, 1))

for method, res in results.items():
    P = res.P
    print(f"{method:<7} AF {compute_af(P) * 1e3:7.2f}  AP {compute_ap(P) * 1e3:7.2f}  "
          f"AvgPerf {compute_avgperf(P) * 1e3:7.2f}  CPU {res.cpu_seconds:.1f}s")
